#include "smlpde/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>

#include "smlpde/errors.hpp"
#include "smlpde/svg.hpp"

namespace smlpde {

namespace {

std::vector<int> layer_sizes(int input, int width, int depth) {
  std::vector<int> sizes{input};
  for (int k = 1; k < depth; ++k) sizes.push_back(width);
  sizes.push_back(1);
  return sizes;
}

std::vector<int> hidden(int width, int depth) { return std::vector<int>(std::max(depth - 1, 0), width); }

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write '" + path + "'");
  return os;
}

// Visited ground-truth network inputs with the true f and its derivative in
// the state value.
struct Visited {
  int dim = 0;
  std::vector<double> z;
  std::vector<double> f;
  std::vector<double> df;  // d f / d u (component 1 of z)
  double u_min = 0, u_max = 0;
};

Visited visited_points(const StateTrajectory& truth, const GroundTruthSpec& spec, const Grid& g) {
  Visited v;
  v.dim = static_cast<int>(network_input_size(g.d, spec.kappa, 1));
  v.u_min = std::numeric_limits<double>::infinity();
  v.u_max = -v.u_min;
  std::vector<double> z(v.dim);
  for (const auto& exp : truth) {
    const auto jets = state_jets(exp, spec.kappa);
    for (int n = 0; n < g.nt; ++n)
      for (std::size_t s = 0; s < g.spatial_size(); ++s) {
        gather_network_input(jets, g, n, s, z);
        v.z.insert(v.z.end(), z.begin(), z.end());
        v.f.push_back(spec.f_true.value(z[1]));
        v.df.push_back(spec.f_true.derivative(z[1]));
        v.u_min = std::min(v.u_min, z[1]);
        v.u_max = std::max(v.u_max, z[1]);
      }
  }
  return v;
}

void f_errors(const MlpParams& net, const Visited& v, double& f_err, double& g_err) {
  f_err = 0.0;
  g_err = 0.0;
  MlpEvaluator ev(net);
  std::vector<double> grad(v.dim);
  const std::size_t count = v.f.size();
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const double> z(v.z.data() + i * v.dim, v.dim);
    f_err = std::max(f_err, std::abs(ev.forward(z) - v.f[i]));
    ev.input_gradient(grad);
    for (int k = 0; k < v.dim; ++k) {
      const double want = k == 1 ? v.df[i] : 0.0;
      g_err = std::max(g_err, std::abs(grad[k] - want));
    }
  }
}

double state_error(const StateTrajectory& u, const StateTrajectory& truth) {
  double s = 0.0;
  for (std::size_t l = 0; l < u.size(); ++l)
    for (std::size_t e = 0; e < u[l].size(); ++e) {
      std::vector<double> d(u[l][e].values.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[l][e].values[i] - truth[l][e].values[i];
      s += bochner_power(d, u[l][e].grid, 2.0, 2.0);
    }
  return std::sqrt(s);
}

double param_error(const PhysicalParams& phi, const PhysicalParams& truth) {
  double s = 0.0;
  for (std::size_t l = 0; l < phi.fields.size(); ++l)
    for (std::size_t e = 0; e < phi.fields[l].size(); ++e)
      for (std::size_t k = 0; k < phi.fields[l][e].size(); ++k) {
        const auto& a = phi.fields[l][e][k];
        const auto& b = truth.fields[l][e][k];
        std::vector<double> d(a.values.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.values[i] - b.values[i];
        s += spatial_l2_squared(d, a.grid);
      }
  return std::sqrt(s);
}

void write_trace_header(std::ostream& os) {
  os << "m,iter,total,residual,initial,boundary,data,r0,f_lrho,f_gradsup,theta_norm,hard_gradsup\n";
}

void write_trace_row(std::ostream& os, int m, const TraceRow& r) {
  const auto& b = r.breakdown;
  os << m << ',' << r.iter << ',' << format_real(b.total) << ',' << format_real(b.residual) << ','
     << format_real(b.initial) << ',' << format_real(b.boundary) << ',' << format_real(b.data) << ','
     << format_real(b.r0) << ',' << format_real(b.f_lrho) << ',' << format_real(b.f_gradsup) << ','
     << format_real(b.theta_norm) << ',' << format_real(b.hard_gradsup) << '\n';
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

ConvergenceReport run_convergence_study(const ExperimentConfig& cfg, const std::string& output_dir,
                                        std::ostream* log) {
  cfg.validate();
  const Grid g = cfg.grid.make();
  const GroundTruthSpec& spec = cfg.truth;
  const int kappa = spec.kappa;
  const StateTrajectory truth = simulate(spec, g);
  const PhysicalParams phi_true = true_parameters(spec, g);
  const Visited visited = visited_points(truth, spec, g);
  const UBox box = derive_ubox(g, kappa, 1, cfg.objective.box_margin, reference_jet_sup(truth, kappa),
                               {cfg.objective.lattice_per_axis, cfg.objective.halton_points});
  const int input = static_cast<int>(network_input_size(g.d, kappa, 1));
  const Activation act{cfg.network.activation};
  ensure_dir(output_dir);

  ConvergenceReport report;
  report.data_range = visited.u_max - visited.u_min;
  report.beta_hat = cfg.schedule.beta_hat;

  Variables prev;
  bool have_prev = false;
  double tau0 = 0.0;
  std::vector<TraceRow> trace;

  for (int m = 1; m <= cfg.schedule.m_max; ++m) {
    StudyRow row;
    row.m = m;
    row.lambda = cfg.schedule.lambda(m);
    row.mu = cfg.schedule.mu(m);
    row.nu = cfg.schedule.nu(m);
    row.noise = cfg.measurement.noise0 / std::pow(static_cast<double>(m), cfg.measurement.noise_decay);
    row.width = cfg.network.width(m);

    const MeasurementOp op = MeasurementOp::make(cfg.measurement.family, g, m);
    const Dataset data = make_dataset(truth, op, row.noise, cfg.measurement.seed + 1000ULL * (m - 1));
    if (!output_dir.empty()) write_dataset(output_dir, data);

    Weights w;
    w.lambda = row.lambda;
    w.mu = row.mu;
    w.nu = row.nu;
    w.q = cfg.objective.q;
    w.r = cfg.objective.r;
    w.rho = cfg.objective.rho;
    w.param_norm_p = cfg.objective.param_norm_p;

    const bool warm = have_prev && cfg.optimizer.warm_start;
    const int restarts = warm ? 1 : cfg.optimizer.restarts;
    const std::vector<int> sizes = layer_sizes(input, row.width, cfg.network.depth);

    std::vector<Variables> starts;
    for (int r = 0; r < restarts; ++r) {
      Variables v;
      const std::uint64_t net_seed = cfg.network.seed + 1000ULL * m + r;
      if (warm) {
        v = prev;
        for (auto& net : v.theta) net = grow_mlp(net, hidden(row.width, cfg.network.depth), net_seed);
      } else {
        v.u = initial_states(data, op, cfg.optimizer.init_smoothing);
        v.phi = PhysicalParams::zeros(spec.kind, g, spec.experiments(), 1);
        v.theta = {init_mlp(sizes, act, net_seed)};
      }
      starts.push_back(std::move(v));
    }

    // The temperature scale comes from the first start of the first m.
    if (m == 1) {
      const FRegularizer fr = f_regularizer(starts[0].theta, box, w.rho, 1.0, true);
      tau0 = cfg.objective.tau0_factor * (fr.hard_gradsup > 0.0 ? fr.hard_gradsup : 1.0);
    }
    w.tau = tau0 / std::pow(static_cast<double>(m), cfg.objective.tau_decay);
    row.tau = w.tau;

    Problem problem{g, data, op, spec.kind, kappa, w, box, cfg.objective.hard_gradsup,
                    cfg.objective.enforce_box};

    bool failed = false;
    double best_total = std::numeric_limits<double>::infinity();
    Variables best_vars;
    for (int r = 0; r < restarts && !failed; ++r) {
      try {
        const ObjectiveFn fn = objective_closure(problem, starts[r]);
        MinimizeResult res = minimize(starts[r].pack(), fn, cfg.optimizer.base);
        if (log)
          *log << "m=" << m << " restart=" << r << " iters=" << res.trace.size()
               << " best_total=" << format_real(res.best.total) << '\n';
        if (res.best.total < best_total) {
          best_total = res.best.total;
          best_vars = starts[r];
          best_vars.unpack(res.x);
          row.breakdown = res.best;
          row.iterations = static_cast<int>(res.trace.size());
          row.restart = r;
          trace = std::move(res.trace);
        }
      } catch (const Diverged& e) {
        row.status = std::string("diverged: ") + e.what();
        failed = true;
      } catch (const JetContainmentError& e) {
        row.status = std::string("jet outside box: ") + e.what();
        failed = true;
      }
    }

    if (!failed) {
      f_errors(best_vars.theta[0], visited, row.f_error, row.grad_error);
      row.state_error = state_error(best_vars.u, truth);
      row.param_error = param_error(best_vars.phi, phi_true);
      row.psi_hat = param_norm(best_vars.theta, w.param_norm_p);
      prev = std::move(best_vars);
      have_prev = true;
      if (!output_dir.empty()) {
        std::ofstream os = open_out(output_dir + "/trace_m" + std::to_string(m) + ".csv");
        write_trace_header(os);
        for (const TraceRow& t : trace) write_trace_row(os, m, t);
      }
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.f_error = row.grad_error = row.state_error = row.param_error = row.psi_hat = nan;
    }
    if (log)
      *log << "m=" << m << " status=" << row.status << " f_error=" << format_real(row.f_error)
           << " state_error=" << format_real(row.state_error)
           << " param_error=" << format_real(row.param_error) << '\n';
    report.rows.push_back(row);
    if (failed) break;
  }

  std::vector<double> rates, nupsi;
  for (const StudyRow& r : report.rows) {
    if (r.status != "ok") break;
    ScheduleRow s;
    s.m = r.m;
    s.lambda = r.lambda;
    s.mu = r.mu;
    s.nu = r.nu;
    s.lambda_rate = r.lambda * std::pow(static_cast<double>(r.m), -report.beta_hat * cfg.objective.q);
    s.nu_psi = r.nu * r.psi_hat;
    rates.push_back(s.lambda_rate);
    nupsi.push_back(s.nu_psi);
    report.schedule.push_back(s);
  }
  report.lambda_rate_decreasing = strictly_decreasing(rates);
  report.nu_psi_decreasing = strictly_decreasing(nupsi);

  if (!output_dir.empty()) {
    {
      std::ofstream os = open_out(output_dir + "/report.csv");
      write_report_csv(os, report);
    }
    {
      std::ofstream os = open_out(output_dir + "/schedule.csv");
      os << "m,lambda,mu,nu,lambda_rate,nu_psi\n";
      for (const ScheduleRow& s : report.schedule)
        os << s.m << ',' << format_real(s.lambda) << ',' << format_real(s.mu) << ','
           << format_real(s.nu) << ',' << format_real(s.lambda_rate) << ',' << format_real(s.nu_psi)
           << '\n';
      os << "# beta_hat = " << format_real(report.beta_hat) << '\n';
      os << "# lambda_rate_decreasing = " << (report.lambda_rate_decreasing ? "yes" : "no (flagged)")
         << '\n';
      os << "# nu_psi_decreasing = " << (report.nu_psi_decreasing ? "yes" : "no (flagged)") << '\n';
    }
    std::vector<double> xs;
    Series fe{"f error", {}}, se{"state error", {}}, pe{"parameter error", {}};
    for (const StudyRow& r : report.rows) {
      xs.push_back(r.m);
      fe.y.push_back(r.f_error);
      se.y.push_back(r.state_error);
      pe.y.push_back(r.param_error);
    }
    write_line_chart(output_dir + "/f_error.svg", "errors against m", "m", xs, {fe, se, pe}, true);
  }
  return report;
}

void write_report_csv(std::ostream& os, const ConvergenceReport& report) {
  os << "m,status,lambda,mu,nu,tau,noise,width,iterations,restart,total,residual,initial,boundary,"
        "data,r0,f_lrho,f_gradsup,theta_norm,hard_gradsup,f_error,grad_error,state_error,"
        "param_error,psi_hat\n";
  for (const StudyRow& r : report.rows) {
    const auto& b = r.breakdown;
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    os << r.m << ',' << status << ',' << format_real(r.lambda) << ',' << format_real(r.mu) << ','
       << format_real(r.nu) << ',' << format_real(r.tau) << ',' << format_real(r.noise) << ','
       << r.width << ',' << r.iterations << ',' << r.restart << ',' << format_real(b.total) << ','
       << format_real(b.residual) << ',' << format_real(b.initial) << ',' << format_real(b.boundary)
       << ',' << format_real(b.data) << ',' << format_real(b.r0) << ',' << format_real(b.f_lrho) << ','
       << format_real(b.f_gradsup) << ',' << format_real(b.theta_norm) << ','
       << format_real(b.hard_gradsup) << ',' << format_real(r.f_error) << ','
       << format_real(r.grad_error) << ',' << format_real(r.state_error) << ','
       << format_real(r.param_error) << ',' << format_real(r.psi_hat) << '\n';
  }
}

ProbeReport approximation_probe(const ProbeConfig& cfg, double param_norm_p,
                                const std::string& output_dir, std::ostream* log) {
  if (!(cfg.hi > cfg.lo) || cfg.train_points < 2 || cfg.heldout_points < 2)
    throw InvalidArgument("probe needs hi > lo and at least two points per lattice");
  auto lattice = [&](int n) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = cfg.lo + (cfg.hi - cfg.lo) * i / (n - 1);
    return x;
  };
  const std::vector<double> xt = lattice(cfg.train_points);
  const std::vector<double> xh = lattice(cfg.heldout_points);
  std::vector<double> yt(xt.size());
  for (std::size_t i = 0; i < xt.size(); ++i) yt[i] = cfg.function.value(xt[i]);

  ProbeReport report;
  for (double x : xh) report.analytic_grad_sup = std::max(report.analytic_grad_sup, std::abs(cfg.function.derivative(x)));

  for (int width : cfg.widths) {
    ProbeRow row;
    row.width = width;
    MlpParams net = init_mlp(layer_sizes(1, width, cfg.depth), Activation{}, cfg.seed + width);
    std::fill(net.weights.back().begin(), net.weights.back().end(), 0.0);
    std::fill(net.biases.back().begin(), net.biases.back().end(), 0.0);
    MlpParams work = net;
    const std::size_t np = net.param_count();
    const double inv_n = 1.0 / static_cast<double>(xt.size());
    ObjectiveFn fn = [&](std::span<const double> flat) {
      work.assign_flat(flat);
      MlpEvaluator ev(work);
      Evaluation out;
      out.gradient.assign(np, 0.0);
      double loss = 0.0;
      for (std::size_t i = 0; i < xt.size(); ++i) {
        const double z[1] = {xt[i]};
        const double r = ev.forward(z) - yt[i];
        loss += inv_n * r * r;
        ev.backward(2.0 * inv_n * r, out.gradient, {});
      }
      out.breakdown.total = loss;
      out.breakdown.data = loss;
      return out;
    };
    try {
      const MinimizeResult res = minimize(net.flatten(), fn, cfg.optimizer);
      net.assign_flat(res.x);
      row.iterations = static_cast<int>(res.trace.size());
      row.train_loss = res.best.total;
      MlpEvaluator ev(net);
      double gz[1];
      for (double x : xh) {
        const double z[1] = {x};
        row.sup_error = std::max(row.sup_error, std::abs(ev.forward(z) - cfg.function.value(x)));
        ev.input_gradient(gz);
        row.grad_sup = std::max(row.grad_sup, std::abs(gz[0]));
        row.grad_sup_error = std::max(row.grad_sup_error, std::abs(gz[0] - cfg.function.derivative(x)));
      }
      row.param_norm = param_norm(net, param_norm_p);
    } catch (const Diverged& e) {
      row.status = std::string("diverged: ") + e.what();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.sup_error = row.grad_sup_error = row.grad_sup = row.param_norm = row.train_loss = nan;
    }
    if (log)
      *log << "width=" << width << " status=" << row.status << " sup_error=" << format_real(row.sup_error)
           << " grad_sup=" << format_real(row.grad_sup) << '\n';
    report.rows.push_back(row);
  }

  std::vector<double> lx, ly;
  for (const ProbeRow& r : report.rows)
    if (r.status == "ok" && r.sup_error > 0.0) {
      lx.push_back(std::log(static_cast<double>(r.width)));
      ly.push_back(std::log(r.sup_error));
    }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= lx.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    report.beta_hat = sxx > 0 ? -sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  } else {
    report.beta_hat = std::numeric_limits<double>::quiet_NaN();
  }

  if (!output_dir.empty()) {
    ensure_dir(output_dir);
    std::ofstream os = open_out(output_dir + "/probe.csv");
    write_probe_csv(os, report);
  }
  return report;
}

void write_probe_csv(std::ostream& os, const ProbeReport& report) {
  os << "width,status,iterations,train_loss,sup_error,grad_sup_error,grad_sup,param_norm,log_width,"
        "log_sup_error\n";
  for (const ProbeRow& r : report.rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    os << r.width << ',' << status << ',' << r.iterations << ',' << format_real(r.train_loss) << ','
       << format_real(r.sup_error) << ',' << format_real(r.grad_sup_error) << ','
       << format_real(r.grad_sup) << ',' << format_real(r.param_norm) << ','
       << format_real(std::log(static_cast<double>(r.width))) << ','
       << format_real(std::log(r.sup_error)) << '\n';
  }
  os << "# analytic_grad_sup = " << format_real(report.analytic_grad_sup) << '\n';
  os << "# beta_hat = " << format_real(report.beta_hat) << '\n';
}

GradcheckReport gradcheck_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const Grid g = cfg.grid.make();
  const GroundTruthSpec& spec = cfg.truth;
  const StateTrajectory truth = simulate(spec, g);
  const UBox box = derive_ubox(g, spec.kappa, 1, cfg.objective.box_margin,
                               reference_jet_sup(truth, spec.kappa),
                               {cfg.objective.lattice_per_axis, cfg.objective.halton_points});
  const MeasurementOp op = MeasurementOp::make(cfg.measurement.family, g, 1);
  const Dataset data = make_dataset(truth, op, cfg.measurement.noise0, cfg.measurement.seed);
  Weights w;
  w.lambda = cfg.schedule.lambda(1);
  w.mu = cfg.schedule.mu(1);
  w.nu = cfg.schedule.nu(1);
  w.q = cfg.objective.q;
  w.r = cfg.objective.r;
  w.rho = cfg.objective.rho;
  w.param_norm_p = cfg.objective.param_norm_p;
  Variables v;
  v.u = initial_states(data, op, cfg.optimizer.init_smoothing);
  v.phi = true_parameters(spec, g);
  const int input = static_cast<int>(network_input_size(g.d, spec.kappa, 1));
  v.theta = {init_mlp(layer_sizes(input, cfg.network.width(1), cfg.network.depth),
                      Activation{cfg.network.activation}, cfg.network.seed)};
  const FRegularizer fr = f_regularizer(v.theta, box, w.rho, 1.0, true);
  w.tau = cfg.objective.tau0_factor * (fr.hard_gradsup > 0.0 ? fr.hard_gradsup : 1.0);
  Problem problem{g, data, op, spec.kind, spec.kappa, w, box, cfg.objective.hard_gradsup, false};

  const ObjectiveFn fn = objective_closure(problem, v);
  const std::vector<double> x = v.pack();
  const Variables::Blocks b = v.blocks();
  std::mt19937_64 rng(cfg.gradcheck.seed);
  auto sample = [&](std::size_t lo, std::size_t hi, std::size_t& count) {
    std::vector<std::size_t> coords;
    if (hi <= lo) return coords;
    if (hi - lo <= static_cast<std::size_t>(cfg.gradcheck.samples)) {
      for (std::size_t i = lo; i < hi; ++i) coords.push_back(i);
    } else {
      std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
      for (int i = 0; i < cfg.gradcheck.samples; ++i) coords.push_back(pick(rng));
    }
    count = coords.size();
    return coords;
  };
  GradcheckReport rep;
  const auto cu = sample(b.u_begin, b.u_end, rep.u_coords);
  const auto cp = sample(b.phi_begin, b.phi_end, rep.phi_coords);
  const auto ct = sample(b.theta_begin, b.theta_end, rep.theta_coords);
  rep.u = finite_diff_gradcheck_at(x, fn, cu, cfg.gradcheck.step);
  rep.phi = finite_diff_gradcheck_at(x, fn, cp, cfg.gradcheck.step);
  rep.theta = finite_diff_gradcheck_at(x, fn, ct, cfg.gradcheck.step);
  return rep;
}

}  // namespace smlpde
