#include "smlpde/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "smlpde/errors.hpp"

namespace smlpde {

std::string to_string(Method method) {
  return method == Method::adaptive ? "adaptive" : "gd_linesearch";
}

Method method_from_string(const std::string& name) {
  if (name == "adaptive") return Method::adaptive;
  if (name == "gd_linesearch") return Method::gd_linesearch;
  throw InvalidArgument("unknown optimizer method '" + name + "'");
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return s;
}

}  // namespace

MinimizeResult minimize(std::vector<double> x, const ObjectiveFn& fn, const OptimizerConfig& cfg,
                        const std::function<void(const TraceRow&)>& on_iter) {
  if (cfg.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(cfg.rate > 0.0)) throw InvalidArgument("optimizer rate must be > 0");
  if (cfg.final_rate < 0.0) throw InvalidArgument("final_rate must be >= 0");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0)) throw InvalidArgument("backtrack must be in (0, 1)");

  MinimizeResult res;
  const std::size_t n = x.size();
  std::vector<double> m1(n, 0.0), m2(n, 0.0), trial(n);
  double b1t = 1.0, b2t = 1.0;
  double base_step = cfg.rate;
  double best = std::numeric_limits<double>::infinity();

  Evaluation ev = fn(x);
  for (int k = 0; k < cfg.max_iters; ++k) {
    if (!std::isfinite(ev.breakdown.total) || !all_finite(ev.gradient))
      throw Diverged("objective or gradient is not finite", static_cast<std::size_t>(k));
    if (ev.gradient.size() != n) throw InvalidArgument("gradient size does not match the variables");

    TraceRow row;
    row.iter = k;
    row.breakdown = ev.breakdown;
    row.grad_inf = inf_norm(ev.gradient);
    row.grad_sq = sq_norm(ev.gradient);
    if (ev.breakdown.total < best) {
      best = ev.breakdown.total;
      res.x = x;
      res.best = ev.breakdown;
    }
    row.best_total = best;

    const bool done = row.grad_inf < cfg.grad_tol;
    const bool last = k + 1 == cfg.max_iters;
    if (done || last) {
      res.converged = done;
      res.trace.push_back(row);
      if (on_iter) on_iter(row);
      break;
    }

    if (cfg.method == Method::adaptive) {
      b1t *= cfg.beta1;
      b2t *= cfg.beta2;
      double rate = cfg.rate;
      if (cfg.final_rate > 0.0 && cfg.max_iters > 2)
        rate *= std::pow(cfg.final_rate / cfg.rate, static_cast<double>(k) / (cfg.max_iters - 2));
      for (std::size_t i = 0; i < n; ++i) {
        const double g = ev.gradient[i];
        m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g;
        m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g * g;
        const double mh = m1[i] / (1.0 - b1t);
        const double vh = m2[i] / (1.0 - b2t);
        x[i] -= rate * mh / (std::sqrt(vh) + cfg.epsilon);
      }
      res.trace.push_back(row);
      if (on_iter) on_iter(row);
      ev = fn(x);
      continue;
    }

    // Armijo backtracking along the negative gradient. Each search starts
    // from twice the previously accepted step.
    double alpha = base_step;
    bool accepted = false;
    Evaluation next;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt, alpha *= cfg.backtrack) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - alpha * ev.gradient[i];
      next = fn(trial);
      if (std::isfinite(next.breakdown.total) &&
          next.breakdown.total <= ev.breakdown.total - cfg.armijo * alpha * row.grad_sq) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decrease representable along the gradient: stationary to working
      // precision.
      res.trace.push_back(row);
      if (on_iter) on_iter(row);
      break;
    }
    row.step = alpha;
    res.trace.push_back(row);
    if (on_iter) on_iter(row);
    base_step = 2.0 * alpha;
    x.swap(trial);
    ev = std::move(next);
  }
  return res;
}

double finite_diff_gradcheck_at(std::span<const double> x0, const ObjectiveFn& fn,
                                std::span<const std::size_t> coords, double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) throw InvalidArgument("gradcheck step must be in [1e-7, 1e-3]");
  std::vector<double> x(x0.begin(), x0.end());
  const Evaluation base = fn(x);
  // Differences below the rounding level of the central quotient are noise.
  const double floor =
      10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(base.breakdown.total)) /
      step;
  double worst = 0.0;
  for (std::size_t c : coords) {
    if (c >= x.size()) throw InvalidArgument("gradcheck coordinate out of range");
    const double keep = x[c];
    x[c] = keep + step;
    const double fp = fn(x).breakdown.total;
    x[c] = keep - step;
    const double fm = fn(x).breakdown.total;
    x[c] = keep;
    const double fd = (fp - fm) / (2.0 * step);
    const double g = base.gradient[c];
    const double scale = std::max({std::abs(fd), std::abs(g), floor});
    const double diff = std::abs(fd - g);
    if (diff == 0.0) continue;
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

double finite_diff_gradcheck(std::span<const double> x, const ObjectiveFn& fn, int samples,
                             double step, std::uint64_t seed) {
  std::vector<std::size_t> coords;
  if (samples <= 0 || x.empty()) return 0.0;
  if (static_cast<std::size_t>(samples) >= x.size()) {
    coords.resize(x.size());
    std::iota(coords.begin(), coords.end(), 0);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    for (int i = 0; i < samples; ++i) coords.push_back(pick(rng));
  }
  return finite_diff_gradcheck_at(x, fn, coords, step);
}

ObjectiveFn objective_closure(const Problem& problem, const Variables& shape_template) {
  auto vars = std::make_shared<Variables>(shape_template);
  auto grad = std::make_shared<Variables>(shape_template.zeros_like());
  return [&problem, vars, grad](std::span<const double> flat) {
    vars->unpack(flat);
    Evaluation ev;
    ev.breakdown = gradient(*vars, problem, *grad);
    ev.gradient = grad->pack();
    return ev;
  };
}

StateTrajectory initial_states(const Dataset& data, const MeasurementOp& op, double smoothing) {
  StateTrajectory out;
  for (const ExperimentData& exp : data.experiments) {
    std::vector<Field> states;
    for (const Field& y : exp.y) {
      Field u = y;
      const Grid& g = y.grid;
      if (op.kind() == MeasurementKind::subsample && g.d == 1 && op.stride() > 1) {
        const int nx = g.nx;
        const auto& mask = op.mask();
        for (int n = 0; n < g.nt; ++n) {
          auto row = u.slice(n);
          int left = -1;
          for (int i = 0; i < nx; ++i) {
            if (mask[i] == 0.0) continue;
            if (left >= 0)
              for (int j = left + 1; j < i; ++j) {
                const double s = static_cast<double>(j - left) / (i - left);
                row[j] = (1.0 - s) * row[left] + s * row[i];
              }
            else
              for (int j = 0; j < i; ++j) row[j] = row[i];
            left = i;
          }
          for (int j = left + 1; j < nx; ++j) row[j] = row[left];
        }
      }
      if (smoothing > 0.0) u = MeasurementOp::gaussian(g, smoothing).apply(u);
      states.push_back(std::move(u));
    }
    out.push_back(std::move(states));
  }
  return out;
}

}  // namespace smlpde
