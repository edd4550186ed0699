#include "smlpde/objective.hpp"

#include <algorithm>
#include <cmath>

#include "smlpde/errors.hpp"
#include "smlpde/smooth_max.hpp"

namespace smlpde {

void Weights::validate() const {
  if (!(lambda >= 0.0) || !(mu >= 0.0) || !(nu >= 0.0))
    throw InvalidArgument("objective weights must be >= 0");
  if (!(q >= 1.0) || !(r >= 1.0)) throw InvalidArgument("q and r must be >= 1");
  if (!(rho > 1.0) || !std::isfinite(rho)) throw InvalidArgument("rho must lie in (1, inf)");
  if (!(param_norm_p >= 1.0)) throw InvalidArgument("param_norm_p must be >= 1");
  if (!(tau > 0.0)) throw InvalidArgument("tau must be > 0");
}

double UBox::volume() const { return std::pow(2.0 * radius, dim); }

bool UBox::contains(std::span<const double> z) const {
  for (double v : z)
    if (std::abs(v) > radius) return false;
  return true;
}

double reference_jet_sup(const StateTrajectory& reference, int kappa) {
  double sup = 0.0;
  for (const auto& exp : reference)
    for (const auto& u : exp)
      for (const auto& c : jet(u, kappa).components) sup = std::max(sup, sup_norm(c));
  return sup;
}

namespace {

double radical_inverse(std::size_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                           43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

}  // namespace

UBox derive_ubox(const Grid& g, int kappa, int equations, double margin,
                 std::optional<double> jet_sup, const UBoxSampling& sampling) {
  if (!(margin >= 1.0)) throw InvalidArgument("box margin must be >= 1");
  if (!jet_sup) throw InvalidArgument("derive_ubox needs a reference jet bound");
  if (!(*jet_sup >= 0.0)) throw InvalidArgument("jet bound must be >= 0");
  UBox box;
  box.dim = static_cast<int>(network_input_size(g.d, kappa, equations));
  box.radius = g.t_end + margin * *jet_sup;
  const int D = box.dim;
  if (D <= 2) {
    const int k = sampling.lattice_per_axis;
    if (k < 2) throw InvalidArgument("lattice needs >= 2 points per axis");
    auto w1 = trapezoid_weights(k, 1.0 / (k - 1));
    std::size_t total = 1;
    for (int a = 0; a < D; ++a) total *= static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t rest = i;
      double w = 1.0;
      std::vector<double> z(D);
      for (int a = D - 1; a >= 0; --a) {
        const int idx = static_cast<int>(rest % k);
        rest /= k;
        z[a] = -box.radius + 2.0 * box.radius * idx / (k - 1);
        w *= w1[idx];
      }
      box.samples.insert(box.samples.end(), z.begin(), z.end());
      box.sample_weights.push_back(w);
    }
  } else {
    if (D > static_cast<int>(std::size(kPrimes))) throw Unsupported("box dimension too large for Halton set");
    const int count = sampling.halton_points;
    if (count < 1) throw InvalidArgument("Halton set needs >= 1 point");
    for (int i = 1; i <= count; ++i)
      for (int a = 0; a < D; ++a)
        box.samples.push_back(-box.radius + 2.0 * box.radius * radical_inverse(i, kPrimes[a]));
    box.sample_weights.assign(count, 1.0 / count);
  }
  return box;
}

FRegularizer f_regularizer(std::span<const MlpParams> nets, const UBox& box, double rho,
                           double tau, bool hard, std::vector<std::vector<double>>* grads) {
  if (box.count() == 0) throw InvalidArgument("box sample set is empty");
  FRegularizer out;
  const double vol = box.volume();
  const std::size_t S = box.count();
  std::vector<double> g(box.dim), mags(S), soft;
  std::vector<int> argmax(S);
  std::vector<double> sign(S);
  for (std::size_t e = 0; e < nets.size(); ++e) {
    const MlpParams& net = nets[e];
    if (net.input_size() != box.dim)
      throw InvalidArgument("network input size " + std::to_string(net.input_size()) +
                            " != box dimension " + std::to_string(box.dim));
    MlpEvaluator ev(net);
    std::span<double> dtheta;
    if (grads) dtheta = (*grads)[e];
    double lrho = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const double f = ev.forward(box.sample(s));
      const double af = std::abs(f);
      lrho += box.sample_weights[s] * std::pow(af, rho);
      ev.input_gradient(g);
      int j = 0;
      for (int k = 1; k < box.dim; ++k)
        if (std::abs(g[k]) > std::abs(g[j])) j = k;
      argmax[s] = j;
      mags[s] = std::abs(g[j]);
      sign[s] = g[j] > 0 ? 1.0 : (g[j] < 0 ? -1.0 : 0.0);
      if (grads && af > 0.0) {
        const double d = rho == 2.0 ? 2.0 * f : rho * std::pow(af, rho - 1.0) * (f > 0 ? 1.0 : -1.0);
        ev.backward(vol * box.sample_weights[s] * d, dtheta, {});
      }
    }
    out.lrho += vol * lrho;
    const auto top = std::max_element(mags.begin(), mags.end());
    out.hard_gradsup += *top;
    if (hard) {
      out.gradsup += *top;
      if (grads) {
        const std::size_t s = static_cast<std::size_t>(top - mags.begin());
        ev.forward(box.sample(s));
        ev.input_partial_backward(argmax[s], sign[s], dtheta);
      }
    } else {
      out.gradsup += smooth_max(mags, tau, grads ? &soft : nullptr);
      if (grads) {
        for (std::size_t s = 0; s < S; ++s) {
          const double w = soft[s] * sign[s];
          if (w == 0.0) continue;
          ev.forward(box.sample(s));
          ev.input_partial_backward(argmax[s], w, dtheta);
        }
      }
    }
  }
  return out;
}

std::size_t Variables::size() const {
  std::size_t n = 0;
  for (const auto& exp : u)
    for (const auto& f : exp) n += f.values.size();
  for (const auto& exp : phi.fields)
    for (const auto& eq : exp)
      for (const auto& f : eq) n += f.values.size();
  for (const auto& net : theta) n += net.param_count();
  return n;
}

Variables::Blocks Variables::blocks() const {
  Blocks b{};
  std::size_t n = 0;
  b.u_begin = n;
  for (const auto& exp : u)
    for (const auto& f : exp) n += f.values.size();
  b.u_end = b.phi_begin = n;
  for (const auto& exp : phi.fields)
    for (const auto& eq : exp)
      for (const auto& f : eq) n += f.values.size();
  b.phi_end = b.theta_begin = n;
  for (const auto& net : theta) n += net.param_count();
  b.theta_end = n;
  return b;
}

std::vector<double> Variables::pack() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const auto& exp : u)
    for (const auto& f : exp) flat.insert(flat.end(), f.values.begin(), f.values.end());
  for (const auto& exp : phi.fields)
    for (const auto& eq : exp)
      for (const auto& f : eq) flat.insert(flat.end(), f.values.begin(), f.values.end());
  for (const auto& net : theta) {
    const auto p = net.flatten();
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return flat;
}

void Variables::unpack(std::span<const double> flat) {
  if (flat.size() != size()) throw InvalidArgument("flat variable size mismatch");
  std::size_t k = 0;
  for (auto& exp : u)
    for (auto& f : exp) {
      std::copy_n(flat.begin() + k, f.values.size(), f.values.begin());
      k += f.values.size();
    }
  for (auto& exp : phi.fields)
    for (auto& eq : exp)
      for (auto& f : eq) {
        std::copy_n(flat.begin() + k, f.values.size(), f.values.begin());
        k += f.values.size();
      }
  for (auto& net : theta) {
    net.assign_flat(flat.subspan(k, net.param_count()));
    k += net.param_count();
  }
}

Variables Variables::zeros_like() const {
  Variables z = *this;
  const std::vector<double> zero(size(), 0.0);
  z.unpack(zero);
  return z;
}

int Problem::equations() const {
  return data.experiments.empty() ? 0 : static_cast<int>(data.experiments[0].y.size());
}

namespace {

// P(v) = sum w_t w_x v^2; adds 2 * scale * w_t w_x v into adj when given.
double l2_power(std::span<const double> v, const Grid& g, std::span<double> adj, double scale) {
  std::vector<double> a;
  const double p = bochner_power(v, g, 2.0, 2.0, adj.empty() ? nullptr : &a, scale);
  if (!adj.empty())
    for (std::size_t i = 0; i < a.size(); ++i) adj[i] += a[i];
  return p;
}

double r0_impl(const PhysicalParams& phi, const StateTrajectory& u, int kappa, Variables* grad) {
  double total = 0.0;
  for (std::size_t l = 0; l < phi.fields.size(); ++l)
    for (std::size_t e = 0; e < phi.fields[l].size(); ++e)
      for (std::size_t k = 0; k < phi.fields[l][e].size(); ++k) {
        const SpatialField& f = phi.fields[l][e][k];
        total += spatial_l2_squared(f.values, f.grid);
        if (grad) {
          const auto w = spatial_weights(f.grid);
          auto& gv = grad->phi.fields[l][e][k].values;
          for (std::size_t i = 0; i < w.size(); ++i) gv[i] += 2.0 * w[i] * f.values[i];
        }
      }
  for (std::size_t l = 0; l < u.size(); ++l)
    for (std::size_t e = 0; e < u[l].size(); ++e) {
      const Field& v = u[l][e];
      const Grid& g = v.grid;
      std::span<double> gu;
      if (grad) gu = grad->u[l][e].values;
      total += l2_power(v.values, g, gu, 1.0);
      const Field vt = time_derivative(v);
      if (grad) {
        std::vector<double> a(v.values.size(), 0.0);
        total += l2_power(vt.values, g, a, 1.0);
        time_derivative_adjoint(g, a, gu);
      } else {
        total += l2_power(vt.values, g, {}, 1.0);
      }
      for (const auto& beta : jet_indices(g.d, kappa)) {
        int order = 0;
        for (int b : beta) order += b;
        if (order == 0) continue;
        const Field vb = spatial_derivative(v, beta);
        if (grad) {
          std::vector<double> a(v.values.size(), 0.0);
          total += l2_power(vb.values, g, a, 1.0);
          spatial_derivative_adjoint(g, beta, a, gu, g.nt);
        } else {
          total += l2_power(vb.values, g, {}, 1.0);
        }
      }
    }
  return total;
}

void check_shapes(const Variables& vars, const Problem& p) {
  const int L = p.experiments();
  const int N = p.equations();
  if (static_cast<int>(vars.u.size()) != L) throw InvalidArgument("state count != experiment count");
  for (const auto& exp : vars.u) {
    if (static_cast<int>(exp.size()) != N) throw InvalidArgument("state equation count mismatch");
    for (const auto& f : exp)
      if (!(f.grid == p.grid)) throw InvalidArgument("state grid mismatch");
  }
  if (static_cast<int>(vars.theta.size()) != N) throw InvalidArgument("need one network per equation");
  if (vars.phi.kind != p.kind) throw InvalidArgument("parameter layout kind mismatch");
  if (static_cast<int>(vars.phi.fields.size()) != L) throw InvalidArgument("parameter experiment count mismatch");
  for (const auto& exp : vars.phi.fields) {
    if (static_cast<int>(exp.size()) != N) throw InvalidArgument("parameter equation count mismatch");
    for (const auto& eq : exp)
      if (static_cast<int>(eq.size()) != parameter_slots(p.kind))
        throw InvalidArgument("parameter slot count mismatch");
  }
}

ObjectiveBreakdown evaluate_impl(const Variables& vars, const Problem& p, Variables* grad) {
  p.weights.validate();
  check_shapes(vars, p);
  const Weights& w = p.weights;
  const Grid& g = p.grid;
  const int L = p.experiments();
  const int N = p.equations();
  const std::size_t ns = g.spatial_size();
  const std::size_t nodes = g.size();
  const std::size_t in = network_input_size(g.d, p.kappa, N);
  const auto wt = trapezoid_weights(g.nt, g.dt);
  const auto wx = spatial_weights(g);

  std::vector<std::vector<double>> dtheta;
  if (grad) {
    *grad = vars.zeros_like();
    for (const auto& net : vars.theta) dtheta.emplace_back(net.param_count(), 0.0);
  }

  ObjectiveBreakdown b;
  std::vector<MlpEvaluator> evals;
  for (const auto& net : vars.theta) {
    if (static_cast<std::size_t>(net.input_size()) != in)
      throw InvalidArgument("network input size " + std::to_string(net.input_size()) + " != " +
                            std::to_string(in));
    evals.emplace_back(net);
  }
  std::vector<double> z(in), dz(in);

  for (int l = 0; l < L; ++l) {
    const auto& states = vars.u[l];
    const auto& data = p.data.experiments[l];
    const auto jets = state_jets(states, p.kappa);
    const std::size_t ncomp = jets[0].components.size();

    // Residual d_t u - F - f_theta at every node, per equation.
    std::vector<Field> res;
    for (int e = 0; e < N; ++e) {
      Field r = time_derivative(states[e]);
      const Field F = apply_physics(p.kind, states[e], vars.phi.fields[l][e]);
      for (std::size_t i = 0; i < nodes; ++i) r.values[i] -= F.values[i];
      res.push_back(std::move(r));
    }
    const bool fused = grad && w.q == 2.0;
    // adj_jet[e'][c]: adjoint of jet component c of state e'.
    std::vector<std::vector<std::vector<double>>> adj_jet;
    if (grad) adj_jet.assign(N, std::vector<std::vector<double>>(ncomp, std::vector<double>(nodes, 0.0)));
    std::vector<std::vector<double>> adj_res(N);

    for (int n = 0; n < g.nt; ++n)
      for (std::size_t s = 0; s < ns; ++s) {
        gather_network_input(jets, g, n, s, z);
        if (p.enforce_box && !p.box.contains(z))
          throw JetContainmentError("visited (t, jet) point at time index " + std::to_string(n) +
                                    ", node " + std::to_string(s) + " of experiment " +
                                    std::to_string(l + 1) + " leaves the box of radius " +
                                    format_real(p.box.radius));
        for (int e = 0; e < N; ++e) {
          const std::size_t i = n * ns + s;
          double& r = res[e].values[i];
          r -= evals[e].forward(z);
          if (fused) {
            const double a = w.lambda * 2.0 * wt[n] * wx[s] * r;
            if (a != 0.0) {
              evals[e].backward(-a, dtheta[e], dz);
              for (int e2 = 0; e2 < N; ++e2)
                for (std::size_t c = 0; c < ncomp; ++c) adj_jet[e2][c][i] += dz[1 + e2 * ncomp + c];
            }
          }
        }
      }
    for (int e = 0; e < N; ++e)
      b.residual += w.lambda * bochner_power(res[e].values, g, w.q, 2.0,
                                             grad ? &adj_res[e] : nullptr, w.lambda);
    if (grad && !fused) {
      for (int n = 0; n < g.nt; ++n)
        for (std::size_t s = 0; s < ns; ++s) {
          gather_network_input(jets, g, n, s, z);
          const std::size_t i = n * ns + s;
          for (int e = 0; e < N; ++e) {
            const double a = adj_res[e][i];
            if (a == 0.0) continue;
            evals[e].forward(z);
            evals[e].backward(-a, dtheta[e], dz);
            for (int e2 = 0; e2 < N; ++e2)
              for (std::size_t c = 0; c < ncomp; ++c) adj_jet[e2][c][i] += dz[1 + e2 * ncomp + c];
          }
        }
    }

    if (grad) {
      for (int e = 0; e < N; ++e) {
        auto& gu = grad->u[l][e].values;
        const auto& a = adj_res[e];
        time_derivative_adjoint(g, a, gu);
        std::vector<double> neg(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
        std::vector<std::vector<double>> gphi;
        for (const auto& f : grad->phi.fields[l][e]) gphi.push_back(f.values);
        physics_adjoint(p.kind, states[e], vars.phi.fields[l][e], neg, gu, gphi);
        for (std::size_t k = 0; k < gphi.size(); ++k) grad->phi.fields[l][e][k].values = std::move(gphi[k]);
        for (std::size_t c = 0; c < ncomp; ++c)
          spatial_derivative_adjoint(g, jets[e].indices[c], adj_jet[e][c], gu, g.nt);
      }
    }

    for (int e = 0; e < N; ++e) {
      const Field& u = states[e];
      // Initial condition misfit, spatial L2 squared.
      std::vector<double> diff(ns);
      for (std::size_t s = 0; s < ns; ++s) diff[s] = u.at(0, s) - data.u0[e].values[s];
      b.initial += w.lambda * spatial_l2_squared(diff, g);
      if (grad)
        for (std::size_t s = 0; s < ns; ++s) grad->u[l][e].values[s] += w.lambda * 2.0 * wx[s] * diff[s];

      // Soft Dirichlet misfit: squared time-L2 norm of trace - g at both ends.
      if (g.d == 1) {
        const auto& tr = data.g[e];
        for (int n = 0; n < g.nt; ++n) {
          const double dl = u.at(n, 0) - tr.lower[n];
          const double du = u.at(n, ns - 1) - tr.upper[n];
          b.boundary += w.lambda * wt[n] * (dl * dl + du * du);
          if (grad) {
            grad->u[l][e].at(n, 0) += w.lambda * 2.0 * wt[n] * dl;
            grad->u[l][e].at(n, ns - 1) += w.lambda * 2.0 * wt[n] * du;
          }
        }
      }

      // Data misfit.
      Field ku = p.op.apply(u);
      for (std::size_t i = 0; i < nodes; ++i) ku.values[i] -= data.y[e].values[i];
      std::vector<double> adj_data;
      b.data += w.mu * bochner_power(ku.values, g, w.r, 2.0, grad ? &adj_data : nullptr, w.mu);
      if (grad) p.op.apply_adjoint(adj_data, grad->u[l][e].values);
    }
  }

  b.r0 = r0_impl(vars.phi, vars.u, p.kappa, grad);

  const FRegularizer fr =
      f_regularizer(vars.theta, p.box, w.rho, w.tau, p.hard_gradsup, grad ? &dtheta : nullptr);
  b.f_lrho = fr.lrho;
  b.f_gradsup = fr.gradsup;
  b.hard_gradsup = fr.hard_gradsup;

  const double pn = param_norm(vars.theta, w.param_norm_p);
  b.theta_norm = w.nu * pn;
  if (grad && pn > 0.0 && w.nu > 0.0) {
    const double pp = w.param_norm_p;
    double top = 0.0;
    if (std::isinf(pp))
      for (const auto& net : vars.theta)
        for (double x : net.flatten()) top = std::max(top, std::abs(x));
    bool assigned = false;
    for (std::size_t e = 0; e < vars.theta.size(); ++e) {
      const auto flat = vars.theta[e].flatten();
      for (std::size_t k = 0; k < flat.size(); ++k) {
        const double x = flat[k];
        const double sg = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
        double d;
        if (std::isinf(pp)) {
          d = (!assigned && std::abs(x) == top) ? sg : 0.0;
          if (d != 0.0) assigned = true;
        } else if (pp == 2.0) {
          d = x / pn;
        } else {
          d = sg * std::pow(std::abs(x) / pn, pp - 1.0);
        }
        dtheta[e][k] += w.nu * d;
      }
    }
  }

  if (grad)
    for (std::size_t e = 0; e < vars.theta.size(); ++e) grad->theta[e].assign_flat(dtheta[e]);

  b.total = b.sum_of_parts();
  return b;
}

}  // namespace

double r0(const PhysicalParams& phi, const StateTrajectory& u, int kappa) {
  return r0_impl(phi, u, kappa, nullptr);
}

ObjectiveBreakdown evaluate(const Variables& vars, const Problem& problem) {
  return evaluate_impl(vars, problem, nullptr);
}

ObjectiveBreakdown gradient(const Variables& vars, const Problem& problem, Variables& grad) {
  const Weights& w = problem.weights;
  if (w.q < 2.0 || w.r < 2.0 || w.rho < 2.0)
    throw InvalidArgument("gradient needs q, r, rho >= 2");
  return evaluate_impl(vars, problem, &grad);
}

double box_excess(const Variables& vars, const Problem& problem) {
  const Grid& g = problem.grid;
  double excess = -problem.box.radius;
  std::vector<double> z(network_input_size(g.d, problem.kappa, problem.equations()));
  for (const auto& states : vars.u) {
    const auto jets = state_jets(states, problem.kappa);
    for (int n = 0; n < g.nt; ++n)
      for (std::size_t s = 0; s < g.spatial_size(); ++s) {
        gather_network_input(jets, g, n, s, z);
        for (double v : z) excess = std::max(excess, std::abs(v) - problem.box.radius);
      }
  }
  return excess;
}

}  // namespace smlpde
