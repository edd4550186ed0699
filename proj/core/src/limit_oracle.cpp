#include "smlpde/limit_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "smlpde/errors.hpp"

namespace smlpde {

namespace {

// f_i(x) = c - a * x[p]; p < 0 means no parameter dependence.
struct Point {
  std::vector<double> z;
  double c = 0.0;
  double a = 0.0;
  int p = -1;
  double w = 0.0;
};

struct Constraint {
  int i, j;
  double d;
};

bool same_expression(const Point& x, const Point& y) {
  const double scale = std::max({1.0, std::abs(x.c), std::abs(y.c)});
  if (std::abs(x.c - y.c) > 1e-9 * scale) return false;
  const bool x_free = x.p < 0 || x.a == 0.0;
  const bool y_free = y.p < 0 || y.a == 0.0;
  if (x_free && y_free) return true;
  return x.p == y.p && std::abs(x.a - y.a) <= 1e-9 * std::max({1.0, std::abs(x.a), std::abs(y.a)});
}

// In-place Cholesky solve of H x = b; H symmetric positive definite.
bool cholesky_solve(std::vector<double>& h, std::vector<double>& b, int n) {
  for (int j = 0; j < n; ++j) {
    double diag = h[j * n + j];
    for (int k = 0; k < j; ++k) diag -= h[j * n + k] * h[j * n + k];
    if (!(diag > 0.0)) return false;
    diag = std::sqrt(diag);
    h[j * n + j] = diag;
    for (int i = j + 1; i < n; ++i) {
      double v = h[i * n + j];
      for (int k = 0; k < j; ++k) v -= h[i * n + k] * h[j * n + k];
      h[i * n + j] = v / diag;
    }
  }
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= h[i * n + k] * b[k];
    b[i] = v / h[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = b[i];
    for (int k = i + 1; k < n; ++k) v -= h[k * n + i] * b[k];
    b[i] = v / h[i * n + i];
  }
  return true;
}

class BarrierProblem {
 public:
  BarrierProblem(std::vector<Point> pts, std::vector<Constraint> cons, std::vector<double> phi_w,
                 double rho)
      : pts_(std::move(pts)), cons_(std::move(cons)), phi_w_(std::move(phi_w)), rho_(rho) {
    n_ = static_cast<int>(phi_w_.size()) + 1;
  }

  int size() const { return n_; }
  std::size_t constraints() const { return 2 * cons_.size(); }
  double s(const std::vector<double>& x) const { return x[n_ - 1]; }

  double f(const std::vector<double>& x, int i) const {
    const Point& p = pts_[i];
    return p.p < 0 ? p.c : p.c - p.a * x[p.p];
  }

  double phi_norm(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t k = 0; k < phi_w_.size(); ++k) v += phi_w_[k] * x[k] * x[k];
    return v;
  }

  double lrho(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) v += pts_[i].w * std::pow(std::abs(f(x, i)), rho_);
    return v;
  }

  double objective(const std::vector<double>& x) const { return phi_norm(x) + lrho(x) + s(x); }

  // Smallest slack over all constraints (> 0 means strictly feasible).
  double min_slack(const std::vector<double>& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (const Constraint& k : cons_) {
      const double diff = f(x, k.i) - f(x, k.j);
      m = std::min(m, s(x) * k.d - std::abs(diff));
    }
    return m;
  }

  // Barrier value t J - sum log(slack); +inf outside the interior.
  double barrier(const std::vector<double>& x, double t) const {
    double b = t * objective(x);
    for (const Constraint& k : cons_) {
      const double diff = f(x, k.i) - f(x, k.j);
      const double up = s(x) * k.d - diff;
      const double lo = s(x) * k.d + diff;
      if (!(up > 0.0) || !(lo > 0.0)) return std::numeric_limits<double>::infinity();
      b -= std::log(up) + std::log(lo);
    }
    return b;
  }

  void derivatives(const std::vector<double>& x, double t, std::vector<double>& grad,
                   std::vector<double>& hess) const {
    const int n = n_;
    grad.assign(n, 0.0);
    hess.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t k = 0; k < phi_w_.size(); ++k) {
      grad[k] += t * 2.0 * phi_w_[k] * x[k];
      hess[k * n + k] += t * 2.0 * phi_w_[k];
    }
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const Point& p = pts_[i];
      if (p.p < 0 || p.a == 0.0) continue;
      const double v = f(x, i);
      const double av = std::abs(v);
      const double d1 = rho_ * std::pow(av, rho_ - 1.0) * (v < 0 ? -1.0 : 1.0);
      const double d2 = rho_ * (rho_ - 1.0) * std::pow(av, rho_ - 2.0);
      grad[p.p] += t * p.w * d1 * (-p.a);
      hess[p.p * n + p.p] += t * p.w * d2 * p.a * p.a;
    }
    grad[n - 1] += t;

    int idx[3];
    double gv[3];
    for (const Constraint& k : cons_) {
      const double diff = f(x, k.i) - f(x, k.j);
      for (int sign = -1; sign <= 1; sign += 2) {
        // g = sign * diff - s d < 0
        const double g = sign * diff - s(x) * k.d;
        int cnt = 0;
        const Point& pi = pts_[k.i];
        const Point& pj = pts_[k.j];
        auto add = [&](int at, double v) {
          for (int q = 0; q < cnt; ++q)
            if (idx[q] == at) {
              gv[q] += v;
              return;
            }
          idx[cnt] = at;
          gv[cnt] = v;
          ++cnt;
        };
        if (pi.p >= 0 && pi.a != 0.0) add(pi.p, -sign * pi.a);
        if (pj.p >= 0 && pj.a != 0.0) add(pj.p, sign * pj.a);
        add(n - 1, -k.d);
        const double inv = -1.0 / g;
        for (int q = 0; q < cnt; ++q) {
          grad[idx[q]] += inv * gv[q];
          for (int r = 0; r < cnt; ++r) hess[idx[q] * n + idx[r]] += inv * inv * gv[q] * gv[r];
        }
      }
    }
  }

 private:
  std::vector<Point> pts_;
  std::vector<Constraint> cons_;
  std::vector<double> phi_w_;
  double rho_;
  int n_;
};

}  // namespace

OracleResult limit_oracle(const LimitInstance& inst, const OracleOptions& opt) {
  const Grid& g = inst.grid;
  if (inst.kind != PhysicsKind::none && inst.kind != PhysicsKind::convection)
    throw Unsupported("limit oracle supports kind none and convection only");
  if (inst.kind == PhysicsKind::convection && g.d != 1)
    throw Unsupported("limit oracle convection needs d = 1");
  if (g.size() > 81) throw InvalidArgument("limit oracle is meant for grids of at most 9 x 9 nodes");
  if (inst.u.empty()) throw InvalidArgument("limit oracle needs at least one experiment");
  if (!(inst.rho >= 2.0)) throw InvalidArgument("limit oracle needs rho >= 2");
  for (const auto& ul : inst.u)
    if (ul.size() != 1 || !(ul[0].grid == g))
      throw InvalidArgument("limit oracle needs one state per experiment on the instance grid");

  const int L = static_cast<int>(inst.u.size());
  const std::size_t ns = g.spatial_size();
  const bool conv = inst.kind == PhysicsKind::convection;
  const std::vector<double> wt = trapezoid_weights(g.nt, g.dt);
  const std::vector<double> wx = spatial_weights(g);
  const int dim = static_cast<int>(network_input_size(g.d, inst.kappa, 1));

  OracleResult res;
  res.dim = dim;
  std::vector<Point> pts;
  std::vector<double> z(dim);
  for (int l = 0; l < L; ++l) {
    const Field& u = inst.u[l][0];
    const auto jets = state_jets(inst.u[l], inst.kappa);
    const Field ut = time_derivative(u);
    const Field ux = conv ? spatial_derivative(u, MultiIndex{1}) : Field();
    for (int n = 0; n < g.nt; ++n) {
      for (std::size_t s = 0; s < ns; ++s) {
        gather_network_input(jets, g, n, s, z);
        Point p;
        p.z = z;
        p.c = ut.at(n, s);
        if (conv) {
          p.a = ux.at(n, s);
          p.p = static_cast<int>(l * ns + s);
        }
        p.w = wt[n] * wx[s];
        auto dup = std::find_if(pts.begin(), pts.end(), [&](const Point& q) {
          double d = 0.0;
          for (int k = 0; k < dim; ++k) d += std::abs(q.z[k] - p.z[k]);
          return d <= 1e-14 * (1.0 + std::abs(p.z[0]));
        });
        if (dup == pts.end()) {
          pts.push_back(std::move(p));
        } else if (same_expression(*dup, p)) {
          dup->w += p.w;
        } else {
          res.feasible = false;
          res.diagnostic = "infeasible residual interpolation: experiment " + std::to_string(l + 1) +
                           ", time index " + std::to_string(n) + ", node " + std::to_string(s) +
                           " repeats a visited jet with a different residual";
          return res;
        }
      }
    }
  }

  std::vector<Constraint> cons;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double d = 0.0;
      for (int k = 0; k < dim; ++k) d += std::abs(pts[i].z[k] - pts[j].z[k]);
      cons.push_back({static_cast<int>(i), static_cast<int>(j), d});
    }

  std::vector<double> phi_w;
  if (conv)
    for (int l = 0; l < L; ++l) phi_w.insert(phi_w.end(), wx.begin(), wx.end());

  const std::vector<Point> kept = pts;
  BarrierProblem prob(std::move(pts), cons, phi_w, inst.rho);
  const int nv = prob.size();

  // Seeded interior start: random phi, then s large enough for strict
  // feasibility.
  std::vector<double> x(nv, 0.0);
  std::mt19937_64 rng(opt.tie_break_seed);
  std::uniform_real_distribution<double> unif(-0.1, 0.1);
  for (int k = 0; k + 1 < nv; ++k) x[k] = unif(rng);
  {
    double ratio = 0.0;
    for (const Constraint& k : cons)
      ratio = std::max(ratio, std::abs(prob.f(x, k.i) - prob.f(x, k.j)) / k.d);
    x[nv - 1] = 2.0 * ratio + 1.0;
  }

  std::vector<double> grad, hess, step;
  double t = 1.0;
  const double m_c = static_cast<double>(std::max<std::size_t>(prob.constraints(), 1));
  int steps = 0;
  while (true) {
    for (int it = 0; it < opt.max_newton_steps; ++it) {
      prob.derivatives(x, t, grad, hess);
      step = grad;
      if (!cholesky_solve(hess, step, nv)) break;
      double decrement = 0.0;
      for (int k = 0; k < nv; ++k) {
        step[k] = -step[k];
        decrement -= grad[k] * step[k];
      }
      if (decrement * 0.5 <= 1e-12) break;
      const double b0 = prob.barrier(x, t);
      double alpha = 1.0;
      std::vector<double> trial(nv);
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt, alpha *= 0.5) {
        for (int k = 0; k < nv; ++k) trial[k] = x[k] + alpha * step[k];
        const double b1 = prob.barrier(trial, t);
        if (std::isfinite(b1) && b1 <= b0 - 0.25 * alpha * decrement) {
          accepted = true;
          break;
        }
      }
      ++steps;
      if (!accepted) break;
      x = trial;
    }
    if (m_c / t < opt.gap_tolerance) break;
    t *= 10.0;
  }

  res.newton_steps = steps;
  res.phi = PhysicalParams::zeros(inst.kind, g, L, 1);
  if (conv)
    for (int l = 0; l < L; ++l)
      for (std::size_t s = 0; s < ns; ++s) res.phi.fields[l][0][0].values[s] = x[l * ns + s];
  res.points.reserve(kept.size() * dim);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    res.points.insert(res.points.end(), kept[i].z.begin(), kept[i].z.end());
    res.f_values.push_back(prob.f(x, static_cast<int>(i)));
  }
  // The tight divided-difference bound at the returned point.
  double ratio = 0.0;
  for (const Constraint& k : cons)
    ratio = std::max(ratio, std::abs(prob.f(x, k.i) - prob.f(x, k.j)) / k.d);
  res.gradsup = ratio;
  res.lrho = prob.lrho(x);
  res.phi_norm = prob.phi_norm(x);
  res.objective = res.phi_norm + res.lrho + res.gradsup;
  return res;
}

}  // namespace smlpde
