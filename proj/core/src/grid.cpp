#include "smlpde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "smlpde/errors.hpp"

namespace smlpde {

Grid Grid::make(int d, int nx, int nt, double x_lo, double x_hi, double t_end) {
  if (d < 1) throw InvalidArgument("grid dimension must be >= 1");
  if (nx < 5) throw InvalidArgument("grid needs nx >= 5, got " + std::to_string(nx));
  if (nt < 3) throw InvalidArgument("grid needs nt >= 3, got " + std::to_string(nt));
  if (!(x_hi > x_lo) || !std::isfinite(x_hi - x_lo))
    throw InvalidArgument("grid needs x_hi > x_lo");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("grid needs t_end > 0");
  Grid g;
  g.d = d;
  g.nx = nx;
  g.nt = nt;
  g.x_lo = x_lo;
  g.x_hi = x_hi;
  g.t_end = t_end;
  g.dx = (x_hi - x_lo) / (nx - 1);
  g.dt = t_end / (nt - 1);
  return g;
}

std::size_t Grid::spatial_size() const {
  std::size_t s = 1;
  for (int k = 0; k < d; ++k) s *= static_cast<std::size_t>(nx);
  return s;
}

std::vector<double> Grid::coords(std::size_t s) const {
  std::vector<double> c(d);
  for (int k = d - 1; k >= 0; --k) {
    c[k] = x(static_cast<int>(s % nx));
    s /= nx;
  }
  return c;
}

Field::Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw InvalidArgument("field size does not match grid");
}

Field Field::from_function(const Grid& g,
                           const std::function<double(double, std::span<const double>)>& fn) {
  Field f(g);
  const std::size_t ns = g.spatial_size();
  for (std::size_t s = 0; s < ns; ++s) {
    const auto c = g.coords(s);
    for (int n = 0; n < g.nt; ++n) f.at(n, s) = fn(g.t(n), c);
  }
  return f;
}

SpatialField::SpatialField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.spatial_size())
    throw InvalidArgument("spatial field size does not match grid");
}

SpatialField SpatialField::from_function(const Grid& g,
                                         const std::function<double(std::span<const double>)>& fn) {
  SpatialField f(g);
  for (std::size_t s = 0; s < f.values.size(); ++s) f.values[s] = fn(g.coords(s));
  return f;
}

namespace {

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::size_t num = n - k + i;
    if (r > std::numeric_limits<std::size_t>::max() / num)
      throw InvalidArgument("jet dimension overflows");
    r = r * num / i;
  }
  return r;
}

}  // namespace

std::size_t jet_dimension(int d, int kappa) {
  if (d < 1 || kappa < 0) throw InvalidArgument("jet_dimension needs d >= 1 and kappa >= 0");
  std::size_t total = 0;
  for (int k = 0; k <= kappa; ++k) {
    const std::size_t p = binomial(static_cast<std::size_t>(d + k - 1), static_cast<std::size_t>(k));
    if (total > std::numeric_limits<std::size_t>::max() - p)
      throw InvalidArgument("jet dimension overflows");
    total += p;
  }
  return total;
}

std::vector<MultiIndex> jet_indices(int d, int kappa) {
  if (d < 1 || kappa < 0) throw InvalidArgument("jet_indices needs d >= 1 and kappa >= 0");
  std::vector<MultiIndex> out;
  for (int k = 0; k <= kappa; ++k) {
    std::vector<MultiIndex> level;
    MultiIndex cur(d, 0);
    // Enumerate compositions of k into d parts in descending lexicographic order.
    std::function<void(int, int)> rec = [&](int axis, int remaining) {
      if (axis == d - 1) {
        cur[axis] = remaining;
        level.push_back(cur);
        return;
      }
      for (int v = remaining; v >= 0; --v) {
        cur[axis] = v;
        rec(axis + 1, remaining - v);
      }
    };
    rec(0, k);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

Stencil1D::Stencil1D(int n, double h, int order) : n_(n), order_(order) {
  if (order < 0 || order > 2) throw Unsupported("stencil order must be 0, 1 or 2");
  if (n < order + 2) throw InvalidArgument("too few points for stencil");
  rows_.resize(n);
  for (int i = 0; i < n; ++i) {
    Row& r = rows_[i];
    std::fill(std::begin(r.c), std::end(r.c), 0.0);
    if (order == 0) {
      r = {i, 1, {1.0, 0, 0, 0}};
    } else if (order == 1) {
      const double s = 1.0 / (2.0 * h);
      if (i == 0)
        r = {0, 3, {-3.0 * s, 4.0 * s, -1.0 * s, 0}};
      else if (i == n - 1)
        r = {n - 3, 3, {1.0 * s, -4.0 * s, 3.0 * s, 0}};
      else
        r = {i - 1, 3, {-s, 0.0, s, 0}};
    } else {
      const double s = 1.0 / (h * h);
      if (i == 0)
        r = {0, 4, {2.0 * s, -5.0 * s, 4.0 * s, -1.0 * s}};
      else if (i == n - 1)
        r = {n - 4, 4, {-1.0 * s, 4.0 * s, -5.0 * s, 2.0 * s}};
      else
        r = {i - 1, 3, {s, -2.0 * s, s, 0}};
    }
  }
}

void Stencil1D::apply(std::span<const double> in, std::span<double> out, std::size_t outer,
                      std::size_t inner, bool transpose, bool accumulate) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  if (in.size() != outer * n * inner || out.size() != in.size())
    throw InvalidArgument("stencil operand size mismatch");
  if (!accumulate) std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * n * inner;
    for (std::size_t i = 0; i < n; ++i) {
      const Row& r = rows_[i];
      for (int j = 0; j < r.len; ++j) {
        const double c = r.c[j];
        const std::size_t src = base + static_cast<std::size_t>(r.start + j) * inner;
        const std::size_t dst = base + i * inner;
        if (!transpose) {
          for (std::size_t k = 0; k < inner; ++k) out[dst + k] += c * in[src + k];
        } else {
          for (std::size_t k = 0; k < inner; ++k) out[src + k] += c * in[dst + k];
        }
      }
    }
  }
}

namespace {

int order_of(const MultiIndex& beta) {
  int k = 0;
  for (int b : beta) {
    if (b < 0) throw InvalidArgument("negative multi-index entry");
    k += b;
  }
  return k;
}

// Applies D^beta (or its adjoint) to `slices` stacked spatial blocks.
void derivative_blocks(const Grid& g, const MultiIndex& beta, std::span<const double> in,
                       std::span<double> out, std::size_t slices, bool transpose,
                       bool accumulate) {
  if (static_cast<int>(beta.size()) != g.d) throw InvalidArgument("multi-index length != d");
  const int k = order_of(beta);
  if (k > 2) throw Unsupported("derivative order " + std::to_string(k) + " > 2 not supported");
  std::vector<std::pair<int, int>> factors;  // (axis, order)
  for (int a = 0; a < g.d; ++a)
    if (beta[a] > 0) factors.emplace_back(a, beta[a]);
  if (factors.empty()) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = (accumulate ? out[i] : 0.0) + in[i];
    return;
  }
  auto axis_apply = [&](int axis, int order, std::span<const double> src, std::span<double> dst,
                        bool acc) {
    std::size_t outer = slices;
    for (int a = 0; a < axis; ++a) outer *= static_cast<std::size_t>(g.nx);
    std::size_t inner = 1;
    for (int a = axis + 1; a < g.d; ++a) inner *= static_cast<std::size_t>(g.nx);
    Stencil1D(g.nx, g.dx, order).apply(src, dst, outer, inner, transpose, acc);
  };
  if (factors.size() == 1) {
    axis_apply(factors[0].first, factors[0].second, in, out, accumulate);
  } else {
    // Operators on distinct axes commute, so the adjoint can reuse this order.
    std::vector<double> tmp(in.size());
    axis_apply(factors[0].first, factors[0].second, in, tmp, false);
    axis_apply(factors[1].first, factors[1].second, tmp, out, accumulate);
  }
}

}  // namespace

Field spatial_derivative(const Field& f, const MultiIndex& beta) {
  Field out(f.grid);
  derivative_blocks(f.grid, beta, f.values, out.values, f.grid.nt, false, false);
  return out;
}

SpatialField spatial_derivative(const SpatialField& f, const MultiIndex& beta) {
  SpatialField out(f.grid);
  derivative_blocks(f.grid, beta, f.values, out.values, 1, false, false);
  return out;
}

void spatial_derivative_adjoint(const Grid& g, const MultiIndex& beta,
                                std::span<const double> adj_in, std::span<double> out,
                                std::size_t slices) {
  derivative_blocks(g, beta, adj_in, out, slices, true, true);
}

JetField jet(const Field& f, int kappa) {
  JetField j;
  j.order = kappa;
  j.indices = jet_indices(f.grid.d, kappa);
  for (const auto& beta : j.indices) {
    if (order_of(beta) == 0)
      j.components.push_back(f);
    else
      j.components.push_back(spatial_derivative(f, beta));
  }
  j.counts_per_order.assign(kappa + 1, 0);
  for (const auto& beta : j.indices) ++j.counts_per_order[order_of(beta)];
  return j;
}

Field time_derivative(const Field& f) {
  Field out(f.grid);
  Stencil1D(f.grid.nt, f.grid.dt, 1).apply(f.values, out.values, 1, f.grid.spatial_size());
  return out;
}

void time_derivative_adjoint(const Grid& g, std::span<const double> adj_in,
                             std::span<double> out) {
  Stencil1D(g.nt, g.dt, 1).apply(adj_in, out, 1, g.spatial_size(), true, true);
}

std::vector<double> trapezoid_weights(int n, double h) {
  std::vector<double> w(n, h);
  w.front() = 0.5 * h;
  w.back() = 0.5 * h;
  return w;
}

std::vector<double> spatial_weights(const Grid& g) {
  const auto w1 = trapezoid_weights(g.nx, g.dx);
  std::vector<double> w(g.spatial_size(), 1.0);
  for (std::size_t s = 0; s < w.size(); ++s) {
    std::size_t rest = s;
    for (int k = 0; k < g.d; ++k) {
      w[s] *= w1[rest % g.nx];
      rest /= g.nx;
    }
  }
  return w;
}

namespace {

void check_exponent(double q, const char* name) {
  if (!std::isfinite(q) || q < 1.0)
    throw InvalidArgument(std::string(name) + " must be finite and >= 1 (use sup_norm for L-inf)");
}

}  // namespace

double bochner_power(std::span<const double> values, const Grid& g, double q_time,
                     double q_space, std::vector<double>* adjoint, double scale) {
  check_exponent(q_time, "q_time");
  check_exponent(q_space, "q_space");
  if (values.size() != g.size()) throw InvalidArgument("field size does not match grid");
  const auto wx = spatial_weights(g);
  const auto wt = trapezoid_weights(g.nt, g.dt);
  const std::size_t ns = g.spatial_size();
  const double ratio = q_time / q_space;
  if (adjoint) adjoint->assign(values.size(), 0.0);
  double total = 0.0;
  for (int n = 0; n < g.nt; ++n) {
    const double* v = values.data() + n * ns;
    double s = 0.0;
    for (std::size_t i = 0; i < ns; ++i) s += wx[i] * std::pow(std::abs(v[i]), q_space);
    total += wt[n] * std::pow(s, ratio);
    if (adjoint && s > 0.0) {
      const double outer = scale * wt[n] * q_time * std::pow(s, ratio - 1.0);
      for (std::size_t i = 0; i < ns; ++i) {
        const double a = std::abs(v[i]);
        if (a == 0.0) continue;
        const double deriv = q_space == 2.0 ? v[i] : std::pow(a, q_space - 1.0) * (v[i] > 0 ? 1.0 : -1.0);
        (*adjoint)[n * ns + i] = outer * wx[i] * deriv;
      }
    }
  }
  return total;
}

double bochner_norm(const Field& f, double q_time, double q_space) {
  return std::pow(bochner_power(f.values, f.grid, q_time, q_space), 1.0 / q_time);
}

double spatial_l2_squared(std::span<const double> values, const Grid& g) {
  if (values.size() != g.spatial_size()) throw InvalidArgument("spatial size mismatch");
  const auto w = spatial_weights(g);
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += w[i] * values[i] * values[i];
  return s;
}

double sup_norm(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double sup_norm(const Field& f) { return sup_norm(f.values); }

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_short(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_field_csv(std::ostream& os, const Field& f) {
  const Grid& g = f.grid;
  os << "t";
  for (int k = 1; k <= g.d; ++k) os << ",x" << k;
  os << ",value\n";
  const std::size_t ns = g.spatial_size();
  for (int n = 0; n < g.nt; ++n) {
    for (std::size_t s = 0; s < ns; ++s) {
      os << format_real(g.t(n));
      for (double c : g.coords(s)) os << ',' << format_real(c);
      os << ',' << format_real(f.at(n, s)) << '\n';
    }
  }
}

void write_field_csv(const std::string& path, const Field& f) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_field_csv(os, f);
}

Field read_field_csv(std::istream& is, const Grid& g) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("empty field CSV");
  std::vector<double> values;
  values.reserve(g.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto pos = line.rfind(',');
    if (pos == std::string::npos) throw InvalidArgument("malformed field CSV row: " + line);
    values.push_back(std::stod(line.substr(pos + 1)));
  }
  return Field(g, std::move(values));
}

}  // namespace smlpde
