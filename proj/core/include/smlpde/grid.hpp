#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace smlpde {

/// Uniform space-time lattice over (0, T) x [x_lo, x_hi]^d.
///
/// Nodes include both endpoints on every axis, so dx = (x_hi - x_lo) / (nx - 1)
/// and dt = t_end / (nt - 1). Storage order of every field on the grid is time
/// slowest, then spatial axes x1..xd in row-major order.
struct Grid {
  int d = 1;
  int nx = 0;
  int nt = 0;
  double x_lo = 0.0;
  double x_hi = 1.0;
  double t_end = 1.0;
  double dx = 0.0;
  double dt = 0.0;

  /// Validating constructor; throws InvalidArgument when nx < 5, nt < 3 or
  /// the extents are empty.
  static Grid make(int d, int nx, int nt, double x_lo, double x_hi, double t_end);

  std::size_t spatial_size() const;
  std::size_t size() const { return static_cast<std::size_t>(nt) * spatial_size(); }
  double t(int n) const { return dt * n; }
  double x(int i) const { return x_lo + dx * i; }
  /// Spatial coordinates of the flat spatial index `s`.
  std::vector<double> coords(std::size_t s) const;

  bool operator==(const Grid&) const = default;
};

/// Scalar field over all space-time nodes of a grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  Field(const Grid& g, std::vector<double> v);

  /// Samples `fn(t, x)` at every node.
  static Field from_function(const Grid& g,
                             const std::function<double(double, std::span<const double>)>& fn);

  double& at(int n, std::size_t s) { return values[n * grid.spatial_size() + s]; }
  double at(int n, std::size_t s) const { return values[n * grid.spatial_size() + s]; }
  std::span<double> slice(int n) {
    return {values.data() + n * grid.spatial_size(), grid.spatial_size()};
  }
  std::span<const double> slice(int n) const {
    return {values.data() + n * grid.spatial_size(), grid.spatial_size()};
  }
};

/// Time-constant field over the spatial nodes of a grid (physical parameters,
/// initial conditions).
struct SpatialField {
  Grid grid;
  std::vector<double> values;

  SpatialField() = default;
  explicit SpatialField(const Grid& g, double fill = 0.0)
      : grid(g), values(g.spatial_size(), fill) {}
  SpatialField(const Grid& g, std::vector<double> v);

  static SpatialField from_function(const Grid& g,
                                    const std::function<double(std::span<const double>)>& fn);
};

using MultiIndex = std::vector<int>;

/// Number of multi-indices with |beta| <= kappa in d variables, i.e.
/// sum_k C(d + k - 1, k).
std::size_t jet_dimension(int d, int kappa);

/// All multi-indices with |beta| <= kappa: order 0 first, then graded by
/// order; within one order derivatives in x1 come before x2 (descending
/// lexicographic on the exponent tuple).
std::vector<MultiIndex> jet_indices(int d, int kappa);

/// One-dimensional second-order finite-difference operator on n equispaced
/// points. Interior rows are central; the first and last rows use one-sided
/// second-order stencils.
class Stencil1D {
 public:
  Stencil1D(int n, double h, int order);

  int size() const { return n_; }
  int order() const { return order_; }

  /// Applies the operator along one axis of a row-major array viewed as
  /// [outer][n][inner]. With `transpose` the adjoint is applied. With
  /// `accumulate` the result is added to `out` instead of overwriting it.
  void apply(std::span<const double> in, std::span<double> out, std::size_t outer,
             std::size_t inner, bool transpose = false, bool accumulate = false) const;

 private:
  struct Row {
    int start;
    int len;
    double c[4];
  };
  int n_;
  int order_;
  std::vector<Row> rows_;
};

/// D^beta f. Supports |beta| <= 2; throws Unsupported otherwise.
Field spatial_derivative(const Field& f, const MultiIndex& beta);
SpatialField spatial_derivative(const SpatialField& f, const MultiIndex& beta);

/// Adjoint of spatial_derivative with respect to the plain Euclidean inner
/// product on node values; added into `out`.
void spatial_derivative_adjoint(const Grid& g, const MultiIndex& beta,
                                std::span<const double> adj_in, std::span<double> out,
                                std::size_t slices);

/// Spatial derivative jet (f, J^1 f, ..., J^kappa f).
struct JetField {
  int order = 0;
  std::vector<MultiIndex> indices;
  std::vector<Field> components;
  std::vector<std::size_t> counts_per_order;
};

JetField jet(const Field& f, int kappa);

Field time_derivative(const Field& f);
/// Adjoint of time_derivative, added into `out`.
void time_derivative_adjoint(const Grid& g, std::span<const double> adj_in,
                             std::span<double> out);

/// Composite trapezoidal weights for n nodes with spacing h.
std::vector<double> trapezoid_weights(int n, double h);
/// Tensor-product trapezoidal weights over the spatial nodes.
std::vector<double> spatial_weights(const Grid& g);

/// Discrete Bochner norm (int_0^T (int_Omega |f|^qs)^(qt/qs) dt)^(1/qt) with
/// trapezoidal quadrature on both levels. Both exponents must be finite and
/// >= 1; use sup_norm for the L-infinity case.
double bochner_norm(const Field& f, double q_time, double q_space);

/// bochner_norm(f)^q_time. When `adjoint` is non-null it receives
/// d/df of that power (same layout as f.values), multiplied by `scale`.
double bochner_power(std::span<const double> values, const Grid& g, double q_time,
                     double q_space, std::vector<double>* adjoint = nullptr, double scale = 1.0);

/// Squared spatial L2 norm (trapezoidal).
double spatial_l2_squared(std::span<const double> values, const Grid& g);

double sup_norm(const Field& f);
double sup_norm(std::span<const double> values);

// CSV: header `t,x1..xd,value`, rows time-major, 17 significant digits.
void write_field_csv(std::ostream& os, const Field& f);
void write_field_csv(const std::string& path, const Field& f);
Field read_field_csv(std::istream& is, const Grid& g);

/// Formats a double with 17 significant digits.
std::string format_real(double v);
/// Shortest decimal that parses back to the same double.
std::string format_short(double v);

}  // namespace smlpde
