#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smlpde/grid.hpp"

namespace smlpde {

enum class MeasurementKind { full, subsample, smooth };

std::string to_string(MeasurementKind kind);
MeasurementKind measurement_from_string(const std::string& name);

/// Linear observation map K^m on grid fields. Every member of the family
/// maps into the same grid, so the data misfit is always taken on full
/// grid fields:
///   full       identity
///   subsample  0/1 mask keeping nodes whose spatial indices are multiples of
///              max(1, ceil(nx / (4 m)))
///   smooth     Gaussian blur per time slice with standard deviation
///              (x_hi - x_lo) / (4 m), truncated at three deviations,
///              renormalized, whole-sample reflection at the boundary
class MeasurementOp {
 public:
  static MeasurementOp full(const Grid& g);
  static MeasurementOp subsample(const Grid& g, int m);
  static MeasurementOp smooth(const Grid& g, int m);
  static MeasurementOp make(MeasurementKind kind, const Grid& g, int m);
  /// Gaussian blur with an explicit standard deviation.
  static MeasurementOp gaussian(const Grid& g, double width);

  MeasurementKind kind() const { return kind_; }
  int m() const { return m_; }
  int stride() const { return stride_; }
  double width() const { return width_; }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& mask() const { return mask_; }

  Field apply(const Field& u) const;
  /// Adds K^T adj into `out`.
  void apply_adjoint(std::span<const double> adj, std::span<double> out) const;

 private:
  MeasurementOp(MeasurementKind kind, const Grid& g, int m);
  void blur_slices(std::span<const double> in, std::span<double> out, bool transpose) const;

  MeasurementKind kind_;
  Grid grid_;
  int m_ = 1;
  int stride_ = 1;
  double width_ = 0.0;
  std::vector<double> mask_;    // spatial, subsample only
  std::vector<double> kernel_;  // nx x nx row-major, smooth only
};

/// max over the corpus of bochner_norm(K^m u - u, r, 2).
double operator_gap(const MeasurementOp& op, std::span<const Field> corpus, double r = 2.0);

/// Adds i.i.d. N(0, (level * sup|y|)^2) noise, deterministic in `seed`.
Field add_noise(const Field& y, double level, std::uint64_t seed);

/// Dirichlet traces of a 1D field at x_lo and x_hi, one value per time index.
struct BoundaryTrace {
  std::vector<double> lower;
  std::vector<double> upper;
};

BoundaryTrace boundary_trace(const Field& u);

/// Data for one experiment l, one entry per equation.
struct ExperimentData {
  std::vector<Field> y;
  std::vector<SpatialField> u0;
  std::vector<BoundaryTrace> g;
};

struct Dataset {
  std::vector<ExperimentData> experiments;
  MeasurementKind kind = MeasurementKind::full;
  int m = 1;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

/// Writes `y_l{l}_m{m}.csv` per experiment (equation suffix `_n{n}` when
/// there is more than one equation) plus `manifest_m{m}.txt`.
void write_dataset(const std::string& dir, const Dataset& data);

}  // namespace smlpde
