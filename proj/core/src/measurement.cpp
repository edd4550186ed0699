#include "smlpde/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "smlpde/errors.hpp"

namespace smlpde {

std::string to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::full: return "full";
    case MeasurementKind::subsample: return "subsample";
    case MeasurementKind::smooth: return "smooth";
  }
  return "full";
}

MeasurementKind measurement_from_string(const std::string& name) {
  if (name == "full") return MeasurementKind::full;
  if (name == "subsample") return MeasurementKind::subsample;
  if (name == "smooth") return MeasurementKind::smooth;
  throw InvalidArgument("unknown measurement family '" + name + "'");
}

MeasurementOp::MeasurementOp(MeasurementKind kind, const Grid& g, int m)
    : kind_(kind), grid_(g), m_(m) {
  if (m < 1) throw InvalidArgument("measurement scale m must be >= 1");
}

MeasurementOp MeasurementOp::full(const Grid& g) { return MeasurementOp(MeasurementKind::full, g, 1); }

MeasurementOp MeasurementOp::subsample(const Grid& g, int m) {
  MeasurementOp op(MeasurementKind::subsample, g, m);
  op.stride_ = std::max(1, static_cast<int>(std::ceil(static_cast<double>(g.nx) / (4.0 * m))));
  op.mask_.assign(g.spatial_size(), 1.0);
  for (std::size_t s = 0; s < op.mask_.size(); ++s) {
    std::size_t rest = s;
    for (int k = 0; k < g.d; ++k) {
      if ((rest % g.nx) % op.stride_ != 0) op.mask_[s] = 0.0;
      rest /= g.nx;
    }
  }
  return op;
}

MeasurementOp MeasurementOp::gaussian(const Grid& g, double width) {
  if (!(width >= 0.0)) throw InvalidArgument("blur width must be >= 0");
  MeasurementOp op(MeasurementKind::smooth, g, 1);
  op.width_ = width;
  const int n = g.nx;
  const int period = 2 * (n - 1);
  const int radius = width > 0.0 ? static_cast<int>(std::floor(3.0 * width / g.dx + 1e-12)) : 0;
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double x = width > 0.0 ? k * g.dx / width : 0.0;
    taps[k + radius] = std::exp(-0.5 * x * x);
    sum += taps[k + radius];
  }
  for (double& t : taps) t /= sum;
  op.kernel_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = -radius; k <= radius; ++k) {
      int j = ((i + k) % period + period) % period;
      if (j > n - 1) j = period - j;
      op.kernel_[static_cast<std::size_t>(i) * n + j] += taps[k + radius];
    }
  }
  return op;
}

MeasurementOp MeasurementOp::smooth(const Grid& g, int m) {
  if (m < 1) throw InvalidArgument("measurement scale m must be >= 1");
  MeasurementOp op = gaussian(g, (g.x_hi - g.x_lo) / (4.0 * m));
  op.m_ = m;
  return op;
}

MeasurementOp MeasurementOp::make(MeasurementKind kind, const Grid& g, int m) {
  switch (kind) {
    case MeasurementKind::full: {
      MeasurementOp op = full(g);
      op.m_ = m;
      return op;
    }
    case MeasurementKind::subsample: return subsample(g, m);
    case MeasurementKind::smooth: return smooth(g, m);
  }
  return full(g);
}

void MeasurementOp::blur_slices(std::span<const double> in, std::span<double> out,
                                bool transpose) const {
  const Grid& g = grid_;
  const std::size_t n = static_cast<std::size_t>(g.nx);
  std::vector<double> cur(in.begin(), in.end()), next(in.size());
  // Separable blur: one pass per spatial axis over every time slice.
  for (int axis = 0; axis < g.d; ++axis) {
    std::size_t inner = 1;
    for (int a = axis + 1; a < g.d; ++a) inner *= n;
    const std::size_t outer = cur.size() / (n * inner);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t base = o * n * inner;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double c = transpose ? kernel_[j * n + i] : kernel_[i * n + j];
          if (c == 0.0) continue;
          for (std::size_t k = 0; k < inner; ++k) next[base + i * inner + k] += c * cur[base + j * inner + k];
        }
    }
    std::swap(cur, next);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

Field MeasurementOp::apply(const Field& u) const {
  if (!(u.grid == grid_)) throw InvalidArgument("measurement operator grid mismatch");
  Field out(grid_);
  const std::size_t ns = grid_.spatial_size();
  switch (kind_) {
    case MeasurementKind::full: out.values = u.values; break;
    case MeasurementKind::subsample:
      for (std::size_t i = 0; i < u.values.size(); ++i) out.values[i] = u.values[i] * mask_[i % ns];
      break;
    case MeasurementKind::smooth: blur_slices(u.values, out.values, false); break;
  }
  return out;
}

void MeasurementOp::apply_adjoint(std::span<const double> adj, std::span<double> out) const {
  if (adj.size() != grid_.size() || out.size() != adj.size())
    throw InvalidArgument("measurement adjoint size mismatch");
  const std::size_t ns = grid_.spatial_size();
  switch (kind_) {
    case MeasurementKind::full:
      for (std::size_t i = 0; i < adj.size(); ++i) out[i] += adj[i];
      break;
    case MeasurementKind::subsample:
      for (std::size_t i = 0; i < adj.size(); ++i) out[i] += adj[i] * mask_[i % ns];
      break;
    case MeasurementKind::smooth: {
      std::vector<double> tmp(adj.size());
      blur_slices(adj, tmp, true);
      for (std::size_t i = 0; i < adj.size(); ++i) out[i] += tmp[i];
      break;
    }
  }
}

double operator_gap(const MeasurementOp& op, std::span<const Field> corpus, double r) {
  if (corpus.empty()) throw InvalidArgument("operator_gap needs a nonempty corpus");
  double gap = 0.0;
  for (const auto& u : corpus) {
    Field diff = op.apply(u);
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= u.values[i];
    gap = std::max(gap, bochner_norm(diff, r, 2.0));
  }
  return gap;
}

Field add_noise(const Field& y, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw InvalidArgument("noise level must be >= 0");
  Field out = y;
  if (level == 0.0) return out;
  const double sd = level * sup_norm(y);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : out.values) v += sd * dist(rng);
  return out;
}

BoundaryTrace boundary_trace(const Field& u) {
  if (u.grid.d != 1) throw Unsupported("boundary_trace is implemented for d = 1 only");
  BoundaryTrace tr;
  for (int n = 0; n < u.grid.nt; ++n) {
    tr.lower.push_back(u.at(n, 0));
    tr.upper.push_back(u.at(n, u.grid.nx - 1));
  }
  return tr;
}

void write_dataset(const std::string& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);
  for (std::size_t l = 0; l < data.experiments.size(); ++l) {
    const auto& ys = data.experiments[l].y;
    for (std::size_t n = 0; n < ys.size(); ++n) {
      std::string name = "y_l" + std::to_string(l + 1) + "_m" + std::to_string(data.m);
      if (ys.size() > 1) name += "_n" + std::to_string(n + 1);
      write_field_csv(dir + "/" + name + ".csv", ys[n]);
    }
  }
  std::ofstream os(dir + "/manifest_m" + std::to_string(data.m) + ".txt");
  os << "kind = " << to_string(data.kind) << "\n"
     << "m = " << data.m << "\n"
     << "level = " << format_real(data.noise_level) << "\n"
     << "seed = " << data.seed << "\n"
     << "experiments = " << data.experiments.size() << "\n";
}

}  // namespace smlpde
