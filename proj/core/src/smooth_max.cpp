#include "smlpde/smooth_max.hpp"

#include <algorithm>
#include <cmath>

#include "smlpde/errors.hpp"

namespace smlpde {

double smooth_max(std::span<const double> values, double tau, std::vector<double>* weights) {
  if (values.empty()) throw InvalidArgument("smooth_max needs a nonempty list");
  if (!(tau > 0.0)) throw InvalidArgument("smooth_max needs tau > 0");
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp((v - top) / tau);
  if (weights) {
    weights->resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      (*weights)[i] = std::exp((values[i] - top) / tau) / sum;
  }
  // sum >= 1 because the maximum contributes exp(0); the log is never negative,
  // which keeps the lower bracket exact in floating point.
  return top + tau * std::log(sum);
}

}  // namespace smlpde
