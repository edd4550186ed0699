#pragma once

#include <span>
#include <vector>

namespace smlpde {

/// tau * log(sum_i exp(v_i / tau)), evaluated with a max shift. Satisfies
/// max(v) <= smooth_max(v) <= max(v) + tau * log(n). When `weights` is
/// non-null it receives the gradient d smooth_max / d v (the softmax of v/tau).
double smooth_max(std::span<const double> values, double tau, std::vector<double>* weights = nullptr);

}  // namespace smlpde
