#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace smlpde {

enum class ActivationKind { tanh, softplus, relu, leaky_relu, requ };

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

struct Activation {
  ActivationKind kind = ActivationKind::tanh;
  double leak = 0.01;  // slope for z < 0 in leaky_relu

  double value(double z) const;
  /// relu and leaky_relu use the derivative from the left side at 0 for
  /// leaky_relu and 0 for relu.
  double derivative(double z) const;
  double second_derivative(double z) const;
  /// Lipschitz constant on [-radius, radius]; 1 for every kind except requ
  /// (max(z,0)^2), where it is 2 * radius.
  double lipschitz_on(double radius) const;
};

/// Fully connected network z -> w^L s(... s(w^1 z + b^1) ...) + b^L with the
/// last layer affine. Weight matrices are stored row-major (n_l x n_{l-1}).
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  Activation activation;

  int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_size() const { return layer_sizes.front(); }
  std::size_t param_count() const;

  /// Weights then bias, layer by layer.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);

  /// All weights and biases zero with the given shape.
  static MlpParams zeros(std::vector<int> layer_sizes, Activation activation = {});
};

/// Weights uniform in [-1/sqrt(n_{l-1}), 1/sqrt(n_{l-1})], biases zero.
MlpParams init_mlp(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed);

/// Widens hidden layers to `hidden_widths`. New units get freshly initialized
/// incoming weights and zero outgoing weights, so the represented function is
/// unchanged.
MlpParams grow_mlp(const MlpParams& params, const std::vector<int>& hidden_widths,
                   std::uint64_t seed);

struct DualGradient {
  MlpParams d_params;
  std::vector<double> d_input;
};

double forward(const MlpParams& params, std::span<const double> z);
std::vector<double> grad_input(const MlpParams& params, std::span<const double> z);
DualGradient backprop(const MlpParams& params, std::span<const double> z, double seed);

/// Reusable evaluation buffers for one network. Holds the activations of the
/// most recent forward() call; backward passes refer to that input.
class MlpEvaluator {
 public:
  explicit MlpEvaluator(const MlpParams& params);

  double forward(std::span<const double> z);
  /// seed * d f / d theta is added into d_params (flat layout); seed * d f / d z
  /// is written into d_input when non-empty.
  void backward(double seed, std::span<double> d_params, std::span<double> d_input);
  /// d f / d z at the last forward input.
  void input_gradient(std::span<double> out);
  /// Adds seed * d/d theta of (d f / d z_axis) into d_params, at the last
  /// forward input. Requires the activation's second derivative.
  void input_partial_backward(int axis, double seed, std::span<double> d_params);

 private:
  const MlpParams& p_;
  std::vector<std::size_t> offsets_;  // flat offset of each layer's weights
  std::vector<std::vector<double>> pre_;  // pre-activations per hidden layer
  std::vector<std::vector<double>> act_;  // act_[0] = input, act_[l] = s(pre_[l-1])
  std::vector<double> adj_a_, adj_next_;
  std::vector<std::vector<double>> tan_pre_, tan_act_;
};

/// L_s^(L-1) * prod_l |w^l|_inf with |.|_inf the max-row-sum norm.
double lipschitz_bound(const MlpParams& params, double activation_lipschitz);

/// l^p norm of all weights and biases (p = infinity allowed).
double param_norm(const MlpParams& params, double p);
double param_norm(std::span<const MlpParams> nets, double p);

// Serialization: flat `layer,row,col,value` CSV (bias rows use col = -1) and a
// small key = value header with layer_sizes and activation.
void write_mlp_csv(std::ostream& os, const MlpParams& params);
void write_mlp_header(std::ostream& os, const MlpParams& params);
MlpParams read_mlp(std::istream& header, std::istream& csv);

}  // namespace smlpde
