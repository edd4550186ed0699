#include "smlpde/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "smlpde/errors.hpp"
#include "smlpde/grid.hpp"

namespace smlpde {

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::requ: return "requ";
  }
  return "tanh";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "softplus") return ActivationKind::softplus;
  if (name == "relu") return ActivationKind::relu;
  if (name == "leaky_relu") return ActivationKind::leaky_relu;
  if (name == "requ") return ActivationKind::requ;
  throw InvalidArgument("unknown activation '" + name + "'");
}

double Activation::value(double z) const {
  switch (kind) {
    case ActivationKind::tanh: return std::tanh(z);
    case ActivationKind::softplus: return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    case ActivationKind::relu: return z > 0 ? z : 0.0;
    case ActivationKind::leaky_relu: return z > 0 ? z : leak * z;
    case ActivationKind::requ: return z > 0 ? z * z : 0.0;
  }
  return 0.0;
}

double Activation::derivative(double z) const {
  switch (kind) {
    case ActivationKind::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case ActivationKind::softplus: return 1.0 / (1.0 + std::exp(-z));
    case ActivationKind::relu: return z > 0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu: return z > 0 ? 1.0 : leak;
    case ActivationKind::requ: return z > 0 ? 2.0 * z : 0.0;
  }
  return 0.0;
}

double Activation::second_derivative(double z) const {
  switch (kind) {
    case ActivationKind::tanh: {
      const double t = std::tanh(z);
      return -2.0 * t * (1.0 - t * t);
    }
    case ActivationKind::softplus: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
    case ActivationKind::relu:
    case ActivationKind::leaky_relu: return 0.0;
    case ActivationKind::requ: return z > 0 ? 2.0 : 0.0;
  }
  return 0.0;
}

double Activation::lipschitz_on(double radius) const {
  if (kind == ActivationKind::requ) return 2.0 * radius;
  return 1.0;
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < depth(); ++l)
    n += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (int l = 0; l < depth(); ++l) {
    flat.insert(flat.end(), weights[l].begin(), weights[l].end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void MlpParams::assign_flat(std::span<const double> flat) {
  if (flat.size() != param_count()) throw InvalidArgument("flat parameter size mismatch");
  std::size_t k = 0;
  for (int l = 0; l < depth(); ++l) {
    std::copy_n(flat.begin() + k, weights[l].size(), weights[l].begin());
    k += weights[l].size();
    std::copy_n(flat.begin() + k, biases[l].size(), biases[l].begin());
    k += biases[l].size();
  }
}

MlpParams MlpParams::zeros(std::vector<int> layer_sizes, Activation activation) {
  if (layer_sizes.size() < 2) throw InvalidArgument("network needs at least one layer");
  for (int n : layer_sizes)
    if (n < 1) throw InvalidArgument("layer sizes must be positive");
  MlpParams p;
  p.layer_sizes = std::move(layer_sizes);
  p.activation = activation;
  for (int l = 0; l < p.depth(); ++l) {
    p.weights.emplace_back(static_cast<std::size_t>(p.layer_sizes[l + 1]) * p.layer_sizes[l], 0.0);
    p.biases.emplace_back(p.layer_sizes[l + 1], 0.0);
  }
  return p;
}

MlpParams init_mlp(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed) {
  MlpParams p = MlpParams::zeros(std::move(layer_sizes), activation);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < p.depth(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.layer_sizes[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : p.weights[l]) w = dist(rng);
  }
  return p;
}

MlpParams grow_mlp(const MlpParams& params, const std::vector<int>& hidden_widths,
                   std::uint64_t seed) {
  if (static_cast<int>(hidden_widths.size()) != params.depth() - 1)
    throw InvalidArgument("grow_mlp: hidden width count must match depth - 1");
  std::vector<int> sizes = params.layer_sizes;
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (hidden_widths[i] < params.layer_sizes[i + 1])
      throw InvalidArgument("grow_mlp cannot shrink layers");
    sizes[i + 1] = hidden_widths[i];
  }
  MlpParams fresh = init_mlp(sizes, params.activation, seed);
  MlpParams out = MlpParams::zeros(sizes, params.activation);
  for (int l = 0; l < params.depth(); ++l) {
    const int old_rows = params.layer_sizes[l + 1];
    const int old_cols = params.layer_sizes[l];
    const int rows = sizes[l + 1];
    const int cols = sizes[l];
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double v;
        if (r < old_rows && c < old_cols)
          v = params.weights[l][r * old_cols + c];
        else if (r >= old_rows && l + 1 < params.depth())
          v = fresh.weights[l][r * cols + c];  // incoming weights of a new unit
        else
          v = 0.0;  // outgoing weights of new units
        out.weights[l][r * cols + c] = v;
      }
      out.biases[l][r] = r < old_rows ? params.biases[l][r] : 0.0;
    }
  }
  return out;
}

MlpEvaluator::MlpEvaluator(const MlpParams& params) : p_(params) {
  const int L = p_.depth();
  std::size_t off = 0;
  for (int l = 0; l < L; ++l) {
    offsets_.push_back(off);
    off += p_.weights[l].size() + p_.biases[l].size();
  }
  pre_.resize(L);
  act_.resize(L);
  tan_pre_.resize(L);
  tan_act_.resize(L);
  for (int l = 0; l < L; ++l) {
    pre_[l].resize(p_.layer_sizes[l + 1]);
    act_[l].resize(p_.layer_sizes[l]);
    tan_pre_[l].resize(p_.layer_sizes[l + 1]);
    tan_act_[l].resize(p_.layer_sizes[l]);
  }
  int widest = 0;
  for (int n : p_.layer_sizes) widest = std::max(widest, n);
  adj_a_.resize(widest);
  adj_next_.resize(widest);
}

double MlpEvaluator::forward(std::span<const double> z) {
  if (static_cast<int>(z.size()) != p_.input_size())
    throw InvalidArgument("network input has size " + std::to_string(z.size()) + ", expected " +
                          std::to_string(p_.input_size()));
  const int L = p_.depth();
  std::copy(z.begin(), z.end(), act_[0].begin());
  for (int l = 0; l < L; ++l) {
    const int rows = p_.layer_sizes[l + 1];
    const int cols = p_.layer_sizes[l];
    const double* w = p_.weights[l].data();
    const double* in = act_[l].data();
    for (int r = 0; r < rows; ++r) {
      double s = p_.biases[l][r];
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) s += wr[c] * in[c];
      pre_[l][r] = s;
    }
    if (l + 1 < L)
      for (int r = 0; r < rows; ++r) act_[l + 1][r] = p_.activation.value(pre_[l][r]);
  }
  return pre_[L - 1][0];
}

void MlpEvaluator::backward(double seed, std::span<double> d_params, std::span<double> d_input) {
  const int L = p_.depth();
  const bool want_params = !d_params.empty();
  // adj_a_ holds the adjoint of the current layer's pre-activation.
  adj_a_[0] = seed;
  for (int l = L - 1; l >= 0; --l) {
    const int rows = p_.layer_sizes[l + 1];
    const int cols = p_.layer_sizes[l];
    const double* w = p_.weights[l].data();
    const double* in = act_[l].data();
    if (want_params) {
      double* dw = d_params.data() + offsets_[l];
      double* db = dw + p_.weights[l].size();
      for (int r = 0; r < rows; ++r) {
        const double g = adj_a_[r];
        if (g == 0.0) continue;
        double* dwr = dw + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) dwr[c] += g * in[c];
        db[r] += g;
      }
    }
    std::fill(adj_next_.begin(), adj_next_.begin() + cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      const double g = adj_a_[r];
      if (g == 0.0) continue;
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) adj_next_[c] += g * wr[c];
    }
    if (l > 0) {
      for (int c = 0; c < cols; ++c) adj_a_[c] = adj_next_[c] * p_.activation.derivative(pre_[l - 1][c]);
    } else if (!d_input.empty()) {
      std::copy_n(adj_next_.begin(), cols, d_input.begin());
    }
  }
}

void MlpEvaluator::input_gradient(std::span<double> out) { backward(1.0, {}, out); }

void MlpEvaluator::input_partial_backward(int axis, double seed, std::span<double> d_params) {
  const int L = p_.depth();
  // Forward tangent along e_axis: tan_act_[l] = d act_[l] / d z_axis.
  std::fill(tan_act_[0].begin(), tan_act_[0].end(), 0.0);
  tan_act_[0][axis] = 1.0;
  for (int l = 0; l < L; ++l) {
    const int rows = p_.layer_sizes[l + 1];
    const int cols = p_.layer_sizes[l];
    const double* w = p_.weights[l].data();
    for (int r = 0; r < rows; ++r) {
      double s = 0.0;
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) s += wr[c] * tan_act_[l][c];
      tan_pre_[l][r] = s;
    }
    if (l + 1 < L)
      for (int r = 0; r < rows; ++r)
        tan_act_[l + 1][r] = p_.activation.derivative(pre_[l][r]) * tan_pre_[l][r];
  }
  // Reverse sweep over the pair (primal, tangent). adj_p: adjoint of pre_[l],
  // adj_t: adjoint of tan_pre_[l]. The output tangent is tan_pre_[L-1][0].
  std::vector<double> adj_p(1, 0.0), adj_t(1, seed);
  for (int l = L - 1; l >= 0; --l) {
    const int rows = p_.layer_sizes[l + 1];
    const int cols = p_.layer_sizes[l];
    const double* w = p_.weights[l].data();
    double* dw = d_params.data() + offsets_[l];
    double* db = dw + p_.weights[l].size();
    const double* a = act_[l].data();
    const double* ta = tan_act_[l].data();
    std::vector<double> adj_a(cols, 0.0), adj_ta(cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      const double gp = adj_p[r];
      const double gt = adj_t[r];
      const double* wr = w + static_cast<std::size_t>(r) * cols;
      double* dwr = dw + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) {
        dwr[c] += gp * a[c] + gt * ta[c];
        adj_a[c] += gp * wr[c];
        adj_ta[c] += gt * wr[c];
      }
      db[r] += gp;
    }
    if (l == 0) break;
    adj_p.assign(cols, 0.0);
    adj_t.assign(cols, 0.0);
    for (int c = 0; c < cols; ++c) {
      const double h = pre_[l - 1][c];
      const double s1 = p_.activation.derivative(h);
      const double s2 = p_.activation.second_derivative(h);
      adj_t[c] = adj_ta[c] * s1;
      adj_p[c] = adj_a[c] * s1 + adj_ta[c] * s2 * tan_pre_[l - 1][c];
    }
  }
}

double forward(const MlpParams& params, std::span<const double> z) {
  MlpEvaluator ev(params);
  return ev.forward(z);
}

std::vector<double> grad_input(const MlpParams& params, std::span<const double> z) {
  MlpEvaluator ev(params);
  ev.forward(z);
  std::vector<double> g(params.input_size());
  ev.input_gradient(g);
  return g;
}

DualGradient backprop(const MlpParams& params, std::span<const double> z, double seed) {
  MlpEvaluator ev(params);
  ev.forward(z);
  std::vector<double> flat(params.param_count(), 0.0);
  DualGradient out{MlpParams::zeros(params.layer_sizes, params.activation),
                   std::vector<double>(params.input_size(), 0.0)};
  ev.backward(seed, flat, out.d_input);
  out.d_params.assign_flat(flat);
  return out;
}

double lipschitz_bound(const MlpParams& params, double activation_lipschitz) {
  if (!(activation_lipschitz > 0.0)) throw InvalidArgument("activation Lipschitz must be > 0");
  double bound = std::pow(activation_lipschitz, params.depth() - 1);
  for (int l = 0; l < params.depth(); ++l) {
    const int rows = params.layer_sizes[l + 1];
    const int cols = params.layer_sizes[l];
    double norm = 0.0;
    for (int r = 0; r < rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < cols; ++c) s += std::abs(params.weights[l][r * cols + c]);
      norm = std::max(norm, s);
    }
    bound *= norm;
  }
  return bound;
}

namespace {

void accumulate_norm(const MlpParams& p, double q, double& acc) {
  for (int l = 0; l < p.depth(); ++l) {
    for (const auto* v : {&p.weights[l], &p.biases[l]}) {
      for (double x : *v) {
        if (std::isinf(q))
          acc = std::max(acc, std::abs(x));
        else
          acc += std::pow(std::abs(x), q);
      }
    }
  }
}

}  // namespace

double param_norm(std::span<const MlpParams> nets, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("param_norm needs p >= 1");
  double acc = 0.0;
  for (const auto& n : nets) accumulate_norm(n, p, acc);
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

double param_norm(const MlpParams& params, double p) {
  return param_norm(std::span<const MlpParams>(&params, 1), p);
}

void write_mlp_csv(std::ostream& os, const MlpParams& params) {
  os << "layer,row,col,value\n";
  for (int l = 0; l < params.depth(); ++l) {
    const int rows = params.layer_sizes[l + 1];
    const int cols = params.layer_sizes[l];
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c)
        os << l << ',' << r << ',' << c << ',' << format_real(params.weights[l][r * cols + c]) << '\n';
      os << l << ',' << r << ",-1," << format_real(params.biases[l][r]) << '\n';
    }
  }
}

void write_mlp_header(std::ostream& os, const MlpParams& params) {
  os << "layer_sizes = ";
  for (std::size_t i = 0; i < params.layer_sizes.size(); ++i)
    os << (i ? "," : "") << params.layer_sizes[i];
  os << "\nactivation = " << to_string(params.activation.kind) << "\n";
}

MlpParams read_mlp(std::istream& header, std::istream& csv) {
  std::vector<int> sizes;
  Activation act;
  std::string line;
  while (std::getline(header, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "layer_sizes") {
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
    } else if (key == "activation") {
      act.kind = activation_from_string(val);
    }
  }
  MlpParams p = MlpParams::zeros(sizes, act);
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c, v;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    std::getline(ss, v, ',');
    const int l = std::stoi(a), r = std::stoi(b), col = std::stoi(c);
    if (l < 0 || l >= p.depth() || r < 0 || r >= p.layer_sizes[l + 1] || col < -1 ||
        col >= p.layer_sizes[l])
      throw InvalidArgument("parameter CSV index out of range: " + line);
    if (col < 0)
      p.biases[l][r] = std::stod(v);
    else
      p.weights[l][r * p.layer_sizes[l] + col] = std::stod(v);
  }
  return p;
}

}  // namespace smlpde
