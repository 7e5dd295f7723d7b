#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apf/autodiff.hpp"

namespace apf::nn {

enum class Activation { Sine, Tanh, None };

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  Activation activation = Activation::None;
  std::size_t weight_offset = 0;  // outputs x inputs, row-major
  std::size_t bias_offset = 0;
};

// Input-free MLP driven by a learnable bias vector b0:
//   h0 = b0, h_k = sin(omega0 (W_k h_{k-1} + b_k)) for the hidden layers,
//   out = tanh(W_L h_{L-1} + b_L).
// All parameters live in one flat buffer: b0 first, then for each layer its
// weights followed by its biases.
class BiasNet {
 public:
  struct Options {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden{1024, 512, 256, 128};
    std::size_t output_dim = 11;
    double omega0 = 30.0;
  };

  // Per-layer activations kept by forward() for backward().
  struct Trace {
    std::vector<std::vector<double>> pre;   // pre-activation of each layer
    std::vector<std::vector<double>> post;  // post-activation of each layer
  };

  // All parameters zero.
  explicit BiasNet(Options options);
  // Sine-network initialization: first layer U(-1/n, 1/n), later hidden
  // layers U(-sqrt(6/n)/omega0, sqrt(6/n)/omega0), hidden biases
  // U(-1/sqrt(n), 1/sqrt(n)), Xavier-uniform output weights with zero
  // biases, b0 = 1.
  BiasNet(Options options, std::uint64_t seed);

  const Options& options() const { return options_; }
  std::span<const DenseLayer> layers() const { return layers_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::size_t output_dim() const { return options_.output_dim; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> gradients() { return grads_; }
  std::span<const double> gradients() const { return grads_; }
  void zero_grad();

  std::vector<double> forward() const;
  std::vector<double> forward(Trace& trace) const;
  // Accumulates d(loss)/d(params) given d(loss)/d(outputs).
  void backward(const Trace& trace, std::span<const double> output_grad);

  // Fused tape op: outputs as tape nodes, pullback accumulates into
  // gradients(). The net must outlive the tape's next backward sweep.
  std::vector<ad::Var> forward(ad::Tape& tape);

 private:
  Options options_;
  std::vector<DenseLayer> layers_;
  std::vector<double> params_;
  std::vector<double> grads_;
};

// Closed-form size of a BiasNet with the given shape.
std::size_t biasnet_parameter_count(std::size_t input_dim, std::span<const std::size_t> hidden,
                                    std::size_t output_dim);

enum class ParamKind { Radius, Cutoff, Warp, Pole };

std::string to_string(ParamKind kind);
ParamKind parse_param_kind(const std::string& name);

// Bounds of one denormalized network output.
struct ParamSpec {
  ParamKind kind = ParamKind::Cutoff;
  double min = 20.0;
  double max = 20000.0;

  // fc [20, 20000] Hz, R [0, 0.99999], a and pole [-0.999, 0.999].
  static ParamSpec defaults(ParamKind kind);
};

// p in [-1, 1] -> (max - min)/2 * p + (max + min)/2
template <class T>
T denormalize(const T& p, const ParamSpec& spec) {
  return p * (0.5 * (spec.max - spec.min)) + 0.5 * (spec.max + spec.min);
}

}  // namespace apf::nn
