#include "apf/nn.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "apf/error.hpp"

namespace apf::nn {

std::size_t biasnet_parameter_count(std::size_t input_dim, std::span<const std::size_t> hidden,
                                    std::size_t output_dim) {
  std::size_t total = input_dim;
  std::size_t fan_in = input_dim;
  for (std::size_t width : hidden) {
    total += fan_in * width + width;
    fan_in = width;
  }
  return total + fan_in * output_dim + output_dim;
}

BiasNet::BiasNet(Options options) : options_(std::move(options)) {
  if (options_.input_dim == 0 || options_.output_dim == 0) {
    throw ConfigError("BiasNet: input and output dimensions must be positive");
  }
  for (std::size_t w : options_.hidden) {
    if (w == 0) throw ConfigError("BiasNet: hidden layer of width 0");
  }
  if (!(options_.omega0 > 0.0)) throw ConfigError("BiasNet: omega0 must be positive");

  std::size_t offset = options_.input_dim;
  std::size_t fan_in = options_.input_dim;
  auto add_layer = [&](std::size_t width, Activation act) {
    DenseLayer layer{fan_in, width, act, offset, offset + fan_in * width};
    offset = layer.bias_offset + width;
    fan_in = width;
    layers_.push_back(layer);
  };
  for (std::size_t w : options_.hidden) add_layer(w, Activation::Sine);
  add_layer(options_.output_dim, Activation::Tanh);

  params_.assign(offset, 0.0);
  grads_.assign(offset, 0.0);
}

BiasNet::BiasNet(Options options, std::uint64_t seed) : BiasNet(std::move(options)) {
  std::mt19937_64 rng(seed);
  auto fill = [&rng, this](std::size_t begin, std::size_t count, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) params_[begin + i] = u(rng);
  };

  for (std::size_t i = 0; i < options_.input_dim; ++i) params_[i] = 1.0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& l = layers_[k];
    const auto n = static_cast<double>(l.inputs);
    if (l.activation == Activation::Sine) {
      const double bound = k == 0 ? 1.0 / n : std::sqrt(6.0 / n) / options_.omega0;
      fill(l.weight_offset, l.inputs * l.outputs, bound);
      fill(l.bias_offset, l.outputs, 1.0 / std::sqrt(n));
    } else {
      fill(l.weight_offset, l.inputs * l.outputs, std::sqrt(6.0 / (n + static_cast<double>(l.outputs))));
    }
  }
}

void BiasNet::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

std::vector<double> BiasNet::forward() const {
  Trace trace;
  return forward(trace);
}

std::vector<double> BiasNet::forward(Trace& trace) const {
  trace.pre.resize(layers_.size());
  trace.post.resize(layers_.size());
  std::span<const double> h(params_.data(), options_.input_dim);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& l = layers_[k];
    auto& z = trace.pre[k];
    auto& a = trace.post[k];
    z.assign(l.outputs, 0.0);
    a.resize(l.outputs);
    const double* w = params_.data() + l.weight_offset;
    const double* b = params_.data() + l.bias_offset;
    for (std::size_t o = 0; o < l.outputs; ++o) {
      double acc = b[o];
      const double* row = w + o * l.inputs;
      for (std::size_t i = 0; i < l.inputs; ++i) acc += row[i] * h[i];
      z[o] = acc;
      switch (l.activation) {
        case Activation::Sine: a[o] = std::sin(options_.omega0 * acc); break;
        case Activation::Tanh: a[o] = std::tanh(acc); break;
        case Activation::None: a[o] = acc; break;
      }
    }
    h = a;
  }
  return trace.post.back();
}

void BiasNet::backward(const Trace& trace, std::span<const double> output_grad) {
  if (output_grad.size() != options_.output_dim || trace.post.size() != layers_.size()) {
    throw ParameterError("BiasNet::backward: gradient/trace shape mismatch");
  }
  std::vector<double> upstream(output_grad.begin(), output_grad.end());
  std::vector<double> delta;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const DenseLayer& l = layers_[k];
    const auto& z = trace.pre[k];
    const auto& a = trace.post[k];
    delta.resize(l.outputs);
    for (std::size_t o = 0; o < l.outputs; ++o) {
      double local = 1.0;
      switch (l.activation) {
        case Activation::Sine: local = options_.omega0 * std::cos(options_.omega0 * z[o]); break;
        case Activation::Tanh: local = 1.0 - a[o] * a[o]; break;
        case Activation::None: break;
      }
      delta[o] = upstream[o] * local;
    }

    const double* h = k == 0 ? params_.data() : trace.post[k - 1].data();
    const double* w = params_.data() + l.weight_offset;
    double* gw = grads_.data() + l.weight_offset;
    double* gb = grads_.data() + l.bias_offset;
    std::vector<double> next(l.inputs, 0.0);
    for (std::size_t o = 0; o < l.outputs; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      const double* row = w + o * l.inputs;
      double* grow = gw + o * l.inputs;
      for (std::size_t i = 0; i < l.inputs; ++i) {
        grow[i] += d * h[i];
        next[i] += d * row[i];
      }
    }
    upstream = std::move(next);
  }
  // upstream now holds d(loss)/d(b0).
  for (std::size_t i = 0; i < options_.input_dim; ++i) grads_[i] += upstream[i];
}

std::vector<ad::Var> BiasNet::forward(ad::Tape& tape) {
  auto trace = std::make_shared<Trace>();
  const std::vector<double> out = forward(*trace);
  return tape.custom(out, [this, trace](std::span<const double> g, ad::Tape&) {
    backward(*trace, g);
  });
}

std::string to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::Radius: return "R";
    case ParamKind::Cutoff: return "fc";
    case ParamKind::Warp: return "a";
    case ParamKind::Pole: return "pole";
  }
  return "?";
}

ParamKind parse_param_kind(const std::string& name) {
  if (name == "R") return ParamKind::Radius;
  if (name == "fc") return ParamKind::Cutoff;
  if (name == "a") return ParamKind::Warp;
  if (name == "pole") return ParamKind::Pole;
  throw ConfigError("unknown parameter kind '" + name + "' (expected R, fc, a or pole)");
}

ParamSpec ParamSpec::defaults(ParamKind kind) {
  switch (kind) {
    case ParamKind::Radius: return {kind, 0.0, 0.99999};
    case ParamKind::Cutoff: return {kind, 20.0, 20000.0};
    case ParamKind::Warp: return {kind, -0.999, 0.999};
    case ParamKind::Pole: return {kind, -0.999, 0.999};
  }
  return {};
}

}  // namespace apf::nn
