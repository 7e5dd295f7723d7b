#include "apf/adam.hpp"

#include <cmath>

#include "apf/error.hpp"

namespace apf::train {

Adam::Adam(AdamOptions options) : options_(options) {
  if (!(options_.learning_rate > 0.0)) throw ConfigError("Adam: learning rate must be positive");
  if (!(options_.beta1 >= 0.0 && options_.beta1 < 1.0) || !(options_.beta2 >= 0.0 && options_.beta2 < 1.0)) {
    throw ConfigError("Adam: betas must lie in [0, 1)");
  }
  if (!(options_.epsilon > 0.0)) throw ConfigError("Adam: epsilon must be positive");
}

void Adam::step(std::span<const nn::ParamBlock> blocks) {
  if (m_.empty()) {
    for (const auto& b : blocks) {
      m_.emplace_back(b.values.size(), 0.0);
      v_.emplace_back(b.values.size(), 0.0);
    }
  }
  if (blocks.size() != m_.size()) throw ParameterError("Adam: block count changed between steps");

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto values = blocks[k].values;
    auto grads = blocks[k].grads;
    auto& m = m_[k];
    auto& v = v_[k];
    if (values.size() != m.size()) throw ParameterError("Adam: block shape changed between steps");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grads[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      values[i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

}  // namespace apf::train
