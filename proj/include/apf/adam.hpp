#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apf/model.hpp"

namespace apf::train {

struct AdamOptions {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moments, one moment buffer per parameter block.
class Adam {
 public:
  explicit Adam(AdamOptions options);

  // Moments are sized on the first call; later calls must pass blocks of the
  // same shapes.
  void step(std::span<const nn::ParamBlock> blocks);

  std::uint64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  std::span<const std::vector<double>> first_moments() const { return m_; }
  std::span<const std::vector<double>> second_moments() const { return v_; }

 private:
  AdamOptions options_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace apf::train
