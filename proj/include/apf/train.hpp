#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apf/adam.hpp"
#include "apf/autodiff.hpp"
#include "apf/bundle.hpp"
#include "apf/loss.hpp"
#include "apf/model.hpp"
#include "apf/signal.hpp"

namespace apf::train {

enum class LossKind { Mstft, Mse };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 400;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::Mstft;
  nn::ModelKind model = nn::ModelKind::Sequential;
  nn::OrderSpec order = nn::OrderSpec::standard();
  nn::WarpMode warp = nn::WarpMode::PerSection;
  std::size_t seq_len = 2048;
  bool shuffle = true;
  bool early_stop = true;
  std::size_t patience = 20;
  double min_delta = 1e-6;
  std::vector<loss::StftConfig> resolutions = loss::default_resolutions();
  std::vector<std::size_t> hidden{1024, 512, 256, 128};
  double omega0 = 30.0;
  std::vector<nn::ParamSpec> bounds;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t threads = 1;

  // Throws ConfigError on non-positive sizes, rates or an invalid order spec.
  void validate() const;
  nn::ApfModel::Options model_options() const;
  AdamOptions adam_options() const;
};

// Everything needed to turn raw model outputs into a loss on one sequence.
struct Pipeline {
  nn::OrderSpec order;
  nn::ParamLayout layout;
  std::vector<nn::ParamSpec> specs;
  double sample_rate = 48000.0;
  LossKind loss = LossKind::Mstft;
  std::vector<loss::StftConfig> resolutions;

  static Pipeline from(const nn::ApfModel& model, double sample_rate, LossKind loss,
                       std::vector<loss::StftConfig> resolutions);

  // Plain forward evaluation.
  double loss_value(std::span<const double> raw, std::span<const double> x,
                    std::span<const double> y) const;
  // Loss and d(loss)/d(raw) through backpropagation over the unrolled
  // filter recursion. The tape is cleared before use.
  double loss_and_grad(ad::Tape& tape, std::span<const double> raw, std::span<const double> x,
                       std::span<const double> y, std::span<double> grad_raw) const;
};

struct LossPoint {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

struct TrainResult {
  nn::ApfModel model;  // best-loss checkpoint
  CoefficientBundle bundle;
  std::vector<LossPoint> steps;
  std::vector<double> epoch_losses;
  double best_loss = 0.0;
  std::size_t best_epoch = 0;
  bool plateaued = false;
  // Set when training stopped on a non-finite loss.
  std::optional<std::string> failure;
};

using ProgressFn = std::function<void(std::size_t epoch, double epoch_loss)>;

// Fits the model so that model(input) matches target. Each epoch shuffles the
// sequence windows (seeded), forms batches, resets filter states per sequence
// and takes one Adam step per batch on the mean sequence loss.
TrainResult train(const Signal& input, const Signal& target, const TrainConfig& cfg,
                  const ProgressFn& progress = {});

// Runs the exported cascade over x. Throws ParameterError on a rate mismatch.
Signal apply(const CoefficientBundle& bundle, const Signal& x);

// True once the best loss has not improved by more than min_delta (relative)
// for `patience` consecutive epochs.
bool plateau_check(std::span<const double> history, std::size_t patience, double min_delta = 1e-6);

// "step,epoch,loss" rows after a "# config_hash=..." comment line.
std::string loss_csv(std::span<const LossPoint> points, const std::string& config_hash);

}  // namespace apf::train
