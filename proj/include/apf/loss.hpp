#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "apf/autodiff.hpp"

namespace apf::loss {

enum class Window { Hann, Rectangular };

std::string to_string(Window w);
Window parse_window(const std::string& name);

struct StftConfig {
  std::size_t fft_size = 1024;
  std::size_t hop = 120;
  std::size_t win_length = 600;
  Window window = Window::Hann;
  // Exponent applied to |STFT|: 1 = magnitude, 2 = power spectrogram.
  int power = 1;

  // Throws ConfigError unless hop > 0, 0 < win_length <= fft_size, fft_size
  // even and power in {1, 2}.
  void validate() const;
  bool operator==(const StftConfig&) const = default;
};

// (512, 50, 240), (1024, 120, 600), (2048, 240, 1200) with Hann windows.
std::vector<StftConfig> default_resolutions(int power = 1);

// Non-negative frames x bins matrix, bins = fft_size / 2 + 1.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  double operator()(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
};

// 1 + floor((length - win_length) / hop); throws ParameterError when the
// signal is shorter than one window.
std::size_t frame_count(std::size_t length, const StftConfig& cfg);

// Frames start every `hop` samples, are windowed, centered in a zero-padded
// fft_size buffer and transformed; cell = |X|^power.
Spectrogram spectrogram(std::span<const double> x, const StftConfig& cfg);

// Interference loss of one pair: mean over time-frequency cells of
//   ((S(y) + S(y_hat)) - S(y + y_hat))^2.
// With power 1 the inner term is non-negative and vanishes exactly when y
// and y_hat are phase-aligned in every cell. When `grad_y_hat` is non-empty
// it receives d(loss)/d(y_hat).
double interference_stft_loss(std::span<const double> y, std::span<const double> y_hat,
                              const StftConfig& cfg, std::span<double> grad_y_hat = {});

// Mean over batch items.
double interference_stft_loss(const std::vector<std::vector<double>>& y,
                              const std::vector<std::vector<double>>& y_hat, const StftConfig& cfg);

// Mean of the interference loss over resolutions.
double mstft_loss(std::span<const double> y, std::span<const double> y_hat,
                  std::span<const StftConfig> resolutions, std::span<double> grad_y_hat = {});

struct LossReport {
  double value = 0.0;
  std::vector<double> per_resolution;
  std::size_t batch_size = 0;
};

// Batch M-STFT with the per-resolution breakdown.
LossReport mstft_report(const std::vector<std::vector<double>>& y,
                        const std::vector<std::vector<double>>& y_hat,
                        std::span<const StftConfig> resolutions);

// Mean squared sample difference.
double mse_time_loss(std::span<const double> y, std::span<const double> y_hat,
                     std::span<double> grad_y_hat = {});

// Fused tape versions; the target is a constant.
ad::Var mstft_loss(ad::Tape& tape, std::span<const double> y, std::span<const ad::Var> y_hat,
                   std::span<const StftConfig> resolutions);
ad::Var mse_time_loss(ad::Tape& tape, std::span<const double> y, std::span<const ad::Var> y_hat);

}  // namespace apf::loss
