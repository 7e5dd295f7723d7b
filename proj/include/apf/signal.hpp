#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace apf {

// Mono sample buffer with its sampling rate.
struct Signal {
  std::vector<double> samples;
  int sample_rate = 48000;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  std::span<const double> view() const { return samples; }
};

// Throws ParameterError unless sample_rate > 0, NumericError on NaN/Inf samples.
void validate(const Signal& signal);

// Fixed-length, contiguous, non-overlapping windows of a source signal.
// The final window is zero-padded; `padding` counts the appended zeros.
struct SequenceBatch {
  std::size_t seq_len = 0;
  std::size_t source_length = 0;
  std::size_t padding = 0;
  std::vector<std::vector<double>> windows;
  std::vector<std::size_t> offsets;

  std::size_t size() const { return windows.size(); }
};

SequenceBatch frame(const Signal& signal, std::size_t seq_len);

// Concatenates the windows and drops the recorded padding.
std::vector<double> unframe(const SequenceBatch& batch);

// Exponential sine sweep
//   x(t) = A sin(2 pi f1 L (exp(t/L) - 1)),  L = duration / ln(f2/f1),
// sampled at t = n / sample_rate for n < round(duration * sample_rate).
Signal generate_log_sweep(double f1, double f2, double duration, int sample_rate,
                          double amplitude = 0.5);

}  // namespace apf
