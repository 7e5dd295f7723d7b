#include "apf/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "apf/error.hpp"

namespace apf {

void validate(const Signal& signal) {
  if (signal.sample_rate <= 0) {
    throw ParameterError("sample rate must be positive, got " +
                         std::to_string(signal.sample_rate));
  }
  for (std::size_t i = 0; i < signal.samples.size(); ++i) {
    if (!std::isfinite(signal.samples[i])) {
      throw NumericError("non-finite sample at index " + std::to_string(i));
    }
  }
}

SequenceBatch frame(const Signal& signal, std::size_t seq_len) {
  if (seq_len == 0) throw ParameterError("frame: seq_len must be positive");
  if (signal.empty()) throw ParameterError("frame: empty signal");

  const std::size_t n = signal.size();
  const std::size_t count = (n + seq_len - 1) / seq_len;

  SequenceBatch batch;
  batch.seq_len = seq_len;
  batch.source_length = n;
  batch.padding = count * seq_len - n;
  batch.windows.reserve(count);
  batch.offsets.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t begin = w * seq_len;
    const std::size_t end = std::min(begin + seq_len, n);
    std::vector<double> window(seq_len, 0.0);
    std::copy(signal.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              signal.samples.begin() + static_cast<std::ptrdiff_t>(end), window.begin());
    batch.windows.push_back(std::move(window));
    batch.offsets.push_back(begin);
  }
  return batch;
}

std::vector<double> unframe(const SequenceBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.windows.size() * batch.seq_len);
  for (const auto& w : batch.windows) out.insert(out.end(), w.begin(), w.end());
  out.resize(batch.source_length);
  return out;
}

Signal generate_log_sweep(double f1, double f2, double duration, int sample_rate,
                          double amplitude) {
  if (sample_rate <= 0) throw ParameterError("sweep: sample rate must be positive");
  if (!(f1 > 0.0) || !(f2 > f1)) {
    throw ParameterError("sweep: require 0 < f1 < f2");
  }
  if (!(f2 < 0.5 * sample_rate)) {
    throw ParameterError("sweep: f2 must lie below Nyquist (" +
                         std::to_string(0.5 * sample_rate) + " Hz)");
  }
  if (!(duration > 0.0)) throw ParameterError("sweep: duration must be positive");

  const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
  const double rate = duration / std::log(f2 / f1);
  const double scale = 2.0 * std::numbers::pi * f1 * rate;

  Signal s;
  s.sample_rate = sample_rate;
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    s.samples[i] = amplitude * std::sin(scale * std::expm1(t / rate));
  }
  return s;
}

}  // namespace apf
