#include "apf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "apf/error.hpp"

namespace apf {
namespace {

std::size_t sample_count(double duration, int sample_rate) {
  if (sample_rate <= 0) throw ParameterError("sample rate must be positive");
  if (!(duration > 0.0)) throw ParameterError("duration must be positive");
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

void normalize_peak(std::vector<double>& x, double amplitude) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    const double g = amplitude / peak;
    for (double& v : x) v *= g;
  }
}

}  // namespace

Signal generate_multitone(std::span<const double> frequencies, double duration, int sample_rate,
                          double amplitude, std::uint64_t seed) {
  const std::size_t n = sample_count(duration, sample_rate);
  for (double f : frequencies) {
    if (!(f > 0.0) || !(f < 0.5 * sample_rate)) {
      throw ParameterError("multitone: frequency outside (0, Nyquist)");
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  Signal s;
  s.sample_rate = sample_rate;
  s.samples.assign(n, 0.0);
  for (double f : frequencies) {
    const double w = 2.0 * std::numbers::pi * f / sample_rate;
    const double phi = phase(rng);
    for (std::size_t i = 0; i < n; ++i) s.samples[i] += std::sin(w * static_cast<double>(i) + phi);
  }
  normalize_peak(s.samples, amplitude);
  return s;
}

Signal generate_noise_bursts(double duration, double burst, double period, int sample_rate,
                             double amplitude, std::uint64_t seed) {
  const std::size_t n = sample_count(duration, sample_rate);
  if (!(burst > 0.0) || !(period >= burst)) {
    throw ParameterError("noise bursts: require 0 < burst <= period");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  const auto period_n = static_cast<std::size_t>(period * sample_rate);
  const auto burst_n = std::max<std::size_t>(1, static_cast<std::size_t>(burst * sample_rate));
  const std::size_t edge = std::min<std::size_t>(burst_n / 4, static_cast<std::size_t>(0.005 * sample_rate));

  Signal s;
  s.sample_rate = sample_rate;
  s.samples.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = period_n > 0 ? i % period_n : i;
    if (k >= burst_n) continue;
    double gate = 1.0;
    if (edge > 0 && k < edge) gate = 0.5 - 0.5 * std::cos(std::numbers::pi * k / edge);
    if (edge > 0 && burst_n - k <= edge) {
      gate = 0.5 - 0.5 * std::cos(std::numbers::pi * (burst_n - k) / edge);
    }
    s.samples[i] = gate * noise(rng);
  }
  normalize_peak(s.samples, amplitude);
  return s;
}

Signal generate_plucked_string(double frequency, double duration, int sample_rate,
                               double amplitude, std::uint64_t seed) {
  const std::size_t n = sample_count(duration, sample_rate);
  if (!(frequency > 0.0) || !(frequency < 0.25 * sample_rate)) {
    throw ParameterError("plucked string: frequency outside (0, fs/4)");
  }
  const auto delay = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(sample_rate / frequency)));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> excite(-1.0, 1.0);

  std::vector<double> line(delay);
  for (double& v : line) v = excite(rng);

  Signal s;
  s.sample_rate = sample_rate;
  s.samples.resize(n);
  std::size_t head = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = (head + 1) % delay;
    const double out = line[head];
    line[head] = 0.996 * 0.5 * (line[head] + line[next]);
    head = next;
    s.samples[i] = out;
  }
  normalize_peak(s.samples, amplitude);
  return s;
}

Signal generate_test_material(double duration, int sample_rate, std::uint64_t seed) {
  const double part = duration / 3.0;
  const double tones[] = {55.0, 110.0, 220.0, 330.0, 440.0, 660.0, 880.0, 1320.0, 1760.0,
                          2640.0, 3520.0, 5280.0, 7040.0};
  std::vector<double> usable;
  for (double f : tones) {
    if (f < 0.45 * sample_rate) usable.push_back(f);
  }

  Signal out;
  out.sample_rate = sample_rate;
  auto append = [&out](const Signal& s) {
    out.samples.insert(out.samples.end(), s.samples.begin(), s.samples.end());
  };
  append(generate_multitone(usable, part, sample_rate, 0.5, seed));
  append(generate_noise_bursts(part, 0.1, 0.25, sample_rate, 0.5, seed + 1));
  const double notes[] = {82.41, 110.0, 146.83, 196.0};
  const double note_len = part / 4.0;
  for (std::size_t i = 0; i < 4; ++i) {
    append(generate_plucked_string(notes[i], note_len, sample_rate, 0.5, seed + 2 + i));
  }
  return out;
}

}  // namespace apf
