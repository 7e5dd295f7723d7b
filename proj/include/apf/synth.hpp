#pragma once

#include <cstdint>
#include <span>

#include "apf/signal.hpp"

namespace apf {

// Sum of equal-amplitude sinusoids with seeded random phases, scaled so the
// peak of the sum never exceeds `amplitude`.
Signal generate_multitone(std::span<const double> frequencies, double duration, int sample_rate,
                          double amplitude, std::uint64_t seed);

// Gaussian noise gated into bursts of `burst` seconds every `period` seconds,
// with short raised-cosine edges.
Signal generate_noise_bursts(double duration, double burst, double period, int sample_rate,
                             double amplitude, std::uint64_t seed);

// Karplus-Strong plucked string at `frequency`.
Signal generate_plucked_string(double frequency, double duration, int sample_rate,
                               double amplitude, std::uint64_t seed);

// Held-out evaluation material: multitone, noise bursts and plucked notes,
// concatenated. Roughly `duration` seconds long.
Signal generate_test_material(double duration, int sample_rate, std::uint64_t seed);

}  // namespace apf
