#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include <unistd.h>

#include "apf/error.hpp"
#include "apf/log.hpp"
#include "apf/signal.hpp"
#include "apf/synth.hpp"
#include "apf/wav.hpp"
#include "support.hpp"

using namespace apf;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("apfalign_test_" + std::to_string(::getpid()) + "_" + name);
}

// Analytic sweep phase, used to check the instantaneous frequency.
double sweep_phase(double f1, double f2, double d, double t) {
  const double l = d / std::log(f2 / f1);
  return 2.0 * std::numbers::pi * f1 * l * std::expm1(t / l);
}

}  // namespace

TEST_CASE("log sweep length and start frequency at the full-band protocol") {
  const Signal s = generate_log_sweep(20, 20000, 10, 192000, 1.0);
  CHECK(s.size() == 1920000);
  CHECK(s.sample_rate == 192000);
  CHECK(s.samples[0] == 0.0);
  // d(phase)/dt at t=0 over 2 pi.
  const double h = 1e-7;
  const double f0 = (sweep_phase(20, 20000, 10, h) - sweep_phase(20, 20000, 10, -h)) / (2 * h) / (2 * std::numbers::pi);
  CHECK(f0 == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("log sweep geometric midpoint") {
  const double h = 1e-6;
  const double f = (sweep_phase(100, 400, 2, 1 + h) - sweep_phase(100, 400, 2, 1 - h)) / (2 * h) / (2 * std::numbers::pi);
  CHECK(std::abs(f - 200.0) < 2.0);

  // The sampled sweep follows the same phase.
  const Signal s = generate_log_sweep(100, 400, 2, 48000, 1.0);
  for (std::size_t n : {0u, 1000u, 48000u, 95999u}) {
    CHECK(s.samples[n] == doctest::Approx(std::sin(sweep_phase(100, 400, 2, n / 48000.0))).epsilon(1e-12));
  }
}

TEST_CASE("zero-amplitude sweep is silent") {
  const Signal s = generate_log_sweep(50, 5000, 0.5, 16000, 0.0);
  CHECK(s.size() == 8000);
  for (double v : s.samples) CHECK(v == 0.0);
}

TEST_CASE("sweep argument errors") {
  CHECK_THROWS_AS(generate_log_sweep(0, 100, 1, 48000), ParameterError);
  CHECK_THROWS_AS(generate_log_sweep(200, 100, 1, 48000), ParameterError);
  CHECK_THROWS_AS(generate_log_sweep(20, 30000, 1, 48000), ParameterError);
  CHECK_THROWS_AS(generate_log_sweep(20, 200, -1, 48000), ParameterError);
}

TEST_CASE("framing") {
  auto make = [](std::size_t n) {
    Signal s;
    for (std::size_t i = 0; i < n; ++i) s.samples.push_back(static_cast<double>(i + 1));
    return s;
  };
  SUBCASE("exact division") {
    const auto b = frame(make(4096), 2048);
    CHECK(b.size() == 2);
    CHECK(b.padding == 0);
  }
  SUBCASE("padded tail") {
    const Signal s = make(5000);
    const auto b = frame(s, 2048);
    CHECK(b.size() == 3);
    CHECK(b.padding == 1144);
    CHECK(b.windows[2][5000 - 4096 - 1] == 5000.0);
    CHECK(b.windows[2][5000 - 4096] == 0.0);
    CHECK(b.offsets == std::vector<std::size_t>{0, 2048, 4096});
    CHECK(unframe(b) == s.samples);
  }
  SUBCASE("single sample") {
    const auto b = frame(make(1), 2048);
    CHECK(b.size() == 1);
    CHECK(b.padding == 2047);
    CHECK(unframe(b).size() == 1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(frame(make(10), 0), ParameterError);
    CHECK_THROWS_AS(frame(Signal{}, 16), ParameterError);
  }
}

TEST_CASE("frame/unframe round trip on random lengths") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 9000;
    const std::size_t len = 1 + rng() % 3000;
    Signal s;
    s.samples = testing::random_vector(rng, n);
    const auto b = frame(s, len);
    CHECK(b.size() == (n + len - 1) / len);
    CHECK(b.padding == b.size() * len - n);
    for (const auto& w : b.windows) CHECK(w.size() == len);
    CHECK(unframe(b) == s.samples);
  }
}

TEST_CASE("signal validation") {
  Signal s{{0.0, std::nan("")}, 48000};
  CHECK_THROWS_AS(validate(s), NumericError);
  s = Signal{{0.0}, 0};
  CHECK_THROWS_AS(validate(s), ParameterError);
}

TEST_CASE("wav float round trip is exact") {
  std::mt19937_64 rng(3);
  Signal s;
  for (double v : testing::random_vector(rng, 1000)) s.samples.push_back(static_cast<float>(v));
  const auto p = temp_path("float.wav");
  write_wav(p, s, SampleFormat::Float32);
  WavInfo info;
  const Signal r = read_wav(p, &info);
  CHECK(info.format == SampleFormat::Float32);
  CHECK(info.sample_rate == 48000);
  CHECK(r.samples == s.samples);
  fs::remove(p);
}

TEST_CASE("wav 16 and 24 bit round trips stay within one quantization step") {
  std::mt19937_64 rng(4);
  Signal s;
  s.samples = testing::random_vector(rng, 1000, -0.99, 0.99);
  for (auto [fmt, step] : {std::pair{SampleFormat::Pcm16, std::ldexp(1.0, -15)},
                           std::pair{SampleFormat::Pcm24, std::ldexp(1.0, -23)}}) {
    const auto p = temp_path("pcm.wav");
    write_wav(p, s, fmt);
    const Signal r = read_wav(p);
    REQUIRE(r.size() == s.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(r.samples[i] - s.samples[i]));
    CHECK(worst <= step);
    // Re-writing decoded PCM reproduces the file exactly.
    const auto q = temp_path("pcm2.wav");
    write_wav(q, r, fmt);
    CHECK(read_wav(q).samples == r.samples);
    fs::remove(p);
    fs::remove(q);
  }
}

TEST_CASE("stereo wav keeps the left channel and warns") {
  const auto p = temp_path("stereo.wav");
  write_wav(p, {{0.25, -0.5, 0.125}, {0.75, 0.75, 0.75}}, 44100, SampleFormat::Float32);
  std::string seen;
  auto previous = set_warning_handler([&](std::string_view m) { seen = m; });
  WavInfo info;
  const Signal r = read_wav(p, &info);
  set_warning_handler(previous);
  CHECK(info.channels == 2);
  CHECK(r.sample_rate == 44100);
  CHECK(r.samples == std::vector<double>{0.25, -0.5, 0.125});
  CHECK_FALSE(seen.empty());
  fs::remove(p);
}

TEST_CASE("malformed wav input raises IoError") {
  const auto p = temp_path("bad.wav");
  {
    std::ofstream out(p, std::ios::binary);
    out << "RIFF\x10\0\0\0WAVEjunk";
  }
  CHECK_THROWS_AS(read_wav(p), IoError);
  CHECK_THROWS_AS(read_wav(temp_path("missing.wav")), IoError);
  CHECK_THROWS_AS(parse_sample_format(8), ParameterError);
  fs::remove(p);
}

TEST_CASE("synthetic test material") {
  const std::vector<double> freqs{110, 440, 1760};
  const Signal m = generate_multitone(freqs, 0.5, 48000, 0.8, 5);
  CHECK(m.size() == 24000);
  double peak = 0.0;
  for (double v : m.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak <= 0.8 + 1e-12);
  CHECK(generate_multitone(freqs, 0.5, 48000, 0.8, 5).samples == m.samples);

  const Signal n = generate_noise_bursts(1.0, 0.1, 0.25, 48000, 0.5, 2);
  CHECK(n.size() == 48000);
  CHECK(n.samples[48000 / 4 - 100] == 0.0);  // between bursts

  const Signal k = generate_plucked_string(220, 0.5, 48000, 0.5, 3);
  CHECK(k.size() == 24000);

  const Signal t = generate_test_material(2.0, 48000, 9);
  CHECK(t.size() > 48000);
  CHECK_NOTHROW(validate(t));
}
