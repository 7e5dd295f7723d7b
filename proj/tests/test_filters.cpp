#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <random>

#include "apf/error.hpp"
#include "apf/fft.hpp"
#include "apf/filters.hpp"
#include "support.hpp"

using namespace apf;
using namespace apf::filters;
using cd = std::complex<double>;

namespace {

// A2(z) evaluated from the transfer function, independent of the recursions.
cd biquad_tf(double c, double d, cd zinv) { return (c + d * zinv + zinv * zinv) / (1.0 + d * zinv + c * zinv * zinv); }
// Warped: every z^-1 replaced by D(z) = (a + z^-1) / (1 + a z^-1).
cd warped_tf(double c, double d, double a, cd zinv) { return biquad_tf(c, d, (a + zinv) / (1.0 + a * zinv)); }

cd zinv_at(double omega) { return std::polar(1.0, -omega); }

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> impulse(std::size_t n) {
  std::vector<double> x(n, 0.0);
  x[0] = 1.0;
  return x;
}

std::vector<cd> spectrum(const std::vector<double>& h) {
  RealFft fft(h.size());
  std::vector<cd> out(fft.bins());
  fft.forward(h, out);
  return out;
}

}  // namespace

TEST_CASE("biquad coefficients") {
  BiquadCoeffs k = compute_biquad_coeffs({0.5, 12000.0, 0.0}, 48000.0);
  CHECK(k.c == 0.25);
  CHECK(std::abs(k.d) < 1e-15);

  k = compute_biquad_coeffs({0.0, 1234.0, 0.0}, 48000.0);
  CHECK(k.c == 0.0);
  CHECK(k.d == 0.0);

  // Scalar oracle: R^2 and -2 R cos(2 pi 20 / 192000).
  k = compute_biquad_coeffs({0.9793, 20.0, 0.0}, 192000.0);
  CHECK(k.c == doctest::Approx(0.95902849).epsilon(1e-8));
  CHECK(k.d == doctest::Approx(-1.95860).epsilon(1e-5));
  CHECK(k.d == doctest::Approx(-2 * 0.9793 * std::cos(2 * std::numbers::pi * 20 / 192000)).epsilon(1e-15));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(validate(ApfParams{0.99999, 20.0, -0.999}));
  CHECK_THROWS_AS(validate(ApfParams{1.0, 1000.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(validate(ApfParams{-0.1, 1000.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(validate(ApfParams{0.5, 1000.0, 1.0}), ParameterError);
  CHECK_THROWS_AS(validate(ApfParams{0.5, 10.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(validate(ApfParams{0.5, 30000.0, 0.0}), ParameterError);
  CHECK_THROWS_AS(Section::first_order(1.0).validate(), ParameterError);
  CHECK_THROWS_AS(check_warp_denominator(0.0, 0.0, -2.0, 0.5), NumericError);
  // 1 + a^2 c + a d vanishes for c = 0, d = -2, a = 0.5 (not a valid section).
  CHECK_THROWS_AS(warped_biquad_terms(0.0, -2.0, 0.5), NumericError);
}

TEST_CASE("biquad step: impulse and delay cases") {
  const double c = 0.36, d = -0.7;
  BiquadState<double> s;
  const double y0 = biquad_apf_step(s, c, d, 1.0);
  const double y1 = biquad_apf_step(s, c, d, 0.0);
  CHECK(y0 == c);
  CHECK(y1 == doctest::Approx(d * (1 - c)).epsilon(1e-15));

  std::mt19937_64 rng(1);
  const auto x = testing::random_vector(rng, 64);
  const auto y = process_biquad<double, double>(x, 0.0, 0.0, 0.0);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  for (std::size_t n = 2; n < x.size(); ++n) CHECK(y[n] == x[n - 2]);
}

TEST_CASE("biquad impulse response matches the transfer function") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const double r = testing::uniform(rng, 0.0, 0.95);
    const double fc = testing::uniform(rng, 20.0, 20000.0);
    const auto k = compute_biquad_coeffs({r, fc, 0.0}, 48000.0);
    const auto h = process_biquad<double, double>(impulse(4096), k.c, k.d, 0.0);
    const auto spec = spectrum(h);
    for (std::size_t b = 0; b < spec.size(); b += 37) {
      const cd want = biquad_tf(k.c, k.d, zinv_at(2 * std::numbers::pi * b / 4096.0));
      CHECK(std::abs(spec[b] - want) < 1e-9);
    }
  }
}

TEST_CASE("warped biquad: first output sample") {
  const double c = 0.49, d = -1.1, a = 0.3;
  BiquadState<double> s;
  const double y0 = warped_biquad_apf_step(s, BiquadCoeffs{c, d}, a, 1.0);
  CHECK(y0 == doctest::Approx((c + a * a + a * d) / (1 + a * a * c + a * d)).epsilon(1e-15));
}

TEST_CASE("warped biquad matches A2(D(z))") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const double r = testing::uniform(rng, 0.0, 0.95);
    const double fc = testing::uniform(rng, 20.0, 20000.0);
    const double a = testing::uniform(rng, -0.7, 0.7);
    const auto k = compute_biquad_coeffs({r, fc, a}, 48000.0);
    const auto h = process_warped_biquad<double, double>(impulse(8192), warped_biquad_terms(k.c, k.d, a), 0.0);
    const auto spec = spectrum(h);
    for (std::size_t b = 0; b < spec.size(); b += 101) {
      const cd want = warped_tf(k.c, k.d, a, zinv_at(2 * std::numbers::pi * b / 8192.0));
      CHECK(std::abs(spec[b] - want) < 1e-8);
      CHECK(std::abs(std::abs(spec[b]) - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("warped biquad with a = 0 is bit-identical to the plain biquad") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 25; ++t) {
    const double c = testing::uniform(rng, 0.0, 0.99);
    // Stable region of A2: |d| < 1 + c.
    const double d = testing::uniform(rng, -1.0, 1.0) * (1.0 + c) * 0.999;
    const auto x = testing::random_vector(rng, 4000);
    const auto plain = process_biquad<double, double>(x, c, d, 0.0);
    const auto warped = process_warped_biquad<double, double>(x, warped_biquad_terms(c, d, 0.0), 0.0);
    bool same = true;
    for (std::size_t n = 0; n < x.size(); ++n) same = same && bit_equal(plain[n], warped[n]);
    CHECK(same);
  }
}

TEST_CASE("warped biquad preserves white-noise power") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    const double r = testing::uniform(rng, 0.1, 0.9);
    const double fc = testing::uniform(rng, 100.0, 15000.0);
    const double a = testing::uniform(rng, -0.6, 0.6);
    const auto k = compute_biquad_coeffs({r, fc, a}, 48000.0);
    std::vector<double> x(100000);
    for (double& v : x) v = g(rng);
    const auto y = process_warped_biquad<double, double>(x, warped_biquad_terms(k.c, k.d, a), 0.0);
    // Compare from sample 1000 on so the start-up transient has decayed.
    // The all-pass error y - H*x is zero, so the ratio can only differ by
    // sampling noise of the cross terms, far below 1e-3 at this length.
    double ex = 0.0, ey = 0.0;
    for (std::size_t n = 1000; n < x.size(); ++n) {
      ex += x[n] * x[n];
      ey += y[n] * y[n];
    }
    CHECK(std::sqrt(ey / ex) == doctest::Approx(1.0).epsilon(1e-2));
  }
  // The exact statement behind it: the impulse response has unit energy.
  const auto k = compute_biquad_coeffs({0.8, 2000.0, 0.4}, 48000.0);
  const auto h = process_warped_biquad<double, double>(impulse(8192), warped_biquad_terms(k.c, k.d, 0.4), 0.0);
  double e = 0.0;
  for (double v : h) e += v * v;
  CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("first-order all-pass") {
  std::mt19937_64 rng(6);
  const auto x = testing::random_vector(rng, 32);
  const auto y = process_first_order<double, double>(x, 0.0, 0.0);
  CHECK(y[0] == 0.0);
  for (std::size_t n = 1; n < x.size(); ++n) CHECK(y[n] == x[n - 1]);

  const double p = -0.45;
  const auto h = process_first_order<double, double>(impulse(4), p, 0.0);
  CHECK(h[0] == p);
  CHECK(h[1] == doctest::Approx(1 - p * p).epsilon(1e-15));

  // Steady-state gain of a long sine.
  for (double f : {50.0, 1000.0, 15000.0}) {
    std::vector<double> s(48000);
    for (std::size_t n = 0; n < s.size(); ++n) s[n] = std::sin(2 * std::numbers::pi * f * n / 48000.0);
    const auto o = process_first_order<double, double>(s, 0.8, 0.0);
    double ei = 0.0, eo = 0.0;
    for (std::size_t n = 24000; n < s.size(); ++n) {
      ei += s[n] * s[n];
      eo += o[n] * o[n];
    }
    CHECK(std::sqrt(eo / ei) == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("warped first-order section equals an unwarped one with a moved pole") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const double p = testing::uniform(rng, -0.95, 0.95);
    const double a = testing::uniform(rng, -0.9, 0.9);
    const auto x = testing::random_vector(rng, 512);
    const auto w = process_warped_first_order<double, double>(x, warped_first_order_terms(p, a), 0.0);
    const auto u = process_first_order<double, double>(x, (p + a) / (1 + p * a), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) CHECK(w[n] == doctest::Approx(u[n]).epsilon(1e-11));
    const auto z = process_warped_first_order<double, double>(x, warped_first_order_terms(p, 0.0), 0.0);
    const auto q = process_first_order<double, double>(x, p, 0.0);
    bool same = true;
    for (std::size_t n = 0; n < x.size(); ++n) same = same && bit_equal(z[n], q[n]);
    CHECK(same);
  }
}

TEST_CASE("cascade composition") {
  std::mt19937_64 rng(8);
  const auto x = testing::random_vector(rng, 100);
  Cascade empty;
  CHECK(empty.process(x) == x);
  CHECK(empty.order() == 0);

  Cascade delays;
  delays.add(Section::biquad({0.0, 1000.0, 0.0}, 48000.0, false));
  delays.add(Section::biquad({0.0, 5000.0, 0.0}, 48000.0, false));
  CHECK(delays.order() == 4);
  const auto y = delays.process(x);
  for (std::size_t n = 0; n < 4; ++n) CHECK(y[n] == 0.0);
  for (std::size_t n = 4; n < x.size(); ++n) CHECK(y[n] == x[n - 4]);

  // Cascade output equals manual chaining and its response is the product.
  Cascade c;
  c.add(Section::biquad({0.7, 800.0, 0.2}, 48000.0, true));
  c.add(Section::biquad({0.5, 6000.0, 0.0}, 48000.0, false));
  c.add(Section::first_order(0.3, -0.4, true));
  CHECK(c.order() == 5);
  auto chained = process_section(c.sections()[0], x);
  chained = process_section(c.sections()[1], chained);
  chained = process_section(c.sections()[2], chained);
  CHECK(c.process(x) == chained);
  const double f = 1234.0;
  const cd prod = c.sections()[0].response(2 * std::numbers::pi * f / 48000.0) *
                  c.sections()[1].response(2 * std::numbers::pi * f / 48000.0) *
                  c.sections()[2].response(2 * std::numbers::pi * f / 48000.0);
  CHECK(std::abs(c.response(f, 48000.0) - prod) < 1e-14);
  const auto h = c.impulse_response(8192);
  const auto spec = spectrum(h);
  const std::size_t bin = 211;
  CHECK(std::abs(spec[bin] - c.response(bin * 48000.0 / 8192.0, 48000.0)) < 1e-9);
}

TEST_CASE("cascade impulse responses are all-pass") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    Cascade c;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int s = 0; s < n; ++s) {
      const bool warped = rng() % 2;
      const double a = warped ? testing::uniform(rng, -0.8, 0.8) : 0.0;
      if (rng() % 3 == 0) {
        c.add(Section::first_order(testing::uniform(rng, -0.95, 0.95), a, warped));
      } else {
        c.add(Section::biquad({testing::uniform(rng, 0.0, 0.95), testing::uniform(rng, 20.0, 20000.0), a}, 48000.0,
                              warped));
      }
    }
    const auto spec = spectrum(c.impulse_response(8192));
    double worst = 0.0;
    for (const cd& v : spec) worst = std::max(worst, std::abs(std::abs(v) - 1.0));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("invalid sections are reported with their index") {
  Cascade c;
  c.add(Section::biquad({0.5, 1000.0, 0.0}, 48000.0, false));
  Section bad;
  bad.spec = {2, false};
  bad.coeffs = {1.2, 0.0};
  try {
    c.add(bad);
    c.process(std::vector<double>(4, 1.0));
    FAIL("expected an error");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("section 1") != std::string::npos);
  }
}

TEST_CASE("RC low-pass") {
  const RcFilter rc;
  CHECK(rc.rho(48000.0) == doctest::Approx(1.0 / (2 * 48000.0 * 120 * 68e-9)).epsilon(1e-15));
  RcFilter lit;
  lit.literal_rho = true;
  CHECK(lit.rho(48000.0) == doctest::Approx(48000.0 / (2 * 120 * 68e-9)).epsilon(1e-15));

  const auto ones = rc.process(std::vector<double>(200, 1.0), 48000.0);
  CHECK(ones.back() == 1.0);
  const auto zeros = rc.process(std::vector<double>(50, 0.0), 48000.0);
  for (double v : zeros) CHECK(v == 0.0);

  const double fc_analog = 1.0 / (2 * std::numbers::pi * 120 * 68e-9);
  CHECK(fc_analog == doctest::Approx(19504.0).epsilon(1e-3));

  auto minus3db = [&](double fs, std::size_t n) {
    const auto h = rc.process(impulse(n), fs);
    const auto spec = spectrum(h);
    for (std::size_t b = 1; b < spec.size(); ++b) {
      if (std::abs(spec[b]) < std::sqrt(0.5)) {
        // Linear interpolation between the straddling bins.
        const double m0 = std::abs(spec[b - 1]), m1 = std::abs(spec[b]);
        const double frac = (m0 - std::sqrt(0.5)) / (m0 - m1);
        return (b - 1 + frac) * fs / static_cast<double>(n);
      }
    }
    return 0.0;
  };
  // The bilinear map sends the analog cutoff 1/RC to tan(pi f / fs) = rho,
  // which at 48 kHz lands near 13.85 kHz rather than 19.5 kHz.
  const double predicted48 = 48000.0 / std::numbers::pi * std::atan(rc.rho(48000.0));
  CHECK(minus3db(48000.0, 1 << 16) == doctest::Approx(predicted48).epsilon(2e-3));
  // Oversampled far enough, the analog cutoff is recovered within 2 %.
  CHECK(minus3db(768000.0, 1 << 20) == doctest::Approx(fc_analog).epsilon(0.02));
}
