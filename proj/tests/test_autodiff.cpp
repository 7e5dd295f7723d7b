#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "apf/autodiff.hpp"
#include "apf/error.hpp"
#include "apf/filters.hpp"
#include "support.hpp"

using namespace apf;
using ad::Tape;
using ad::Var;

TEST_CASE("elementary derivatives") {
  Tape t;
  Var x = t.variable(3.0);
  Var y = ad::square(x);
  t.backward(y);
  CHECK(x.grad() == 6.0);

  Tape u;
  Var z = u.variable(0.0);
  u.backward(ad::tanh(z));
  CHECK(z.grad() == 1.0);
}

TEST_CASE("sin(a b) against central differences") {
  const double a0 = 0.7, b0 = 1.3, h = 1e-6;
  Tape t;
  Var a = t.variable(a0), b = t.variable(b0);
  t.backward(ad::sin(a * b));
  const double fa = (std::sin((a0 + h) * b0) - std::sin((a0 - h) * b0)) / (2 * h);
  const double fb = (std::sin(a0 * (b0 + h)) - std::sin(a0 * (b0 - h))) / (2 * h);
  CHECK(a.grad() == doctest::Approx(fa).epsilon(1e-6));
  CHECK(b.grad() == doctest::Approx(fb).epsilon(1e-6));
}

TEST_CASE("operator coverage against finite differences") {
  std::mt19937_64 rng(1);
  using F = std::function<Var(Var, Var)>;
  using G = std::function<double(double, double)>;
  const std::vector<std::pair<F, G>> cases = {
      {[](Var a, Var b) { return a + b * 2.0 - 1.5 / b; }, [](double a, double b) { return a + b * 2.0 - 1.5 / b; }},
      {[](Var a, Var b) { return (a - b) * (3.0 - a) / (b * b + 1.0); },
       [](double a, double b) { return (a - b) * (3.0 - a) / (b * b + 1.0); }},
      {[](Var a, Var b) { return -ad::cos(a) * ad::tanh(b) + 2.0 * a; },
       [](double a, double b) { return -std::cos(a) * std::tanh(b) + 2.0 * a; }},
      {[](Var a, Var b) { return (a + 0.5) / b - a * 4.0 + (1.0 - b); },
       [](double a, double b) { return (a + 0.5) / b - a * 4.0 + (1.0 - b); }},
  };
  for (const auto& [f, g] : cases) {
    for (int trial = 0; trial < 20; ++trial) {
      const double a0 = testing::uniform(rng, -2, 2), b0 = testing::uniform(rng, 0.5, 2);
      Tape t;
      Var a = t.variable(a0), b = t.variable(b0);
      t.backward(f(a, b));
      const double h = 1e-6;
      CHECK(a.grad() == doctest::Approx((g(a0 + h, b0) - g(a0 - h, b0)) / (2 * h)).epsilon(1e-6));
      CHECK(b.grad() == doctest::Approx((g(a0, b0 + h) - g(a0, b0 - h)) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("sum, mean and accumulation semantics") {
  Tape t;
  std::vector<double> v{1.0, -2.0, 0.5, 4.0};
  auto xs = t.variables(v);
  Var s = ad::sum(xs);
  CHECK(s.value() == 3.5);
  t.backward(s);
  for (Var x : xs) CHECK(x.grad() == 1.0);
  // A second sweep without zeroing doubles leaf gradients.
  t.backward(s);
  for (Var x : xs) CHECK(x.grad() == 2.0);
  t.zero_grad();
  Var m = ad::mean(xs);
  CHECK(m.value() == 0.875);
  t.backward(m);
  for (Var x : xs) CHECK(x.grad() == 0.25);
}

TEST_CASE("interior adjoints are reset between sweeps") {
  Tape t;
  Var x = t.variable(2.0);
  Var y = x * x;  // interior
  Var z = y * 3.0;
  t.backward(z);
  CHECK(x.grad() == 12.0);
  t.backward(z);
  CHECK(x.grad() == 24.0);
}

TEST_CASE("custom fused op") {
  Tape t;
  Var a = t.variable(2.0), b = t.variable(5.0);
  // outputs (a b, a + b)
  auto outs = t.custom(std::vector<double>{10.0, 7.0}, [a, b](std::span<const double> adj, Tape& tape) {
    tape.accumulate(a, adj[0] * 5.0 + adj[1]);
    tape.accumulate(b, adj[0] * 2.0 + adj[1]);
  });
  Var l = outs[0] * 2.0 + outs[1] * outs[1];
  t.backward(l);
  CHECK(a.grad() == doctest::Approx(2.0 * 5.0 + 2.0 * 7.0));
  CHECK(b.grad() == doctest::Approx(2.0 * 2.0 + 2.0 * 7.0));
}

TEST_CASE("multi-output backward with seeds") {
  Tape t;
  Var x = t.variable(1.5);
  Var y1 = x * x, y2 = ad::sin(x);
  std::vector<Var> outs{y1, y2};
  std::vector<double> seeds{2.0, -1.0};
  t.backward(outs, seeds);
  CHECK(x.grad() == doctest::Approx(2.0 * 3.0 - std::cos(1.5)).epsilon(1e-15));
}

TEST_CASE("rewind drops nodes") {
  Tape t;
  Var x = t.variable(1.0);
  const auto m = t.mark();
  Var y = x * 2.0;
  (void)y;
  CHECK(t.size() == m + 1);
  t.rewind(m);
  CHECK(t.size() == m);
  Var z = x * 5.0;
  t.backward(z);
  CHECK(x.grad() == 5.0);
}

TEST_CASE("division by zero raises NumericError") {
  Tape t;
  Var x = t.variable(1.0), z = t.variable(0.0);
  CHECK_THROWS_AS(x / z, NumericError);
  CHECK_THROWS_AS(x / 0.0, NumericError);
  CHECK_THROWS_AS(2.0 / z, NumericError);
}

TEST_CASE("gradient through a 2048-step biquad recursion") {
  std::mt19937_64 rng(2);
  const auto x = testing::random_vector(rng, 2048);
  const auto target = testing::random_vector(rng, 2048);
  auto loss_of = [&](double c, double d) {
    const auto y = filters::process_biquad<double, double>(x, c, d, 0.0);
    double l = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) l += (y[n] - target[n]) * (y[n] - target[n]);
    return l / static_cast<double>(y.size());
  };
  for (int trial = 0; trial < 5; ++trial) {
    const double c0 = testing::uniform(rng, 0.1, 0.9);
    const double d0 = testing::uniform(rng, -1.5, 1.5) * std::sqrt(c0);
    Tape t;
    Var c = t.variable(c0), d = t.variable(d0), zero = t.variable(0.0);
    const auto y = filters::process_biquad<Var, double>(x, c, d, zero);
    std::vector<Var> sq;
    for (std::size_t n = 0; n < y.size(); ++n) sq.push_back(ad::square(y[n] - target[n]));
    t.backward(ad::mean(sq));
    const double hc = 1e-4 * std::max(1.0, c0), hd = 1e-4 * std::max(1.0, std::abs(d0));
    const double gc = (loss_of(c0 + hc, d0) - loss_of(c0 - hc, d0)) / (2 * hc);
    const double gd = (loss_of(c0, d0 + hd) - loss_of(c0, d0 - hd)) / (2 * hd);
    CHECK(std::abs(c.grad() - gc) <= 1e-4 * std::max(1.0, std::abs(gc)));
    CHECK(std::abs(d.grad() - gd) <= 1e-4 * std::max(1.0, std::abs(gd)));
  }
}
