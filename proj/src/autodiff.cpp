#include "apf/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

#include "apf/error.hpp"

namespace apf::ad {
namespace {

constexpr double kMinDenominator = 1e-300;

void check_denominator(double d) {
  if (!(std::abs(d) >= kMinDenominator)) {
    std::ostringstream msg;
    msg << "autodiff: division by near-zero denominator " << d;
    throw NumericError(msg.str());
  }
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ParameterError("autodiff: operands live on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw ParameterError("autodiff: operand is not on a tape");
  return *a.tape();
}

}  // namespace

std::uint32_t Tape::check(Var v) const {
  if (v.tape_ != this || v.index_ >= nodes_.size()) {
    throw ParameterError("autodiff: variable does not belong to this tape");
  }
  return v.index_;
}

Var Tape::push(const Node& node) {
  if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw NumericError("autodiff: tape exhausted");
  }
  nodes_.push_back(node);
  adjoint_.push_back(0.0);
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::variable(double value) {
  return push(Node{value, 0.0, 0.0, 0, 0, Kind::Leaf});
}

std::vector<Var> Tape::variables(std::span<const double> values) {
  std::vector<Var> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(variable(v));
  return out;
}

void Tape::reserve(std::size_t n) {
  nodes_.reserve(n);
  adjoint_.reserve(n);
}

void Tape::rewind(std::size_t mark) {
  if (mark >= nodes_.size()) return;
  nodes_.resize(mark);
  adjoint_.resize(mark);
  while (!fused_.empty() && fused_.back().first >= mark) fused_.pop_back();
}

void Tape::zero_grad() { std::fill(adjoint_.begin(), adjoint_.end(), 0.0); }

Var Tape::unary(double value, Var a, double da) {
  const std::uint32_t ia = check(a);
  return push(Node{value, da, 0.0, ia, 0, Kind::Unary});
}

Var Tape::binary(double value, Var a, double da, Var b, double db) {
  const std::uint32_t ia = check(a);
  const std::uint32_t ib = check(b);
  return push(Node{value, da, db, ia, ib, Kind::Binary});
}

std::vector<Var> Tape::custom(std::span<const double> values, Pullback pullback) {
  if (values.empty()) throw ParameterError("autodiff: fused op without outputs");
  const auto first = static_cast<std::uint32_t>(nodes_.size());
  const auto fused_index = static_cast<std::uint32_t>(fused_.size());
  std::vector<Var> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    out.push_back(push(Node{values[i], 0.0, 0.0, 0, 0, Kind::FusedOutput}));
  }
  out.push_back(push(Node{values.back(), 0.0, 0.0, fused_index, 0, Kind::FusedTail}));
  fused_.push_back(Fused{first, static_cast<std::uint32_t>(values.size()), std::move(pullback)});
  return out;
}

Var Tape::custom_scalar(double value, Pullback pullback) {
  const double v[1] = {value};
  return custom(v, std::move(pullback)).front();
}

void Tape::backward(Var loss) {
  const Var outputs[1] = {loss};
  const double seeds[1] = {1.0};
  backward(outputs, seeds);
}

void Tape::backward(std::span<const Var> outputs, std::span<const double> seeds) {
  if (outputs.size() != seeds.size()) throw ParameterError("autodiff: seed count mismatch");
  if (outputs.empty()) return;
  std::uint32_t top = 0;
  for (Var v : outputs) top = std::max(top, check(v));

  for (std::uint32_t i = 0; i <= top; ++i) {
    if (nodes_[i].kind != Kind::Leaf) adjoint_[i] = 0.0;
  }
  for (std::size_t k = 0; k < outputs.size(); ++k) adjoint_[outputs[k].index_] += seeds[k];
  sweep(top);
}

void Tape::sweep(std::uint32_t top) {
  std::vector<double> scratch;
  for (std::uint32_t i = top + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case Kind::Leaf:
      case Kind::FusedOutput:
        break;
      case Kind::Unary: {
        const double g = adjoint_[i];
        if (g != 0.0) adjoint_[n.a] += g * n.da;
        break;
      }
      case Kind::Binary: {
        const double g = adjoint_[i];
        if (g != 0.0) {
          adjoint_[n.a] += g * n.da;
          adjoint_[n.b] += g * n.db;
        }
        break;
      }
      case Kind::FusedTail: {
        const Fused& f = fused_[n.a];
        assert(f.first + f.count == i + 1);
        scratch.assign(adjoint_.begin() + f.first, adjoint_.begin() + f.first + f.count);
        f.pullback(scratch, *this);
        break;
      }
    }
  }
}

Var operator+(Var a, Var b) {
  return tape_of(a, b).binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
Var operator+(Var a, double b) { return tape_of(a).unary(a.value() + b, a, 1.0); }
Var operator+(double a, Var b) { return tape_of(b).unary(a + b.value(), b, 1.0); }

Var operator-(Var a, Var b) {
  return tape_of(a, b).binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
Var operator-(Var a, double b) { return tape_of(a).unary(a.value() - b, a, 1.0); }
Var operator-(double a, Var b) { return tape_of(b).unary(a - b.value(), b, -1.0); }

Var operator*(Var a, Var b) {
  const double va = a.value();
  const double vb = b.value();
  return tape_of(a, b).binary(va * vb, a, vb, b, va);
}
Var operator*(Var a, double b) { return tape_of(a).unary(a.value() * b, a, b); }
Var operator*(double a, Var b) { return tape_of(b).unary(a * b.value(), b, a); }

Var operator/(Var a, Var b) {
  const double va = a.value();
  const double vb = b.value();
  check_denominator(vb);
  return tape_of(a, b).binary(va / vb, a, 1.0 / vb, b, -va / (vb * vb));
}
Var operator/(Var a, double b) {
  check_denominator(b);
  return tape_of(a).unary(a.value() / b, a, 1.0 / b);
}
Var operator/(double a, Var b) {
  const double vb = b.value();
  check_denominator(vb);
  return tape_of(b).unary(a / vb, b, -a / (vb * vb));
}

Var operator-(Var a) { return tape_of(a).unary(-a.value(), a, -1.0); }

Var sin(Var x) {
  const double v = x.value();
  return tape_of(x).unary(std::sin(v), x, std::cos(v));
}

Var cos(Var x) {
  const double v = x.value();
  return tape_of(x).unary(std::cos(v), x, -std::sin(v));
}

Var tanh(Var x) {
  const double t = std::tanh(x.value());
  return tape_of(x).unary(t, x, 1.0 - t * t);
}

Var square(Var x) {
  const double v = x.value();
  return tape_of(x).unary(v * v, x, 2.0 * v);
}

Var sum(std::span<const Var> xs) {
  if (xs.empty()) throw ParameterError("autodiff: sum of empty range");
  Tape& tape = tape_of(xs.front());
  double total = 0.0;
  for (Var x : xs) total += tape.value(x);
  std::vector<Var> inputs(xs.begin(), xs.end());
  return tape.custom_scalar(total, [inputs = std::move(inputs)](std::span<const double> g, Tape& t) {
    for (Var x : inputs) t.accumulate(x, g[0]);
  });
}

Var mean(std::span<const Var> xs) {
  if (xs.empty()) throw ParameterError("autodiff: mean of empty range");
  return sum(xs) / static_cast<double>(xs.size());
}

}  // namespace apf::ad
