#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

// Reverse-mode automatic differentiation on a scalar tape.
//
// Every arithmetic result is a node appended to a Tape; nodes only ever
// reference earlier nodes, so the append order is a topological order and the
// reverse sweep visits each node exactly once. Vector-valued computations
// (dense layers, spectral losses) enter the tape as fused ops that register a
// pullback instead of expanding into scalar nodes.
namespace apf::ad {

class Tape;

// Handle to a node. Cheap to copy; only valid while its node is on the tape.
class Var {
 public:
  Var() = default;

  double value() const;
  // Accumulated adjoint after the last backward sweep.
  double grad() const;
  Tape* tape() const { return tape_; }
  std::uint32_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

class Tape {
 public:
  // Receives the adjoints of a fused op's outputs and pushes contributions to
  // its inputs through accumulate(), or into external gradient buffers.
  using Pullback = std::function<void(std::span<const double> output_adjoints, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf node. Leaf adjoints persist across backward calls until zero_grad().
  Var variable(double value);
  std::vector<Var> variables(std::span<const double> values);

  std::size_t size() const { return nodes_.size(); }
  std::size_t mark() const { return nodes_.size(); }
  // Drops every node (and fused op) created at or after `mark`.
  void rewind(std::size_t mark);
  void clear() { rewind(0); }
  void reserve(std::size_t nodes);

  double value(Var v) const { return nodes_[check(v)].value; }
  double grad(Var v) const { return adjoint_[check(v)]; }
  void zero_grad();

  // Seeds d(loss)/d(loss) = 1 and sweeps. Interior adjoints are reset first,
  // leaf adjoints accumulate.
  void backward(Var loss);
  // Same, with explicit seeds for several output nodes.
  void backward(std::span<const Var> outputs, std::span<const double> seeds);

  // Construction primitives used by the operators below and by fused ops.
  Var unary(double value, Var a, double da);
  Var binary(double value, Var a, double da, Var b, double db);
  std::vector<Var> custom(std::span<const double> values, Pullback pullback);
  Var custom_scalar(double value, Pullback pullback);
  // Only meaningful inside a pullback.
  void accumulate(Var v, double adjoint) { adjoint_[check(v)] += adjoint; }

 private:
  enum class Kind : std::uint8_t { Leaf, Unary, Binary, FusedOutput, FusedTail };

  struct Node {
    double value;
    double da;
    double db;
    std::uint32_t a;
    std::uint32_t b;
    Kind kind;
  };

  struct Fused {
    std::uint32_t first;
    std::uint32_t count;
    Pullback pullback;
  };

  std::uint32_t check(Var v) const;
  Var push(const Node& node);
  void sweep(std::uint32_t top);

  std::vector<Node> nodes_;
  std::vector<double> adjoint_;
  std::vector<Fused> fused_;
};

inline double Var::value() const { return tape_->value(*this); }
inline double Var::grad() const { return tape_->grad(*this); }

Var operator+(Var a, Var b);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
// Throws NumericError when |denominator| < 1e-300.
Var operator/(Var a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);
Var operator-(Var a);

Var sin(Var x);
Var cos(Var x);
Var tanh(Var x);
Var square(Var x);
Var sum(std::span<const Var> xs);
Var mean(std::span<const Var> xs);

inline double square(double x) { return x * x; }

}  // namespace apf::ad
