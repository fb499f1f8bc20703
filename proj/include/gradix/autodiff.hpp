#pragma once

// Scalar computation-graph engine.
//
// A Tape records every elementary operation on Var handles in topological
// order. reverse_gradient() runs one backward sweep over the recorded nodes.
// Dual pairs a primal Var with a tangent Var; because the tangent arithmetic
// is itself recorded on the tape, a reverse sweep over a tangent yields mixed
// derivatives (forward-over-reverse).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gradix::ad {

enum class Op : std::uint8_t {
    leaf,
    add,
    sub,
    mul,
    div,
    neg,
    exp,
    tanh,
    sin,
    cos,
    powi,
    erf,
    scale,  // a * aux
    shift,  // a + aux
};

const char* op_name(Op op) noexcept;

struct Node {
    double value = 0.0;
    double aux = 0.0;  // constant operand for scale/shift, exponent for powi
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
    double dlhs = 0.0;
    double drhs = 0.0;
    Op op = Op::leaf;
};

class Var;

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    // Var handles point at the tape, so it never moves.
    Tape(Tape&&) = delete;
    Tape& operator=(Tape&&) = delete;

    /// Records a leaf holding `value`.
    Var lift(double value);

    std::size_t size() const noexcept { return nodes_.size(); }
    const Node& node(std::size_t i) const { return nodes_.at(i); }
    std::span<const Node> nodes() const noexcept { return nodes_; }

    void reserve(std::size_t n) { nodes_.reserve(n); }
    void clear() noexcept { nodes_.clear(); }

    /// Adjoint of every node with respect to `output` (single reverse sweep).
    std::vector<double> adjoints(const Var& output) const;

    /// Recomputes all node values and local partials from new leaf values,
    /// given in order of leaf creation.
    void replay(std::span<const double> leaf_values);

    std::size_t leaf_count() const noexcept;

    // Recording primitives used by the operator overloads.
    Var unary(Op op, const Var& a, double aux = 0.0);
    Var binary(Op op, const Var& a, const Var& b);

private:
    void evaluate(Node& n) const;
    void check_owned(const Var& v) const;

    std::vector<Node> nodes_;
};

class Var {
public:
    Var() = default;

    double value() const noexcept { return value_; }
    std::int32_t index() const noexcept { return index_; }
    Tape* tape() const noexcept { return tape_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::int32_t index, double value)
        : tape_(tape), index_(index), value_(value) {}

    Tape* tape_ = nullptr;
    std::int32_t index_ = -1;
    double value_ = 0.0;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double c);
Var operator+(double c, const Var& a);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& a);
Var operator*(const Var& a, double c);
Var operator*(double c, const Var& a);
Var operator/(const Var& a, double c);
Var operator/(double c, const Var& a);

Var exp(const Var& a);
Var tanh(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var erf(const Var& a);
Var powi(const Var& a, int n);

/// Directional derivative carrier: both halves live on the same tape.
struct Dual {
    Var primal;
    Var tangent;

    double value() const noexcept { return primal.value(); }
    double derivative() const noexcept { return tangent.value(); }
};

/// Dual with zero tangent.
Dual constant(Tape& tape, double value);

Dual operator+(const Dual& a, const Dual& b);
Dual operator-(const Dual& a, const Dual& b);
Dual operator*(const Dual& a, const Dual& b);
Dual operator/(const Dual& a, const Dual& b);
Dual operator-(const Dual& a);
Dual operator*(const Var& a, const Dual& b);
Dual operator*(const Dual& a, const Var& b);
Dual operator+(const Dual& a, const Var& b);
Dual operator+(const Var& a, const Dual& b);
Dual operator*(double c, const Dual& a);
Dual operator*(const Dual& a, double c);
Dual operator+(const Dual& a, double c);
Dual operator+(double c, const Dual& a);
Dual operator-(const Dual& a, double c);

Dual exp(const Dual& a);
Dual tanh(const Dual& a);
Dual sin(const Dual& a);
Dual cos(const Dual& a);
Dual erf(const Dual& a);
Dual powi(const Dual& a, int n);

/// d output / d leaf for each requested node; throws UsageError when a node
/// does not belong to output's tape.
std::vector<double> reverse_gradient(const Var& output, std::span<const Var> leaves);

using DualFunction = std::function<Dual(std::span<const Dual>)>;

/// Evaluates f at `point` with input tangents seeded by `direction`. The
/// inputs are recorded as leaves on `tape`; the returned tangent is a Var,
/// so reverse_gradient over it gives mixed second derivatives.
Dual input_derivative(Tape& tape, const DualFunction& f, std::span<const double> point,
                      std::span<const double> direction);

}  // namespace gradix::ad
