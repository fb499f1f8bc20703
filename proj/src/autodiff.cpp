#include "gradix/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gradix/error.hpp"

namespace gradix::ad {

const char* op_name(Op op) noexcept {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::neg: return "neg";
        case Op::exp: return "exp";
        case Op::tanh: return "tanh";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::powi: return "powi";
        case Op::erf: return "erf";
        case Op::scale: return "scale";
        case Op::shift: return "shift";
    }
    return "?";
}

Var Tape::lift(double value) {
    Node n;
    n.value = value;
    nodes_.push_back(n);
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), value);
}

void Tape::check_owned(const Var& v) const {
    if (v.tape_ != this || v.index_ < 0 || static_cast<std::size_t>(v.index_) >= nodes_.size()) {
        throw UsageError("autodiff: variable does not belong to this tape");
    }
}

void Tape::evaluate(Node& n) const {
    const double a = n.lhs >= 0 ? nodes_[n.lhs].value : 0.0;
    const double b = n.rhs >= 0 ? nodes_[n.rhs].value : 0.0;
    switch (n.op) {
        case Op::leaf: break;
        case Op::add:
            n.value = a + b;
            n.dlhs = 1.0;
            n.drhs = 1.0;
            break;
        case Op::sub:
            n.value = a - b;
            n.dlhs = 1.0;
            n.drhs = -1.0;
            break;
        case Op::mul:
            n.value = a * b;
            n.dlhs = b;
            n.drhs = a;
            break;
        case Op::div:
            if (b == 0.0) throw DomainError("autodiff: division by zero");
            n.value = a / b;
            n.dlhs = 1.0 / b;
            n.drhs = -n.value / b;
            break;
        case Op::neg:
            n.value = -a;
            n.dlhs = -1.0;
            break;
        case Op::exp:
            n.value = std::exp(a);
            n.dlhs = n.value;
            break;
        case Op::tanh:
            n.value = std::tanh(a);
            n.dlhs = 1.0 - n.value * n.value;
            break;
        case Op::sin:
            n.value = std::sin(a);
            n.dlhs = std::cos(a);
            break;
        case Op::cos:
            n.value = std::cos(a);
            n.dlhs = -std::sin(a);
            break;
        case Op::powi: {
            const int k = static_cast<int>(n.aux);
            n.value = std::pow(a, k);
            n.dlhs = k == 0 ? 0.0 : k * std::pow(a, k - 1);
            break;
        }
        case Op::erf:
            n.value = std::erf(a);
            n.dlhs = 2.0 / std::sqrt(std::numbers::pi) * std::exp(-a * a);
            break;
        case Op::scale:
            n.value = a * n.aux;
            n.dlhs = n.aux;
            break;
        case Op::shift:
            n.value = a + n.aux;
            n.dlhs = 1.0;
            break;
    }
}

Var Tape::unary(Op op, const Var& a, double aux) {
    check_owned(a);
    Node n;
    n.op = op;
    n.lhs = a.index_;
    n.aux = aux;
    evaluate(n);
    nodes_.push_back(n);
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), n.value);
}

Var Tape::binary(Op op, const Var& a, const Var& b) {
    check_owned(a);
    check_owned(b);
    Node n;
    n.op = op;
    n.lhs = a.index_;
    n.rhs = b.index_;
    evaluate(n);
    nodes_.push_back(n);
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), n.value);
}

std::vector<double> Tape::adjoints(const Var& output) const {
    check_owned(output);
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[output.index_] = 1.0;
    for (std::int32_t i = output.index_; i >= 0; --i) {
        const double g = adj[i];
        if (g == 0.0) continue;
        const Node& n = nodes_[i];
        if (n.lhs >= 0) adj[n.lhs] += g * n.dlhs;
        if (n.rhs >= 0) adj[n.rhs] += g * n.drhs;
    }
    return adj;
}

std::size_t Tape::leaf_count() const noexcept {
    std::size_t n = 0;
    for (const auto& node : nodes_) n += node.op == Op::leaf;
    return n;
}

void Tape::replay(std::span<const double> leaf_values) {
    std::size_t next = 0;
    for (auto& n : nodes_) {
        if (n.op == Op::leaf) {
            if (next >= leaf_values.size()) throw UsageError("autodiff: too few leaf values for replay");
            n.value = leaf_values[next++];
        } else {
            evaluate(n);
        }
    }
    if (next != leaf_values.size()) throw UsageError("autodiff: too many leaf values for replay");
}

namespace {

Tape& tape_of(const Var& a) {
    if (!a.valid()) throw UsageError("autodiff: variable is not attached to a tape");
    return *a.tape();
}

}  // namespace

Var operator+(const Var& a, const Var& b) { return tape_of(a).binary(Op::add, a, b); }
Var operator-(const Var& a, const Var& b) { return tape_of(a).binary(Op::sub, a, b); }
Var operator*(const Var& a, const Var& b) { return tape_of(a).binary(Op::mul, a, b); }
Var operator/(const Var& a, const Var& b) {
    if (b.value() == 0.0) throw DomainError("autodiff: division by zero");
    return tape_of(a).binary(Op::div, a, b);
}
Var operator-(const Var& a) { return tape_of(a).unary(Op::neg, a); }
Var operator+(const Var& a, double c) { return tape_of(a).unary(Op::shift, a, c); }
Var operator+(double c, const Var& a) { return a + c; }
Var operator-(const Var& a, double c) { return tape_of(a).unary(Op::shift, a, -c); }
Var operator-(double c, const Var& a) { return tape_of(a).unary(Op::shift, -a, c); }
Var operator*(const Var& a, double c) { return tape_of(a).unary(Op::scale, a, c); }
Var operator*(double c, const Var& a) { return a * c; }
Var operator/(const Var& a, double c) {
    if (c == 0.0) throw DomainError("autodiff: division by zero");
    return tape_of(a).unary(Op::scale, a, 1.0 / c);
}
Var operator/(double c, const Var& a) { return tape_of(a).lift(c) / a; }

Var exp(const Var& a) { return tape_of(a).unary(Op::exp, a); }
Var tanh(const Var& a) { return tape_of(a).unary(Op::tanh, a); }
Var sin(const Var& a) { return tape_of(a).unary(Op::sin, a); }
Var cos(const Var& a) { return tape_of(a).unary(Op::cos, a); }
Var erf(const Var& a) { return tape_of(a).unary(Op::erf, a); }
Var powi(const Var& a, int n) { return tape_of(a).unary(Op::powi, a, static_cast<double>(n)); }

Dual constant(Tape& tape, double value) { return {tape.lift(value), tape.lift(0.0)}; }

Dual operator+(const Dual& a, const Dual& b) { return {a.primal + b.primal, a.tangent + b.tangent}; }
Dual operator-(const Dual& a, const Dual& b) { return {a.primal - b.primal, a.tangent - b.tangent}; }
Dual operator*(const Dual& a, const Dual& b) {
    return {a.primal * b.primal, a.tangent * b.primal + a.primal * b.tangent};
}
Dual operator/(const Dual& a, const Dual& b) {
    const Var q = a.primal / b.primal;
    return {q, (a.tangent - q * b.tangent) / b.primal};
}
Dual operator-(const Dual& a) { return {-a.primal, -a.tangent}; }
Dual operator*(const Var& a, const Dual& b) { return {a * b.primal, a * b.tangent}; }
Dual operator*(const Dual& a, const Var& b) { return b * a; }
Dual operator+(const Dual& a, const Var& b) { return {a.primal + b, a.tangent}; }
Dual operator+(const Var& a, const Dual& b) { return b + a; }
Dual operator*(double c, const Dual& a) { return {c * a.primal, c * a.tangent}; }
Dual operator*(const Dual& a, double c) { return c * a; }
Dual operator+(const Dual& a, double c) { return {a.primal + c, a.tangent}; }
Dual operator+(double c, const Dual& a) { return a + c; }
Dual operator-(const Dual& a, double c) { return {a.primal - c, a.tangent}; }

Dual exp(const Dual& a) {
    const Var e = exp(a.primal);
    return {e, e * a.tangent};
}

Dual tanh(const Dual& a) {
    const Var h = tanh(a.primal);
    return {h, (1.0 - h * h) * a.tangent};
}

Dual sin(const Dual& a) { return {sin(a.primal), cos(a.primal) * a.tangent}; }
Dual cos(const Dual& a) { return {cos(a.primal), -(sin(a.primal) * a.tangent)}; }

Dual erf(const Dual& a) {
    const Var slope = exp(-(a.primal * a.primal)) * (2.0 / std::sqrt(std::numbers::pi));
    return {erf(a.primal), slope * a.tangent};
}

Dual powi(const Dual& a, int n) {
    if (n == 0) return constant(*a.primal.tape(), 1.0);
    return {powi(a.primal, n), (static_cast<double>(n) * powi(a.primal, n - 1)) * a.tangent};
}

std::vector<double> reverse_gradient(const Var& output, std::span<const Var> leaves) {
    Tape& tape = tape_of(output);
    for (const auto& leaf : leaves) {
        if (leaf.tape() != &tape || leaf.index() < 0 ||
            static_cast<std::size_t>(leaf.index()) >= tape.size()) {
            throw UsageError("reverse_gradient: leaf is not on the output's tape");
        }
    }
    const auto adj = tape.adjoints(output);
    std::vector<double> out;
    out.reserve(leaves.size());
    for (const auto& leaf : leaves) out.push_back(adj[leaf.index()]);
    return out;
}

Dual input_derivative(Tape& tape, const DualFunction& f, std::span<const double> point,
                      std::span<const double> direction) {
    if (point.size() != direction.size()) {
        throw UsageError("input_derivative: point has " + std::to_string(point.size()) +
                         " components but direction has " + std::to_string(direction.size()));
    }
    std::vector<Dual> inputs;
    inputs.reserve(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        inputs.push_back({tape.lift(point[i]), tape.lift(direction[i])});
    }
    return f(inputs);
}

}  // namespace gradix::ad
