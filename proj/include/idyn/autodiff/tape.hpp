#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "idyn/common.hpp"

namespace idyn::ad {

// Reverse-mode tape over a fixed primitive set. A reverse sweep can either
// produce plain numbers or record its own arithmetic as new tape nodes, so
// gradients of gradients (and of Hessian entries) are ordinary tape values
// and stay exact to machine precision at any nesting depth.
class Tape {
public:
    struct Var {
        std::int32_t i = -1;
        bool valid() const { return i >= 0; }
    };

    Var leaf(double value);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var neg(Var a);
    Var sin(Var a);
    Var cos(Var a);
    Var tanh(Var a);
    Var softplus(Var a);
    Var exp(Var a);
    Var log(Var a);

    double val(Var v) const { return nodes_[v.i].val; }
    std::size_t size() const { return nodes_.size(); }

    // Plain reverse sweep; adjoints are doubles, nothing is recorded.
    VecX gradient(Var y, std::span<const Var> wrt) const;
    // Recording sweep; adjoints are tape variables and may be differentiated
    // again. Entries for variables y does not depend on are absent (invalid).
    std::vector<Var> gradient_vars(Var y, std::span<const Var> wrt);

private:
    enum class Op : std::uint8_t { Leaf, Add, Sub, Mul, Div, Neg, Sin, Cos, Tanh, Softplus, Exp, Log };
    struct Node {
        Op op;
        std::int32_t a = -1, b = -1;
        double val = 0.0;
    };
    Var push(Op op, std::int32_t a, std::int32_t b, double val);
    std::vector<Node> nodes_;
};

// Expression wrapper so tape programs read like the math they implement.
struct Num {
    Tape* tape = nullptr;
    Tape::Var v;

    double val() const { return tape->val(v); }
};

inline Num make_num(Tape& t, double value) { return {&t, t.leaf(value)}; }

inline Num operator+(Num a, Num b) { return {a.tape, a.tape->add(a.v, b.v)}; }
inline Num operator-(Num a, Num b) { return {a.tape, a.tape->sub(a.v, b.v)}; }
inline Num operator*(Num a, Num b) { return {a.tape, a.tape->mul(a.v, b.v)}; }
inline Num operator/(Num a, Num b) { return {a.tape, a.tape->div(a.v, b.v)}; }
inline Num operator-(Num a) { return {a.tape, a.tape->neg(a.v)}; }
inline Num operator+(Num a, double b) { return a + make_num(*a.tape, b); }
inline Num operator+(double a, Num b) { return make_num(*b.tape, a) + b; }
inline Num operator-(Num a, double b) { return a - make_num(*a.tape, b); }
inline Num operator-(double a, Num b) { return make_num(*b.tape, a) - b; }
inline Num operator*(Num a, double b) { return a * make_num(*a.tape, b); }
inline Num operator*(double a, Num b) { return make_num(*b.tape, a) * b; }
inline Num operator/(Num a, double b) { return a / make_num(*a.tape, b); }
inline Num operator/(double a, Num b) { return make_num(*b.tape, a) / b; }
inline Num sin(Num a) { return {a.tape, a.tape->sin(a.v)}; }
inline Num cos(Num a) { return {a.tape, a.tape->cos(a.v)}; }
inline Num tanh(Num a) { return {a.tape, a.tape->tanh(a.v)}; }
inline Num softplus(Num a) { return {a.tape, a.tape->softplus(a.v)}; }
inline Num exp(Num a) { return {a.tape, a.tape->exp(a.v)}; }
inline Num log(Num a) { return {a.tape, a.tape->log(a.v)}; }

inline std::vector<Num> make_inputs(Tape& t, const VecX& x) {
    std::vector<Num> out;
    out.reserve(static_cast<std::size_t>(x.size()));
    for (int i = 0; i < x.size(); ++i) out.push_back(make_num(t, x(i)));
    return out;
}

inline std::vector<Tape::Var> vars_of(const std::vector<Num>& xs) {
    std::vector<Tape::Var> vs;
    vs.reserve(xs.size());
    for (const auto& x : xs) vs.push_back(x.v);
    return vs;
}

inline Num dot(const std::vector<Num>& a, const VecX& w) {
    Num acc = make_num(*a[0].tape, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) acc = acc + a[i] * w(static_cast<int>(i));
    return acc;
}

// --- Functional layer -------------------------------------------------------

// f: (Tape&, const std::vector<Num>& x) -> Num
template <class F>
VecX grad(F&& f, const VecX& x) {
    Tape t;
    auto xs = make_inputs(t, x);
    Num y = f(t, xs);
    return t.gradient(y.v, vars_of(xs));
}

// Unsymmetrized reverse-over-reverse Hessian; used to bound the asymmetry.
template <class F>
MatX hessian_raw(F&& f, const VecX& x) {
    Tape t;
    auto xs = make_inputs(t, x);
    Num y = f(t, xs);
    const auto vs = vars_of(xs);
    auto g = t.gradient_vars(y.v, vs);
    const int m = static_cast<int>(x.size());
    MatX h = MatX::Zero(m, m);
    for (int i = 0; i < m; ++i)
        if (g[i].valid()) h.row(i) = t.gradient(g[i], vs).transpose();
    return h;
}

template <class F>
MatX hessian(F&& f, const VecX& x) {
    const MatX h = hessian_raw(std::forward<F>(f), x);
    return 0.5 * (h + h.transpose());
}

// f: (Tape&, a, b) -> Num; entry (i, j) = d^2 f / (da_i db_j).
template <class F>
MatX mixed_jacobian(F&& f, const VecX& a, const VecX& b) {
    Tape t;
    auto as = make_inputs(t, a);
    auto bs = make_inputs(t, b);
    Num y = f(t, as, bs);
    const auto avars = vars_of(as);
    auto gb = t.gradient_vars(y.v, vars_of(bs));
    MatX out = MatX::Zero(a.size(), b.size());
    for (int j = 0; j < b.size(); ++j)
        if (gb[j].valid()) out.col(j) = t.gradient(gb[j], avars);
    return out;
}

// loss: (Tape&, const std::vector<Num>& params) -> Num. The loss body may
// itself call gradient_vars on the tape, so losses composed through input
// Hessians differentiate exactly.
template <class F>
VecX param_gradient(F&& loss, const VecX& params) {
    Tape t;
    auto ps = make_inputs(t, params);
    Num y = loss(t, ps);
    return t.gradient(y.v, vars_of(ps));
}

}  // namespace idyn::ad
