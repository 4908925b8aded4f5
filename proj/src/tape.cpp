#include "idyn/autodiff/tape.hpp"

#include <cmath>

namespace idyn::ad {
namespace {

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

Tape::Var Tape::push(Op op, std::int32_t a, std::int32_t b, double val) {
    nodes_.push_back(Node{op, a, b, val});
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tape::Var Tape::leaf(double value) { return push(Op::Leaf, -1, -1, value); }
Tape::Var Tape::add(Var a, Var b) { return push(Op::Add, a.i, b.i, nodes_[a.i].val + nodes_[b.i].val); }
Tape::Var Tape::sub(Var a, Var b) { return push(Op::Sub, a.i, b.i, nodes_[a.i].val - nodes_[b.i].val); }
Tape::Var Tape::mul(Var a, Var b) { return push(Op::Mul, a.i, b.i, nodes_[a.i].val * nodes_[b.i].val); }
Tape::Var Tape::div(Var a, Var b) { return push(Op::Div, a.i, b.i, nodes_[a.i].val / nodes_[b.i].val); }
Tape::Var Tape::neg(Var a) { return push(Op::Neg, a.i, -1, -nodes_[a.i].val); }
Tape::Var Tape::sin(Var a) { return push(Op::Sin, a.i, -1, std::sin(nodes_[a.i].val)); }
Tape::Var Tape::cos(Var a) { return push(Op::Cos, a.i, -1, std::cos(nodes_[a.i].val)); }
Tape::Var Tape::tanh(Var a) { return push(Op::Tanh, a.i, -1, std::tanh(nodes_[a.i].val)); }
Tape::Var Tape::softplus(Var a) { return push(Op::Softplus, a.i, -1, stable_softplus(nodes_[a.i].val)); }
Tape::Var Tape::exp(Var a) { return push(Op::Exp, a.i, -1, std::exp(nodes_[a.i].val)); }
Tape::Var Tape::log(Var a) { return push(Op::Log, a.i, -1, std::log(nodes_[a.i].val)); }

VecX Tape::gradient(Var y, std::span<const Var> wrt) const {
    std::vector<double> adj(static_cast<std::size_t>(y.i) + 1, 0.0);
    adj[y.i] = 1.0;
    for (std::int32_t i = y.i; i >= 0; --i) {
        const double a = adj[i];
        if (a == 0.0) continue;
        const Node& n = nodes_[i];
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                adj[n.a] += a;
                adj[n.b] += a;
                break;
            case Op::Sub:
                adj[n.a] += a;
                adj[n.b] -= a;
                break;
            case Op::Mul:
                adj[n.a] += a * nodes_[n.b].val;
                adj[n.b] += a * nodes_[n.a].val;
                break;
            case Op::Div:
                adj[n.a] += a / nodes_[n.b].val;
                adj[n.b] -= a * n.val / nodes_[n.b].val;
                break;
            case Op::Neg:
                adj[n.a] -= a;
                break;
            case Op::Sin:
                adj[n.a] += a * std::cos(nodes_[n.a].val);
                break;
            case Op::Cos:
                adj[n.a] -= a * std::sin(nodes_[n.a].val);
                break;
            case Op::Tanh:
                adj[n.a] += a * (1.0 - n.val * n.val);
                break;
            case Op::Softplus:
                adj[n.a] += a * std::exp(nodes_[n.a].val - n.val);  // sigmoid(x) = e^(x - softplus(x))
                break;
            case Op::Exp:
                adj[n.a] += a * n.val;
                break;
            case Op::Log:
                adj[n.a] += a / nodes_[n.a].val;
                break;
        }
    }
    VecX out(static_cast<int>(wrt.size()));
    for (std::size_t k = 0; k < wrt.size(); ++k)
        out(static_cast<int>(k)) = wrt[k].i <= y.i ? adj[wrt[k].i] : 0.0;
    return out;
}

std::vector<Tape::Var> Tape::gradient_vars(Var y, std::span<const Var> wrt) {
    // Adjoints are tape variables; everything below writes tape nodes, so the
    // result remains differentiable. New nodes land above y.i and are never
    // visited by this sweep.
    std::vector<Var> adj(static_cast<std::size_t>(y.i) + 1);
    adj[y.i] = leaf(1.0);
    auto acc = [&](std::int32_t target, Var delta) {
        adj[target] = adj[target].valid() ? add(adj[target], delta) : delta;
    };
    for (std::int32_t i = y.i; i >= 0; --i) {
        if (!adj[i].valid()) continue;
        const Var a = adj[i];
        const Node n = nodes_[i];  // copy: push() may reallocate nodes_
        const Var self{i};
        const Var pa{n.a}, pb{n.b};
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                acc(n.a, a);
                acc(n.b, a);
                break;
            case Op::Sub:
                acc(n.a, a);
                acc(n.b, neg(a));
                break;
            case Op::Mul:
                acc(n.a, mul(a, pb));
                acc(n.b, mul(a, pa));
                break;
            case Op::Div:
                acc(n.a, div(a, pb));
                acc(n.b, neg(div(mul(a, self), pb)));
                break;
            case Op::Neg:
                acc(n.a, neg(a));
                break;
            case Op::Sin:
                acc(n.a, mul(a, cos(pa)));
                break;
            case Op::Cos:
                acc(n.a, neg(mul(a, sin(pa))));
                break;
            case Op::Tanh:
                acc(n.a, mul(a, sub(leaf(1.0), mul(self, self))));
                break;
            case Op::Softplus:
                acc(n.a, mul(a, exp(sub(pa, self))));
                break;
            case Op::Exp:
                acc(n.a, mul(a, self));
                break;
            case Op::Log:
                acc(n.a, div(a, pa));
                break;
        }
    }
    std::vector<Var> out(wrt.size());
    for (std::size_t k = 0; k < wrt.size(); ++k)
        if (wrt[k].i <= y.i && adj[wrt[k].i].valid()) out[k] = adj[wrt[k].i];
    return out;
}

}  // namespace idyn::ad
