#include "idyn/autodiff/jet.hpp"

#include <cmath>
#include <stdexcept>

namespace idyn::ad {

namespace {

using Arr = Eigen::ArrayXXd;

void check_shape(const JetShape& shape) {
    for (auto [i, j] : shape.pairs) {
        if (i < 0 || j < 0 || i >= shape.dirs || j >= shape.dirs || i == j) {
            throw std::invalid_argument(
                "jet pair must reference two distinct tracked directions");
        }
    }
}

// Derivatives of the activation evaluated at the value component. order is
// the highest derivative the caller needs (1, 2 or 3).
struct ActDerivs {
    Arr value;
    Arr d1;
    Arr d2;
    Arr d3;
};

ActDerivs activation_derivs(Activation act, const Arr& x, int order) {
    ActDerivs d;
    switch (act) {
        case Activation::Identity:
            d.value = x;
            d.d1 = Arr::Ones(x.rows(), x.cols());
            if (order >= 2) d.d2 = Arr::Zero(x.rows(), x.cols());
            if (order >= 3) d.d3 = Arr::Zero(x.rows(), x.cols());
            break;
        case Activation::Tanh: {
            d.value = x.tanh();
            d.d1 = 1.0 - d.value.square();
            if (order >= 2) d.d2 = -2.0 * d.value * d.d1;
            if (order >= 3) d.d3 = d.d1 * (6.0 * d.value.square() - 2.0);
            break;
        }
        case Activation::Softplus: {
            d.value = x.max(0.0) + (-x.abs()).exp().log1p();
            Arr sig = 0.5 * (1.0 + (0.5 * x).tanh());
            d.d1 = sig;
            if (order >= 2) d.d2 = sig * (1.0 - sig);
            if (order >= 3) d.d3 = d.d2 * (1.0 - 2.0 * sig);
            break;
        }
    }
    return d;
}

}  // namespace

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "tanh") return Activation::Tanh;
    if (name == "softplus") return Activation::Softplus;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Softplus: return "softplus";
    }
    return "?";
}

JetBatch JetBatch::zero(const JetShape& shape, int rows, int cols) {
    check_shape(shape);
    JetBatch out;
    out.shape = shape;
    out.c.assign(shape.comps(), MatX::Zero(rows, cols));
    return out;
}

JetBatch activation_forward(Activation act, const JetBatch& x) {
    const JetShape& s = x.shape;
    check_shape(s);
    const int order = s.pairs.empty() ? (s.dirs > 0 ? 2 : 1) : 2;
    ActDerivs d = activation_derivs(act, x.c[0].array(), order);

    JetBatch y;
    y.shape = s;
    y.c.resize(s.comps());
    y.c[0] = d.value.matrix();
    for (int k = 0; k < s.dirs; ++k) {
        y.c[s.dir_comp(k)] = (d.d1 * x.c[s.dir_comp(k)].array()).matrix();
    }
    for (int p = 0; p < static_cast<int>(s.pairs.size()); ++p) {
        auto [i, j] = s.pairs[p];
        y.c[s.pair_comp(p)] = (d.d1 * x.c[s.pair_comp(p)].array() +
                               d.d2 * x.c[s.dir_comp(i)].array() * x.c[s.dir_comp(j)].array())
                                  .matrix();
    }
    return y;
}

void activation_backward(Activation act, const JetBatch& x, const JetBatch& ybar,
                         JetBatch& xbar) {
    const JetShape& s = x.shape;
    if (ybar.shape != s || xbar.shape != s) {
        throw std::invalid_argument("activation_backward: mismatched jet shapes");
    }
    const int order = s.pairs.empty() ? (s.dirs > 0 ? 2 : 1) : 3;
    ActDerivs d = activation_derivs(act, x.c[0].array(), order);

    Arr v0 = ybar.c[0].array() * d.d1;
    for (int k = 0; k < s.dirs; ++k) {
        const Arr& xk = x.c[s.dir_comp(k)].array();
        const Arr& yk = ybar.c[s.dir_comp(k)].array();
        v0 += yk * d.d2 * xk;
        xbar.c[s.dir_comp(k)].array() += yk * d.d1;
    }
    for (int p = 0; p < static_cast<int>(s.pairs.size()); ++p) {
        auto [i, j] = s.pairs[p];
        const Arr& xi = x.c[s.dir_comp(i)].array();
        const Arr& xj = x.c[s.dir_comp(j)].array();
        const Arr& xp = x.c[s.pair_comp(p)].array();
        const Arr& yp = ybar.c[s.pair_comp(p)].array();
        v0 += yp * (d.d2 * xp + d.d3 * xi * xj);
        xbar.c[s.dir_comp(i)].array() += yp * d.d2 * xj;
        xbar.c[s.dir_comp(j)].array() += yp * d.d2 * xi;
        xbar.c[s.pair_comp(p)].array() += yp * d.d1;
    }
    xbar.c[0].array() += v0;
}

}  // namespace idyn::ad
