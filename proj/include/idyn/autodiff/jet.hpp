#pragma once

#include <utility>
#include <vector>

#include "idyn/common.hpp"

namespace idyn::ad {

enum class Activation { Identity, Tanh, Softplus };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// Component layout of a truncated Taylor value: the plain value, K
// first-order directional derivatives, and selected second-order mixed
// coefficients. The set is closed under the arithmetic used here as long as
// every tracked pair refers to tracked directions.
struct JetShape {
    int dirs = 0;
    std::vector<std::pair<int, int>> pairs;

    int comps() const { return 1 + dirs + static_cast<int>(pairs.size()); }
    int dir_comp(int k) const { return 1 + k; }
    int pair_comp(int p) const { return 1 + dirs + p; }
    bool operator==(const JetShape&) const = default;
};

// A batch of jets: comps() matrices of identical shape, columns = batch.
struct JetBatch {
    JetShape shape;
    std::vector<MatX> c;

    int rows() const { return c.empty() ? 0 : static_cast<int>(c[0].rows()); }
    int cols() const { return c.empty() ? 0 : static_cast<int>(c[0].cols()); }
    static JetBatch zero(const JetShape& shape, int rows, int cols);
};

// Elementwise activation with exact propagation of the tracked components.
JetBatch activation_forward(Activation act, const JetBatch& x);

// Reverse rule of activation_forward: accumulates into xbar the pullback of
// ybar through y = act(x). x must be the original input batch.
void activation_backward(Activation act, const JetBatch& x, const JetBatch& ybar, JetBatch& xbar);

}  // namespace idyn::ad
