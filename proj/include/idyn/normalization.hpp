#pragma once

#include "idyn/common.hpp"

namespace idyn {

// Per-channel affine map v_norm = scale .* v + offset fitted from training
// data. A constant channel gets scale 0 and maps to 0; its invert falls back
// to the stored center so round trips stay well defined.
struct ChannelAffine {
    VecX scale;
    VecX offset;
    VecX center;

    static ChannelAffine identity(int n) {
        return {VecX::Ones(n), VecX::Zero(n), VecX::Zero(n)};
    }
    static ChannelAffine from_min_max(const VecX& lo, const VecX& hi);

    VecX apply(const VecX& v) const { return scale.cwiseProduct(v) + offset; }
    VecX invert(const VecX& v) const;
    int dim() const { return static_cast<int>(scale.size()); }
};

// Input and target maps used by every identification model.
struct Normalization {
    ChannelAffine q, qd, qdd, y;

    static Normalization identity(int n) {
        return {ChannelAffine::identity(n), ChannelAffine::identity(n),
                ChannelAffine::identity(n), ChannelAffine::identity(n)};
    }
    int dof() const { return q.dim(); }
};

}  // namespace idyn
