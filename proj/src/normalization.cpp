#include "idyn/normalization.hpp"

namespace idyn {

ChannelAffine ChannelAffine::from_min_max(const VecX& lo, const VecX& hi) {
    const int n = static_cast<int>(lo.size());
    ChannelAffine out{VecX::Zero(n), VecX::Zero(n), VecX::Zero(n)};
    for (int i = 0; i < n; ++i) {
        const double span = hi[i] - lo[i];
        out.center[i] = 0.5 * (hi[i] + lo[i]);
        if (span > 0.0) {
            out.scale[i] = 2.0 / span;
            out.offset[i] = -(hi[i] + lo[i]) / span;
        }
    }
    return out;
}

VecX ChannelAffine::invert(const VecX& v) const {
    VecX out(v.size());
    for (int i = 0; i < v.size(); ++i) {
        out[i] = scale[i] != 0.0 ? (v[i] - offset[i]) / scale[i] : center[i];
    }
    return out;
}

}  // namespace idyn
