#pragma once

#include "idyn/dynamics.hpp"

namespace idyn {

// Batched joint states, one column per sample.
struct StateBatch {
    MatX q, qd, qdd;

    int dof() const { return static_cast<int>(q.rows()); }
    int count() const { return static_cast<int>(q.cols()); }
    JointState state(int col) const { return {q.col(col), qd.col(col), qdd.col(col)}; }

    static StateBatch single(const JointState& s) {
        StateBatch b;
        b.q = s.q;
        b.qd = s.qd;
        b.qdd = s.qdd;
        return b;
    }
};

}  // namespace idyn
