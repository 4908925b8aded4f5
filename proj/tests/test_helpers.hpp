#pragma once

#include "idyn/common.hpp"
#include "idyn/dynamics.hpp"

namespace test_helpers {

using namespace idyn;

// Random serial chain with 1..4 revolute joints. Bodies carry a physically
// valid inertia: a boxy COM-frame tensor shifted to the joint origin.
inline RobotModel random_chain(std::uint64_t seed, int max_dof = 4) {
    const int n = 1 + static_cast<int>(bounded_draw(seed, 0, static_cast<std::uint64_t>(max_dof)));
    RobotModel model;
    model.gravity = Vec3(0, 0, -9.81);
    std::uint64_t idx = 10;
    auto u = [&](double lo, double hi) {
        return lo + (hi - lo) * uniform01(splitmix64(mix_seed(seed, idx++)));
    };
    for (int i = 0; i < n; ++i) {
        JointSpec joint;
        const int axis_pick = static_cast<int>(bounded_draw(seed, 1000 + i, 3));
        joint.axis = Vec3::Unit(axis_pick);
        joint.parent_translation = Vec3(u(-0.4, 0.4), u(-0.4, 0.4), u(-0.4, 0.4));

        SpatialInertia body;
        body.mass = u(0.5, 5.0);
        body.center_of_mass = Vec3(u(-0.3, 0.3), u(-0.3, 0.3), u(-0.3, 0.3));
        const double a = u(0.01, 0.1), b = u(0.01, 0.1);
        const Vec3 diag(a, b, u(std::abs(a - b) + 0.001, a + b - 0.001));
        const Vec3& c = body.center_of_mass;
        body.rotational_inertia =
            diag.asDiagonal().toDenseMatrix() +
            body.mass * (c.squaredNorm() * Mat3::Identity() - c * c.transpose());

        model.joints.push_back(joint);
        model.bodies.push_back(body);
        model.motors.push_back(MotorSpec{u(1.0, 100.0), u(0.05, 0.2), u(0.0, 1e-4)});
    }
    model.ground_truth_friction = FrictionCoefficients::zero(n);
    model.validate();
    return model;
}

// State with entries in [-pi, pi] x [-3, 3] x [-10, 10].
inline JointState random_state(int n, std::uint64_t seed) {
    JointState state = JointState::zero(n);
    std::uint64_t idx = 0;
    auto u = [&](double lo, double hi) {
        return lo + (hi - lo) * uniform01(splitmix64(mix_seed(seed, 0xabcd + idx++)));
    };
    for (int i = 0; i < n; ++i) {
        state.q[i] = u(-M_PI, M_PI);
        state.qd[i] = u(-3.0, 3.0);
        state.qdd[i] = u(-10.0, 10.0);
    }
    return state;
}

}  // namespace test_helpers
