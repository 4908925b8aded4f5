#pragma once

#include <memory>
#include <vector>

#include "idyn/common.hpp"

namespace idyn {

// Mass properties of one body, expressed in its own frame.
// rotational_inertia is taken about the body frame origin, not the COM.
struct SpatialInertia {
    double mass = 0.0;
    Vec3 center_of_mass = Vec3::Zero();
    Mat3 rotational_inertia = Mat3::Zero();

    // Inertia about the COM (parallel-axis shift removed).
    Mat3 inertia_at_com() const;
    void validate() const;
};

enum class JointType { Revolute };

struct JointSpec {
    Vec3 axis = Vec3::UnitZ();           // unit vector in the joint frame
    Mat3 parent_rotation = Mat3::Identity();
    Vec3 parent_translation = Vec3::Zero();
    JointType type = JointType::Revolute;

    void validate() const;
};

struct MotorSpec {
    double gear_ratio = 1.0;       // psi
    double torque_constant = 1.0;  // K, N*m/A
    double motor_inertia = 0.0;    // rotor-axis inertia, kg*m^2

    void validate() const;
};

struct FrictionCoefficients {
    VecX viscous;                           // N*m*s/rad per joint
    VecX coulomb;                           // N*m per joint
    double coulomb_smoothing_velocity = 0.01;  // rad/s

    static FrictionCoefficients zero(int n);
    void validate(int n) const;
    // tau_D = -viscous .* qd - coulomb .* tanh(qd / v0)
    VecX dissipative_torque(const VecX& qd) const;
};

struct RobotModel {
    std::vector<JointSpec> joints;
    std::vector<SpatialInertia> bodies;
    std::vector<MotorSpec> motors;
    Vec3 gravity = Vec3(0, 0, -9.81);
    FrictionCoefficients ground_truth_friction;

    int dof() const { return static_cast<int>(joints.size()); }
    void validate() const;
};

struct JointState {
    VecX q, qd, qdd;

    JointState() = default;
    JointState(VecX q_, VecX qd_, VecX qdd_)
        : q(std::move(q_)), qd(std::move(qd_)), qdd(std::move(qdd_)) {}
    static JointState zero(int n) {
        return {VecX::Zero(n), VecX::Zero(n), VecX::Zero(n)};
    }
};

// Joint torques tau = M(q) qdd - C(q, qd) - G(q) in the convention where
// G(q) = -grad V; numerically this is the plain recursive Newton-Euler
// result with gravity folded in as a fictitious base acceleration.
VecX rnea(const RobotModel& model, const JointState& state);

// Column j assembled as rnea(q, 0, e_j) - rnea(q, 0, 0); symmetric PD.
MatX mass_matrix(const RobotModel& model, const VecX& q);

double potential_energy(const RobotModel& model, const VecX& q);
double kinetic_energy(const RobotModel& model, const VecX& q, const VecX& qd);

// World-frame COM of every body; used by potential_energy and tests.
std::vector<Vec3> body_com_positions(const RobotModel& model, const VecX& q);

// Finite-difference Euler-Lagrange expansion of the same dynamics:
//   tau = M qdd + Mdot qd - 1/2 grad_q(qd' M qd) + grad_q V
// with all q-derivatives taken by central differences (step h). Serves as
// an oracle independent of the recursive path in rnea().
VecX euler_lagrange_oracle(const RobotModel& model, const JointState& state,
                           double fd_step = 1e-6);

// Motor-side torque: tau_u_i = tau_rbd_i/psi_i + I_M_i psi_i qdd_i + tau_D_i.
VecX motor_torque(const RobotModel& model, const JointState& state,
                  const FrictionCoefficients& friction);

VecX current_to_torque(const RobotModel& model, const VecX& currents);
VecX torque_to_current(const RobotModel& model, const VecX& torques);

// Per interior step: qd' tau_rnea - d(T+V)/dt, the time derivative taken by
// central differences over the trajectory. O(dt^2) for consistent inputs.
std::vector<double> power_balance_residual(const RobotModel& model,
                                           const std::vector<JointState>& trajectory,
                                           double dt);

}  // namespace idyn
