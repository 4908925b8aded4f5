#include "idyn/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace idyn {
namespace {

// Plucker coordinates, angular part first.
struct SpatialTransform {
    Mat3 E;  // rotation: parent coords -> child coords
    Vec3 r;  // child origin expressed in parent coords

    Vec6 apply_motion(const Vec6& v) const {
        Vec6 out;
        out.head<3>() = E * v.head<3>();
        out.tail<3>() = E * (v.tail<3>() - r.cross(Vec3(v.head<3>())));
        return out;
    }
    // Transforms a force in child coords back to parent coords.
    Vec6 apply_force_transpose(const Vec6& f) const {
        Vec6 out;
        const Vec3 lin = E.transpose() * f.tail<3>();
        out.head<3>() = E.transpose() * f.head<3>() + r.cross(lin);
        out.tail<3>() = lin;
        return out;
    }
};

Vec6 cross_motion(const Vec6& v, const Vec6& m) {
    Vec6 out;
    const Vec3 w = v.head<3>(), vl = v.tail<3>();
    out.head<3>() = w.cross(Vec3(m.head<3>()));
    out.tail<3>() = w.cross(Vec3(m.tail<3>())) + vl.cross(Vec3(m.head<3>()));
    return out;
}

Vec6 cross_force(const Vec6& v, const Vec6& f) {
    Vec6 out;
    const Vec3 w = v.head<3>(), vl = v.tail<3>();
    out.head<3>() = w.cross(Vec3(f.head<3>())) + vl.cross(Vec3(f.tail<3>()));
    out.tail<3>() = w.cross(Vec3(f.tail<3>()));
    return out;
}

// h = [I_o w + m c x v ; m (v - c x w)]
Vec6 apply_inertia(const SpatialInertia& I, const Vec6& v) {
    Vec6 out;
    const Vec3 w = v.head<3>(), vl = v.tail<3>();
    out.head<3>() = I.rotational_inertia * w + I.mass * I.center_of_mass.cross(vl);
    out.tail<3>() = I.mass * (vl - I.center_of_mass.cross(w));
    return out;
}

Mat3 axis_rotation(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Child <- parent motion transform for joint i at angle q.
SpatialTransform joint_transform(const JointSpec& j, double q) {
    const Mat3 R_parent_body = j.parent_rotation * axis_rotation(j.axis, q);
    return {R_parent_body.transpose(), j.parent_translation};
}

void check_state(const RobotModel& model, const JointState& s) {
    const int n = model.dof();
    if (s.q.size() != n || s.qd.size() != n || s.qdd.size() != n)
        throw std::invalid_argument("JointState dimension does not match robot dof");
    if (!s.q.allFinite() || !s.qd.allFinite() || !s.qdd.allFinite())
        throw std::invalid_argument("JointState contains non-finite entries");
}

}  // namespace

Mat3 SpatialInertia::inertia_at_com() const {
    const Vec3& c = center_of_mass;
    return rotational_inertia - mass * (c.squaredNorm() * Mat3::Identity() - c * c.transpose());
}

void SpatialInertia::validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("SpatialInertia: mass must be > 0");
    const double scale = std::max(1.0, rotational_inertia.cwiseAbs().maxCoeff());
    if ((rotational_inertia - rotational_inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw std::invalid_argument("SpatialInertia: rotational_inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(inertia_at_com());
    const Vec3 lam = es.eigenvalues();
    const double tol = 1e-9 * scale;
    if (lam.minCoeff() < -tol)
        throw std::invalid_argument("SpatialInertia: inertia about COM has negative eigenvalue");
    if (lam(0) + lam(1) < lam(2) - tol)
        throw std::invalid_argument("SpatialInertia: principal moments violate triangle inequality");
}

void JointSpec::validate() const {
    if (std::abs(axis.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("JointSpec: axis must be a unit vector");
    if ((parent_rotation * parent_rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("JointSpec: parent rotation must be orthonormal");
}

void MotorSpec::validate() const {
    if (!(gear_ratio > 0.0)) throw std::invalid_argument("MotorSpec: gear_ratio must be > 0");
    if (!(torque_constant > 0.0)) throw std::invalid_argument("MotorSpec: torque_constant must be > 0");
    if (motor_inertia < 0.0) throw std::invalid_argument("MotorSpec: motor_inertia must be >= 0");
}

FrictionCoefficients FrictionCoefficients::zero(int n) {
    FrictionCoefficients f;
    f.viscous = VecX::Zero(n);
    f.coulomb = VecX::Zero(n);
    return f;
}

void FrictionCoefficients::validate(int n) const {
    if (viscous.size() != n || coulomb.size() != n)
        throw std::invalid_argument("FrictionCoefficients: vectors must have length n");
    if (viscous.minCoeff() < 0.0 || coulomb.minCoeff() < 0.0)
        throw std::invalid_argument("FrictionCoefficients: entries must be >= 0");
    if (!(coulomb_smoothing_velocity > 0.0))
        throw std::invalid_argument("FrictionCoefficients: smoothing velocity must be > 0");
}

VecX FrictionCoefficients::dissipative_torque(const VecX& qd) const {
    return -viscous.cwiseProduct(qd) -
           coulomb.cwiseProduct((qd / coulomb_smoothing_velocity).array().tanh().matrix());
}

void RobotModel::validate() const {
    const int n = dof();
    if (n < 1 || n > 12) throw std::invalid_argument("RobotModel: dof must be in [1, 12]");
    if (static_cast<int>(bodies.size()) != n || static_cast<int>(motors.size()) != n)
        throw std::invalid_argument("RobotModel: joints, bodies, motors must have equal length");
    for (const auto& j : joints) j.validate();
    for (const auto& b : bodies) b.validate();
    for (const auto& m : motors) m.validate();
    if (ground_truth_friction.viscous.size() > 0) ground_truth_friction.validate(n);
    if (!gravity.allFinite()) throw std::invalid_argument("RobotModel: gravity must be finite");
}

VecX rnea(const RobotModel& model, const JointState& state) {
    check_state(model, state);
    const int n = model.dof();

    std::vector<SpatialTransform> xup(n);
    std::vector<Vec6> v(n), a(n), f(n);

    Vec6 a_base = Vec6::Zero();
    a_base.tail<3>() = -model.gravity;  // fictitious base acceleration

    for (int i = 0; i < n; ++i) {
        const auto& joint = model.joints[i];
        xup[i] = joint_transform(joint, state.q(i));
        Vec6 s = Vec6::Zero();
        s.head<3>() = joint.axis;

        const Vec6 v_parent = (i == 0) ? Vec6::Zero() : v[i - 1];
        const Vec6 a_parent = (i == 0) ? a_base : a[i - 1];
        const Vec6 vj = s * state.qd(i);
        v[i] = xup[i].apply_motion(v_parent) + vj;
        a[i] = xup[i].apply_motion(a_parent) + s * state.qdd(i) + cross_motion(v[i], vj);
        f[i] = apply_inertia(model.bodies[i], a[i]) +
               cross_force(v[i], apply_inertia(model.bodies[i], v[i]));
    }

    VecX tau(n);
    for (int i = n - 1; i >= 0; --i) {
        tau(i) = model.joints[i].axis.dot(f[i].head<3>());
        if (i > 0) f[i - 1] += xup[i].apply_force_transpose(f[i]);
    }
    return tau;
}

MatX mass_matrix(const RobotModel& model, const VecX& q) {
    const int n = model.dof();
    if (q.size() != n) throw std::invalid_argument("mass_matrix: q dimension mismatch");
    if (!q.allFinite()) throw std::invalid_argument("mass_matrix: q must be finite");

    JointState s = JointState::zero(n);
    s.q = q;
    const VecX bias = rnea(model, s);
    MatX m(n, n);
    for (int j = 0; j < n; ++j) {
        s.qdd.setZero();
        s.qdd(j) = 1.0;
        m.col(j) = rnea(model, s) - bias;
    }
    return 0.5 * (m + m.transpose());
}

std::vector<Vec3> body_com_positions(const RobotModel& model, const VecX& q) {
    const int n = model.dof();
    std::vector<Vec3> out(n);
    Mat3 r_world = Mat3::Identity();
    Vec3 p_world = Vec3::Zero();
    for (int i = 0; i < n; ++i) {
        const auto& joint = model.joints[i];
        p_world += r_world * joint.parent_translation;
        r_world = r_world * joint.parent_rotation * axis_rotation(joint.axis, q(i));
        out[i] = p_world + r_world * model.bodies[i].center_of_mass;
    }
    return out;
}

double potential_energy(const RobotModel& model, const VecX& q) {
    if (q.size() != model.dof()) throw std::invalid_argument("potential_energy: q dimension mismatch");
    const auto coms = body_com_positions(model, q);
    double v = 0.0;
    for (int i = 0; i < model.dof(); ++i)
        v -= model.bodies[i].mass * model.gravity.dot(coms[i]);
    return v;
}

double kinetic_energy(const RobotModel& model, const VecX& q, const VecX& qd) {
    return 0.5 * qd.dot(mass_matrix(model, q) * qd);
}

VecX euler_lagrange_oracle(const RobotModel& model, const JointState& state, double fd_step) {
    check_state(model, state);
    const int n = model.dof();
    const double h = fd_step;

    const MatX m = mass_matrix(model, state.q);
    MatX mdot = MatX::Zero(n, n);
    VecX grad_quad(n), grad_v(n);
    for (int k = 0; k < n; ++k) {
        VecX qp = state.q, qm = state.q;
        qp(k) += h;
        qm(k) -= h;
        const MatX dm = (mass_matrix(model, qp) - mass_matrix(model, qm)) / (2.0 * h);
        mdot += state.qd(k) * dm;
        grad_quad(k) = state.qd.dot(dm * state.qd);
        grad_v(k) = (potential_energy(model, qp) - potential_energy(model, qm)) / (2.0 * h);
    }
    return m * state.qdd + mdot * state.qd - 0.5 * grad_quad + grad_v;
}

VecX motor_torque(const RobotModel& model, const JointState& state,
                  const FrictionCoefficients& friction) {
    const int n = model.dof();
    friction.validate(n);
    const VecX tau_rbd = rnea(model, state);
    VecX tau_u(n);
    const VecX tau_d = friction.dissipative_torque(state.qd);
    for (int i = 0; i < n; ++i) {
        const auto& motor = model.motors[i];
        tau_u(i) = tau_rbd(i) / motor.gear_ratio +
                   motor.motor_inertia * motor.gear_ratio * state.qdd(i) + tau_d(i);
    }
    return tau_u;
}

VecX current_to_torque(const RobotModel& model, const VecX& currents) {
    const int n = model.dof();
    if (currents.size() != n) throw std::invalid_argument("current_to_torque: dimension mismatch");
    VecX tau(n);
    for (int i = 0; i < n; ++i)
        tau(i) = model.motors[i].gear_ratio * model.motors[i].torque_constant * currents(i);
    return tau;
}

VecX torque_to_current(const RobotModel& model, const VecX& torques) {
    const int n = model.dof();
    if (torques.size() != n) throw std::invalid_argument("torque_to_current: dimension mismatch");
    VecX cur(n);
    for (int i = 0; i < n; ++i)
        cur(i) = torques(i) / (model.motors[i].gear_ratio * model.motors[i].torque_constant);
    return cur;
}

std::vector<double> power_balance_residual(const RobotModel& model,
                                           const std::vector<JointState>& trajectory,
                                           double dt) {
    if (trajectory.size() < 3)
        throw std::invalid_argument("power_balance_residual: need at least 3 samples");
    const std::size_t n = trajectory.size();
    std::vector<double> energy(n);
    for (std::size_t i = 0; i < n; ++i)
        energy[i] = kinetic_energy(model, trajectory[i].q, trajectory[i].qd) +
                    potential_energy(model, trajectory[i].q);

    std::vector<double> residual(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double power = trajectory[i].qd.dot(rnea(model, trajectory[i]));
        const double de = (energy[i + 1] - energy[i - 1]) / (2.0 * dt);
        residual[i - 1] = power - de;
    }
    return residual;
}

}  // namespace idyn
