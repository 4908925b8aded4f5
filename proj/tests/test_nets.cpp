#include "doctest.h"

#include <cmath>
#include <memory>

#include "idyn/nets/models.hpp"
#include "idyn/robot_io.hpp"
#include "idyn/training.hpp"
#include "test_helpers.hpp"

using namespace idyn;
using test_helpers::random_state;

namespace {

double softplus_inverse(double y) { return y + std::log1p(-std::exp(-y)); }

VecX random_vec(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    VecX v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * uniform01(splitmix64(mix_seed(seed, i)));
    return v;
}

// Normalization with nonzero scales so every loss channel stays active.
Normalization test_norms(int n) {
    Normalization norms = Normalization::identity(n);
    for (int i = 0; i < n; ++i) {
        norms.q.scale[i] = 0.8 + 0.1 * i;
        norms.q.offset[i] = 0.05 * i;
        norms.qd.scale[i] = 0.6 + 0.05 * i;
        norms.qd.offset[i] = -0.02 * i;
        norms.qdd.scale[i] = 0.4 + 0.05 * i;
        norms.qdd.offset[i] = 0.01;
        norms.y.scale[i] = 0.3 + 0.2 * i;
        norms.y.offset[i] = 0.1 - 0.05 * i;
    }
    norms.q.center.setZero();
    norms.qd.center.setZero();
    norms.qdd.center.setZero();
    norms.y.center.setZero();
    return norms;
}

StateBatch random_batch(int n, int count, std::uint64_t seed) {
    StateBatch batch;
    batch.q.resize(n, count);
    batch.qd.resize(n, count);
    batch.qdd.resize(n, count);
    for (int b = 0; b < count; ++b) {
        const JointState s = random_state(n, mix_seed(seed, b));
        batch.q.col(b) = s.q;
        batch.qd.col(b) = s.qd;
        batch.qdd.col(b) = s.qdd;
    }
    return batch;
}

// Closed-form pieces of the planar 2-link arm, matching two_link_robot().
struct TwoLinkTruth {
    double m1 = 1.5, m2 = 0.8, l1 = 1.0, l2 = 0.7, g = 9.81;

    MatX mass(const VecX& q) const {
        const double c2 = std::cos(q[1]);
        MatX m(2, 2);
        m(0, 0) = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2 * l1 * l2 * c2);
        m(0, 1) = m2 * (l2 * l2 + l1 * l2 * c2);
        m(1, 0) = m(0, 1);
        m(1, 1) = m2 * l2 * l2;
        return m;
    }

    MatX mass_dq2(const VecX& q) const {
        const double s2 = std::sin(q[1]);
        MatX d(2, 2);
        d(0, 0) = -2 * m2 * l1 * l2 * s2;
        d(0, 1) = -m2 * l1 * l2 * s2;
        d(1, 0) = d(0, 1);
        d(1, 1) = 0.0;
        return d;
    }

    VecX grad_v(const VecX& q) const {
        const double s1 = std::sin(q[0]);
        const double s12 = std::sin(q[0] + q[1]);
        VecX gv(2);
        gv[0] = (m1 + m2) * g * l1 * s1 + m2 * g * l2 * s12;
        gv[1] = m2 * g * l2 * s12;
        return gv;
    }
};

}  // namespace

TEST_CASE("network with all-zero parameters returns the final bias") {
    nets::MlpSpec spec;
    spec.input_dim = 3;
    spec.output_dim = 2;
    spec.hidden_width = 8;
    VecX params = VecX::Zero(spec.param_count());
    const int last = spec.layer_count() - 1;
    params[spec.layer_offset(last) + spec.layer_in(last) * spec.layer_out(last) + 0] = 1.5;
    params[spec.layer_offset(last) + spec.layer_in(last) * spec.layer_out(last) + 1] = -0.25;
    const VecX out = nets::mlp_forward(spec, params, random_vec(3, 1));
    CHECK(out[0] == 1.5);
    CHECK(out[1] == -0.25);
}

TEST_CASE("single tanh neuron with unit weight") {
    nets::MlpSpec spec;
    spec.input_dim = 1;
    spec.output_dim = 1;
    spec.hidden_layers = 1;
    spec.hidden_width = 1;
    VecX params = VecX::Zero(spec.param_count());
    params[0] = 1.0;  // hidden weight
    params[spec.layer_offset(1)] = 1.0;  // output weight
    const VecX out = nets::mlp_forward(spec, params, VecX::Constant(1, 0.5));
    CHECK(out[0] == doctest::Approx(0.46211716).epsilon(1e-8));
}

TEST_CASE("swapping two hidden units leaves the function unchanged") {
    nets::MlpSpec spec;
    spec.input_dim = 3;
    spec.output_dim = 2;
    spec.hidden_layers = 2;
    spec.hidden_width = 8;
    const VecX params = nets::init_params(spec, nets::InitScheme::UniformFan, 7);

    // Swap units 2 and 5 of the first hidden layer: rows of W0/b0, columns of W1.
    VecX permuted = params;
    const int w = spec.hidden_width;
    auto swap_entry = [&](int a, int b) { std::swap(permuted[a], permuted[b]); };
    for (int c = 0; c < spec.layer_in(0); ++c) {
        swap_entry(spec.layer_offset(0) + c * w + 2, spec.layer_offset(0) + c * w + 5);
    }
    swap_entry(spec.layer_offset(0) + spec.layer_in(0) * w + 2,
               spec.layer_offset(0) + spec.layer_in(0) * w + 5);
    for (int r = 0; r < spec.layer_out(1); ++r) {
        swap_entry(spec.layer_offset(1) + 2 * w + r, spec.layer_offset(1) + 5 * w + r);
    }

    const VecX x = random_vec(3, 9);
    const VecX a = nets::mlp_forward(spec, params, x);
    const VecX b = nets::mlp_forward(spec, permuted, x);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("mlp_forward rejects wrong input sizes") {
    nets::MlpSpec spec;
    spec.input_dim = 3;
    spec.output_dim = 2;
    const VecX params = nets::init_params(spec, nets::InitScheme::UniformFan, 3);
    CHECK_THROWS_AS(nets::mlp_forward(spec, params, random_vec(4, 4)), std::invalid_argument);
}

TEST_CASE("structured inertia stays positive definite across parameter draws") {
    const int n = 3;
    nets::MlpSpec spec;
    spec.input_dim = n;
    spec.output_dim = nets::delan_output_dim(n);
    spec.hidden_width = 8;
    const double eps_pd = 1e-4;
    for (int k = 0; k < 1000; ++k) {
        const auto scheme =
            (k % 2 == 0) ? nets::InitScheme::UniformFan : nets::InitScheme::LagrangianScaled;
        const VecX params = nets::init_params(spec, scheme, 4000 + k);
        const VecX q = random_vec(n, 5000 + k, -M_PI, M_PI);
        const VecX o = nets::mlp_forward(spec, params, q);
        const MatX L = nets::delan_lower_factor(o, n, eps_pd);
        Eigen::SelfAdjointEigenSolver<MatX> eigs(L.transpose() * L);
        CHECK(eigs.eigenvalues().minCoeff() >= eps_pd * eps_pd * (1.0 - 1e-12));
    }

    SUBCASE("even adversarial head outputs keep the factor invertible") {
        for (int k = 0; k < 200; ++k) {
            const VecX o = random_vec(spec.output_dim, 4500 + k, -6.0, 6.0);
            const MatX L = nets::delan_lower_factor(o, n, eps_pd);
            CHECK(L.diagonal().minCoeff() >= eps_pd);
            const VecX x = random_vec(n, 4700 + k);
            CHECK((L * x).squaredNorm() > 0.0);
        }
    }
}

TEST_CASE("structured model at rest predicts minus its gravity head") {
    const int n = 2;
    nets::MlpSpec spec;
    spec.input_dim = n;
    spec.output_dim = nets::delan_output_dim(n);
    spec.hidden_width = 8;
    const VecX params = nets::init_params(spec, nets::InitScheme::LagrangianScaled, 11);
    const Normalization norms = test_norms(n);

    StateBatch batch = random_batch(n, 6, 12);
    batch.qd.setZero();
    batch.qdd.setZero();
    const MatX tau = nets::delan_tau_batch(spec, params, norms, batch, 1e-4);
    for (int b = 0; b < batch.count(); ++b) {
        const VecX x = norms.q.apply(batch.q.col(b));
        const VecX head = nets::mlp_forward(spec, params, x);
        const VecX g_head = head.tail(n);
        CHECK((tau.col(b) + g_head).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("inertia-factor network frozen to the true factor reproduces the dynamics") {
    const TwoLinkTruth truth;
    const RobotModel arm = two_link_robot();
    const double eps_pd = 1e-4;
    for (int k = 0; k < 25; ++k) {
        const JointState s = random_state(2, 6000 + k);
        const MatX m = truth.mass(s.q);
        const MatX dm = truth.mass_dq2(s.q);

        // M = L'L with lower-triangular L: c = sqrt(M22), b = M12/c,
        // a = sqrt(M11 - b^2); only q2 moves any entry.
        const double c = std::sqrt(m(1, 1));
        const double b = m(0, 1) / c;
        const double a = std::sqrt(m(0, 0) - b * b);
        const double db = dm(0, 1) / c;
        const double da = (dm(0, 0) - 2 * b * db) / (2 * a);

        VecX o(nets::delan_output_dim(2));
        o[0] = softplus_inverse(a - eps_pd);
        o[1] = softplus_inverse(c - eps_pd);
        o[2] = b;
        o.tail(2) = -truth.grad_v(s.q);

        // J rows follow the head layout; diagonal channels need the softplus
        // chain factor sigma(o) = d softplus / do undone.
        MatX j = MatX::Zero(o.size(), 2);
        const double sig0 = 1.0 / (1.0 + std::exp(-o[0]));
        j(0, 1) = da / sig0;
        j(2, 1) = db;
        const double c1 = std::cos(s.q[0]), c12 = std::cos(s.q[0] + s.q[1]);
        const double gl1 = (truth.m1 + truth.m2) * truth.g * truth.l1;
        const double gl2 = truth.m2 * truth.g * truth.l2;
        j(3, 0) = -(gl1 * c1 + gl2 * c12);
        j(3, 1) = -gl2 * c12;
        j(4, 0) = -gl2 * c12;
        j(4, 1) = -gl2 * c12;

        const VecX tau = nets::delan_assemble(o, j, s.qd, s.qdd, eps_pd);
        CHECK((tau - rnea(arm, s)).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("scalar-Lagrangian inverse dynamics on the frozen pendulum") {
    auto lagrangian = [](ad::Tape&, const std::vector<ad::Num>& u) {
        return 0.5 * u[1] * u[1] + 9.81 * cos(u[0]);
    };
    const VecX tau = nets::lagrangian_tau(lagrangian, VecX::Constant(1, M_PI / 2),
                                          VecX::Zero(1), VecX::Zero(1));
    CHECK(tau[0] == doctest::Approx(9.81).epsilon(1e-9));

    const RobotModel pend = pendulum_robot();
    for (int k = 0; k < 10; ++k) {
        const JointState s = random_state(1, 6100 + k);
        const VecX got = nets::lagrangian_tau(lagrangian, s.q, s.qd, s.qdd);
        CHECK((got - rnea(pend, s)).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("scalar-Lagrangian inverse dynamics on the frozen two-link arm") {
    const TwoLinkTruth truth;
    const RobotModel arm = two_link_robot();
    auto lagrangian = [&](ad::Tape&, const std::vector<ad::Num>& u) {
        ad::Num c2 = cos(u[1]);
        ad::Num m00 = truth.m1 * truth.l1 * truth.l1 +
                      truth.m2 * (truth.l1 * truth.l1 + truth.l2 * truth.l2) +
                      2 * truth.m2 * truth.l1 * truth.l2 * c2;
        ad::Num m01 = truth.m2 * truth.l2 * truth.l2 + truth.m2 * truth.l1 * truth.l2 * c2;
        const double m11 = truth.m2 * truth.l2 * truth.l2;
        ad::Num kinetic = 0.5 * (m00 * u[2] * u[2] + 2.0 * m01 * u[2] * u[3] +
                                 m11 * u[3] * u[3]);
        ad::Num potential = -(truth.m1 + truth.m2) * truth.g * truth.l1 * cos(u[0]) -
                            truth.m2 * truth.g * truth.l2 * cos(u[0] + u[1]);
        return kinetic - potential;
    };
    for (int k = 0; k < 15; ++k) {
        const JointState s = random_state(2, 6200 + k);
        const VecX got = nets::lagrangian_tau(lagrangian, s.q, s.qd, s.qdd);
        CHECK((got - rnea(arm, s)).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("a Lagrangian linear in position gives a constant torque at rest") {
    auto lagrangian = [](ad::Tape&, const std::vector<ad::Num>& u) {
        return 2.5 * u[0] - 0.75 * u[1];
    };
    for (double q : {-1.0, 0.2, 2.0}) {
        const VecX tau = nets::lagrangian_tau(lagrangian, VecX::Constant(1, q), VecX::Zero(1),
                                              VecX::Zero(1));
        CHECK(tau[0] == doctest::Approx(-2.5).epsilon(1e-12));
    }
}

TEST_CASE("batched scalar-Lagrangian network path matches the tape path") {
    const int n = 2;
    nets::MlpSpec spec;
    spec.input_dim = 2 * n;
    spec.output_dim = 1;
    spec.hidden_width = 8;
    const VecX params = nets::init_params(spec, nets::InitScheme::UniformFan, 13);
    const Normalization norms = test_norms(n);
    const StateBatch batch = random_batch(n, 7, 14);

    const MatX tau = nets::lnn_tau_batch(spec, params, norms, batch);

    auto lagrangian = [&](ad::Tape& t, const std::vector<ad::Num>& u) {
        std::vector<ad::Num> x;
        for (int i = 0; i < n; ++i) {
            x.push_back(u[i] * norms.q.scale[i] + norms.q.offset[i]);
        }
        for (int i = 0; i < n; ++i) {
            x.push_back(u[n + i] * norms.qd.scale[i] + norms.qd.offset[i]);
        }
        return nets::mlp_tape_forward(spec, t, ad::make_inputs(t, params), x)[0];
    };
    for (int b = 0; b < batch.count(); ++b) {
        const VecX ref =
            nets::lagrangian_tau(lagrangian, batch.q.col(b), batch.qd.col(b), batch.qdd.col(b));
        CHECK((tau.col(b) - ref).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("batched structured-network path matches per-output tape gradients") {
    const int n = 3;
    nets::MlpSpec spec;
    spec.input_dim = n;
    spec.output_dim = nets::delan_output_dim(n);
    spec.hidden_width = 8;
    const VecX params = nets::init_params(spec, nets::InitScheme::LagrangianScaled, 15);
    const Normalization norms = test_norms(n);
    const StateBatch batch = random_batch(n, 6, 16);
    const double eps_pd = 1e-4;

    const MatX tau = nets::delan_tau_batch(spec, params, norms, batch, eps_pd);
    for (int b = 0; b < batch.count(); ++b) {
        const VecX q = batch.q.col(b);
        const VecX x = norms.q.apply(q);
        const VecX o = nets::mlp_forward(spec, params, x);

        MatX j(spec.output_dim, n);
        ad::Tape t;
        auto xs = ad::make_inputs(t, x);
        auto outs = nets::mlp_tape_forward(spec, t, ad::make_inputs(t, params), xs);
        for (int r = 0; r < spec.output_dim; ++r) {
            const VecX dx = t.gradient(outs[r].v, ad::vars_of(xs));
            j.row(r) = (dx.array() * norms.q.scale.array()).transpose();
        }
        const VecX ref = nets::delan_assemble(o, j, batch.qd.col(b), batch.qdd.col(b), eps_pd);
        CHECK((tau.col(b) - ref).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("adding a constant to the scalar network leaves torques unchanged") {
    const int n = 2;
    nets::MlpSpec spec;
    spec.input_dim = 2 * n;
    spec.output_dim = 1;
    spec.hidden_width = 8;
    const VecX params = nets::init_params(spec, nets::InitScheme::LagrangianScaled, 17);
    VecX shifted = params;
    shifted[shifted.size() - 1] += 37.5;  // final-layer bias

    const Normalization norms = test_norms(n);
    const StateBatch batch = random_batch(n, 5, 18);
    const MatX a = nets::lnn_tau_batch(spec, params, norms, batch);
    const MatX b = nets::lnn_tau_batch(spec, shifted, norms, batch);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("baseline-plus-network model with a silent network is the pure baseline") {
    const auto robot = std::make_shared<const RobotModel>(surrogate_robot());
    nets::ModelLayout layout;
    layout.hidden_width = 8;
    layout.correction_width = 8;
    nets::IdModel model = nets::make_model(nets::Variant::RneaMlp, test_norms(3), layout, 19,
                                           robot);
    model.params.setZero();
    const StateBatch batch = random_batch(3, 6, 20);
    const MatX tau = model.predict_batch(batch);
    const MatX base = nets::rnea_baseline_batch(*robot, batch);
    CHECK((tau - base).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("baseline-plus-network residual ignores the acceleration") {
    const auto robot = std::make_shared<const RobotModel>(surrogate_robot());
    nets::ModelLayout layout;
    layout.hidden_width = 8;
    nets::IdModel model = nets::make_model(nets::Variant::RneaMlp, test_norms(3), layout, 21,
                                           robot);
    StateBatch batch = random_batch(3, 6, 22);
    const MatX res_a = model.predict_batch(batch) - nets::rnea_baseline_batch(*robot, batch);
    batch.qdd = random_batch(3, 6, 23).qdd;
    const MatX res_b = model.predict_batch(batch) - nets::rnea_baseline_batch(*robot, batch);
    CHECK((res_a - res_b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("closed-form viscous fit recovers the generator coefficients") {
    const RobotModel robot = surrogate_robot();
    FrictionCoefficients fric = FrictionCoefficients::zero(3);
    fric.viscous = (VecX(3) << 8.0, 5.0, 2.0).finished();

    const StateBatch batch = random_batch(3, 40, 24);
    MatX y(3, batch.count());
    for (int b = 0; b < batch.count(); ++b) {
        y.col(b) = motor_torque(robot, batch.state(b), fric);
    }
    const nets::LqFit fit = nets::rnea_lq_fit(robot, batch, y);
    CHECK(fit.warnings.empty());
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(fit.viscous[i] - fric.viscous[i]) / fric.viscous[i] <= 1e-6);
    }

    SUBCASE("frictionless targets give zero coefficients") {
        MatX y0(3, batch.count());
        for (int b = 0; b < batch.count(); ++b) {
            y0.col(b) = motor_torque(robot, batch.state(b), FrictionCoefficients::zero(3));
        }
        const nets::LqFit fit0 = nets::rnea_lq_fit(robot, batch, y0);
        CHECK(fit0.viscous.cwiseAbs().maxCoeff() <= 1e-9);
    }

    SUBCASE("scaling velocities and residuals together cancels out") {
        StateBatch scaled = batch;
        scaled.qd *= 3.0;
        MatX ys(3, batch.count());
        for (int b = 0; b < batch.count(); ++b) {
            ys.col(b) = motor_torque(robot, scaled.state(b), fric);
        }
        const nets::LqFit fit_s = nets::rnea_lq_fit(robot, scaled, ys);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(fit_s.viscous[i] - fit.viscous[i]) <= 1e-8 * fric.viscous[i]);
        }
    }
}

TEST_CASE("a joint that never moves yields a zero coefficient and a warning") {
    const RobotModel robot = surrogate_robot();
    StateBatch batch = random_batch(3, 20, 25);
    batch.qd.row(1).setZero();
    MatX y(3, batch.count());
    for (int b = 0; b < batch.count(); ++b) {
        y.col(b) = motor_torque(robot, batch.state(b), robot.ground_truth_friction);
    }
    const nets::LqFit fit = nets::rnea_lq_fit(robot, batch, y);
    CHECK(fit.viscous[1] == 0.0);
    CHECK(!fit.warnings.empty());
}

TEST_CASE("parameter draws are reproducible and seed-sensitive") {
    nets::MlpSpec spec;
    spec.input_dim = 4;
    spec.output_dim = 2;
    spec.hidden_width = 8;
    const VecX a = nets::init_params(spec, nets::InitScheme::UniformFan, 33);
    const VecX b = nets::init_params(spec, nets::InitScheme::UniformFan, 33);
    const VecX c = nets::init_params(spec, nets::InitScheme::UniformFan, 34);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
    CHECK_THROWS_AS(nets::init_scheme_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("freshly initialized structured inertia starts near the identity") {
    const int n = 3;
    const Normalization norms = test_norms(n);
    nets::ModelLayout layout;
    const auto robot = std::make_shared<const RobotModel>(surrogate_robot());
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const nets::IdModel model =
            nets::make_model(nets::Variant::DeLaN, norms, layout, seed, robot);
        for (int k = 0; k < 100; ++k) {
            const VecX q = random_vec(n, mix_seed(40, 100 * seed + k), -M_PI, M_PI);
            const VecX o = nets::mlp_forward(model.spec, model.params, norms.q.apply(q));
            const MatX L = nets::delan_lower_factor(o, n, model.eps_pd);
            Eigen::SelfAdjointEigenSolver<MatX> eigs(L.transpose() * L);
            CHECK(eigs.eigenvalues().minCoeff() >= 0.5);
            CHECK(eigs.eigenvalues().maxCoeff() <= 2.0);
        }
    }
}

TEST_CASE("training gradients of every variant match finite differences") {
    const auto robot = std::make_shared<const RobotModel>(surrogate_robot());
    const Normalization norms = test_norms(3);
    nets::ModelLayout layout;
    layout.hidden_width = 8;
    layout.correction_width = 8;
    const StateBatch batch = random_batch(3, 8, 50);
    MatX y_norm(3, batch.count());
    for (int b = 0; b < batch.count(); ++b) {
        const VecX tau = motor_torque(*robot, batch.state(b), robot->ground_truth_friction);
        y_norm.col(b) = norms.y.apply(tau);
    }

    for (nets::Variant variant : {nets::Variant::Mlp, nets::Variant::RneaMlp, nets::Variant::Lnn,
                                  nets::Variant::DeLaN, nets::Variant::LnnMlp}) {
        CAPTURE(nets::to_string(variant));
        nets::IdModel model = nets::make_model(variant, norms, layout, 51, robot);
        VecX grad_main = VecX::Zero(model.params.size());
        VecX grad_corr = VecX::Zero(model.correction_params.size());
        train::loss_and_gradient(model, batch, y_norm, grad_main, grad_corr);

        auto loss_at = [&](const VecX& p, const VecX& cp) {
            nets::IdModel probe = model;
            probe.params = p;
            probe.correction_params = cp;
            VecX d1 = VecX::Zero(p.size()), d2 = VecX::Zero(cp.size());
            return train::loss_and_gradient(probe, batch, y_norm, d1, d2);
        };

        const double h = 1e-6;
        for (int i = 0; i < model.params.size(); ++i) {
            VecX pp = model.params, pm = model.params;
            pp[i] += h;
            pm[i] -= h;
            const double fd =
                (loss_at(pp, model.correction_params) - loss_at(pm, model.correction_params)) /
                (2 * h);
            const double scale = std::max(1e-4, std::abs(fd));
            CHECK(std::abs(grad_main[i] - fd) / scale <= 1e-4);
        }
        for (int i = 0; i < model.correction_params.size(); ++i) {
            VecX cp = model.correction_params, cm = model.correction_params;
            cp[i] += h;
            cm[i] -= h;
            const double fd = (loss_at(model.params, cp) - loss_at(model.params, cm)) / (2 * h);
            const double scale = std::max(1e-4, std::abs(fd));
            CHECK(std::abs(grad_corr[i] - fd) / scale <= 1e-4);
        }
    }
}

TEST_CASE("checkpoints round trip and refuse a different robot") {
    const auto robot = std::make_shared<const RobotModel>(surrogate_robot());
    nets::ModelLayout layout;
    layout.hidden_width = 8;
    nets::IdModel model = nets::make_model(nets::Variant::LnnMlp, test_norms(3), layout, 60,
                                           robot);
    const std::string path = "/tmp/idyn_ckpt_test.json";
    nets::save_checkpoint(model, path);
    const nets::IdModel back = nets::load_checkpoint(path, robot);
    CHECK(back.variant == model.variant);
    CHECK((back.params - model.params).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.correction_params - model.correction_params).cwiseAbs().maxCoeff() == 0.0);

    const StateBatch batch = random_batch(3, 4, 61);
    CHECK((back.predict_batch(batch) - model.predict_batch(batch)).cwiseAbs().maxCoeff() == 0.0);

    const auto other = std::make_shared<const RobotModel>(two_link_robot());
    CHECK_THROWS(nets::load_checkpoint(path, other));
}
