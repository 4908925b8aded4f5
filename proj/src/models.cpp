#include "idyn/nets/models.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "idyn/robot_io.hpp"
#include "json.hpp"

namespace idyn::nets {

namespace {

using nlohmann::json;

double softplus_d(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double softplus_inv(double y) { return y + std::log1p(-std::exp(-y)); }

// Index into the head output vector: [0, n) raw diagonal, then the strictly
// lower triangle column by column, then the gravity block.
int lower_index(int r, int c, int n) {
    return n + c * (n - 1) - c * (c - 1) / 2 + (r - c - 1);
}
int gravity_index(int i, int n) { return n + n * (n - 1) / 2 + i; }

// Lower-triangular storage including the diagonal, column by column.
int tri_index(int r, int c, int n) { return c * n - c * (c - 1) / 2 + (r - c); }

struct HeadVars {
    std::vector<ad::Num> leaves;
    std::vector<ad::Num> tau;
};

// Builds the torque assembly on the caller's tape. Leaves are the raw head
// outputs o followed by the Jacobian columns J(:,k); qd and qdd are constant
// coefficients folded into the expression.
HeadVars build_head(ad::Tape& tape, const VecX& o, const MatX& J, const VecX& qd,
                    const VecX& qdd, double eps_pd) {
    const int n = static_cast<int>(qd.size());
    const int m = delan_output_dim(n);
    if (o.size() != m || J.rows() != m || J.cols() != n) {
        throw std::invalid_argument("structured head given mismatched output/Jacobian sizes");
    }

    HeadVars hv;
    hv.leaves.reserve(m * (n + 1));
    for (int i = 0; i < m; ++i) hv.leaves.push_back(ad::make_num(tape, o[i]));
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < m; ++i) hv.leaves.push_back(ad::make_num(tape, J(i, k)));
    }
    auto o_at = [&](int i) { return hv.leaves[i]; };
    auto j_at = [&](int i, int k) { return hv.leaves[m + k * m + i]; };

    // L and its per-direction derivative dL/dq_k, lower triangular.
    std::vector<ad::Num> L;
    L.reserve(n * (n + 1) / 2);
    for (int c = 0; c < n; ++c) {
        for (int r = c; r < n; ++r) {
            L.push_back(r == c ? softplus(o_at(r)) + eps_pd : o_at(lower_index(r, c, n)));
        }
    }
    std::vector<std::vector<ad::Num>> dL(n);
    for (int k = 0; k < n; ++k) {
        dL[k].reserve(n * (n + 1) / 2);
        for (int c = 0; c < n; ++c) {
            for (int r = c; r < n; ++r) {
                if (r == c) {
                    ad::Num sig = 1.0 / (1.0 + exp(-o_at(r)));
                    dL[k].push_back(sig * j_at(r, k));
                } else {
                    dL[k].push_back(j_at(lower_index(r, c, n), k));
                }
            }
        }
    }

    // M = L^T L and S_k = (dL/dq_k)^T L, both dense n x n.
    std::vector<ad::Num> M;
    std::vector<std::vector<ad::Num>> S(n);
    M.reserve(n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int lo = std::max(i, j);
            ad::Num acc = L[tri_index(lo, i, n)] * L[tri_index(lo, j, n)];
            for (int r = lo + 1; r < n; ++r) {
                acc = acc + L[tri_index(r, i, n)] * L[tri_index(r, j, n)];
            }
            M.push_back(acc);
        }
    }
    for (int k = 0; k < n; ++k) {
        S[k].reserve(n * n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const int lo = std::max(i, j);
                ad::Num acc = dL[k][tri_index(lo, i, n)] * L[tri_index(lo, j, n)];
                for (int r = lo + 1; r < n; ++r) {
                    acc = acc + dL[k][tri_index(r, i, n)] * L[tri_index(r, j, n)];
                }
                S[k].push_back(acc);
            }
        }
    }

    // tau_i = (M qdd)_i + (dM/dt qd)_i - 1/2 d(qd^T M qd)/dq_i - G_i with
    // dM/dq_k = S_k + S_k^T and the quadratic gradient term equal to
    // 2 qd^T S_i qd.
    for (int i = 0; i < n; ++i) {
        ad::Num t = -o_at(gravity_index(i, n));
        for (int j = 0; j < n; ++j) {
            if (qdd[j] != 0.0) t = t + qdd[j] * M[i * n + j];
        }
        for (int k = 0; k < n; ++k) {
            for (int j = 0; j < n; ++j) {
                const double w = qd[k] * qd[j];
                if (w != 0.0) t = t + w * (S[k][i * n + j] + S[k][j * n + i]);
            }
        }
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l) {
                const double w = qd[j] * qd[l];
                if (w != 0.0) t = t - w * S[i][j * n + l];
            }
        }
        hv.tau.push_back(t);
    }
    return hv;
}

VecX json_to_vec(const json& j) {
    VecX v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

json vec_to_json(const VecX& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

json spec_to_json(const MlpSpec& s) {
    return {{"input_dim", s.input_dim},
            {"output_dim", s.output_dim},
            {"hidden_layers", s.hidden_layers},
            {"hidden_width", s.hidden_width},
            {"activation", to_string(s.activation)}};
}

MlpSpec spec_from_json(const json& j) {
    MlpSpec s;
    s.input_dim = j.at("input_dim").get<int>();
    s.output_dim = j.at("output_dim").get<int>();
    s.hidden_layers = j.at("hidden_layers").get<int>();
    s.hidden_width = j.at("hidden_width").get<int>();
    s.activation = ad::activation_from_string(j.at("activation").get<std::string>());
    return s;
}

json affine_to_json(const ChannelAffine& a) {
    return {{"scale", vec_to_json(a.scale)},
            {"offset", vec_to_json(a.offset)},
            {"center", vec_to_json(a.center)}};
}

ChannelAffine affine_from_json(const json& j) {
    return {json_to_vec(j.at("scale")), json_to_vec(j.at("offset")), json_to_vec(j.at("center"))};
}

json norms_to_json(const Normalization& n) {
    return {{"q", affine_to_json(n.q)},
            {"qd", affine_to_json(n.qd)},
            {"qdd", affine_to_json(n.qdd)},
            {"y", affine_to_json(n.y)}};
}

Normalization norms_from_json(const json& j) {
    return {affine_from_json(j.at("q")), affine_from_json(j.at("qd")),
            affine_from_json(j.at("qdd")), affine_from_json(j.at("y"))};
}

MatX apply_cols(const ChannelAffine& a, const MatX& X) {
    return (a.scale.asDiagonal() * X).colwise() + a.offset;
}

MatX invert_cols(const ChannelAffine& a, const MatX& Y) {
    MatX out(Y.rows(), Y.cols());
    for (int r = 0; r < Y.rows(); ++r) {
        if (a.scale[r] != 0.0) {
            out.row(r) = (Y.row(r).array() - a.offset[r]) / a.scale[r];
        } else {
            out.row(r).setConstant(a.center[r]);
        }
    }
    return out;
}

// Physical span of one normalized target unit, zero for constant channels.
VecX target_span(const ChannelAffine& a) {
    VecX s = VecX::Zero(a.dim());
    for (int i = 0; i < a.dim(); ++i) {
        if (a.scale[i] != 0.0) s[i] = 1.0 / a.scale[i];
    }
    return s;
}

}  // namespace

Variant variant_from_string(const std::string& name) {
    if (name == "mlp") return Variant::Mlp;
    if (name == "delan") return Variant::DeLaN;
    if (name == "lnn") return Variant::Lnn;
    if (name == "lnn_mlp") return Variant::LnnMlp;
    if (name == "rnea_mlp") return Variant::RneaMlp;
    if (name == "rnea_lq") return Variant::RneaLq;
    throw std::invalid_argument("unknown model variant '" + name + "'");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Mlp: return "mlp";
        case Variant::DeLaN: return "delan";
        case Variant::Lnn: return "lnn";
        case Variant::LnnMlp: return "lnn_mlp";
        case Variant::RneaMlp: return "rnea_mlp";
        case Variant::RneaLq: return "rnea_lq";
    }
    return "?";
}

int delan_output_dim(int n) { return n * (n + 1) / 2 + n; }

MatX delan_lower_factor(const VecX& o, int n, double eps_pd) {
    MatX L = MatX::Zero(n, n);
    for (int c = 0; c < n; ++c) {
        L(c, c) = softplus_d(o[c]) + eps_pd;
        for (int r = c + 1; r < n; ++r) L(r, c) = o[lower_index(r, c, n)];
    }
    return L;
}

VecX delan_assemble(const VecX& o, const MatX& J, const VecX& qd, const VecX& qdd,
                    double eps_pd) {
    ad::Tape tape;
    HeadVars hv = build_head(tape, o, J, qd, qdd, eps_pd);
    VecX tau(hv.tau.size());
    for (std::size_t i = 0; i < hv.tau.size(); ++i) tau[i] = hv.tau[i].val();
    return tau;
}

void delan_assemble_pullback(const VecX& o, const MatX& J, const VecX& qd, const VecX& qdd,
                             double eps_pd, const VecX& r, VecX& obar, MatX& jbar) {
    const int n = static_cast<int>(qd.size());
    const int m = delan_output_dim(n);
    ad::Tape tape;
    HeadVars hv = build_head(tape, o, J, qd, qdd, eps_pd);
    ad::Num s = r[0] * hv.tau[0];
    for (int i = 1; i < n; ++i) s = s + r[i] * hv.tau[i];
    const auto leaf_vars = ad::vars_of(hv.leaves);
    VecX g = tape.gradient(s.v, leaf_vars);
    obar += g.head(m);
    for (int k = 0; k < n; ++k) {
        jbar.col(k) += g.segment(m + k * m, m);
    }
}

VecX lagrangian_tau(const ScalarFn& lagrangian, const VecX& q, const VecX& qd,
                    const VecX& qdd) {
    const int n = static_cast<int>(q.size());
    ad::Tape tape;
    std::vector<ad::Num> u = ad::make_inputs(tape, (VecX(2 * n) << q, qd).finished());
    const auto u_vars = ad::vars_of(u);
    ad::Num value = lagrangian(tape, u);
    std::vector<ad::Tape::Var> grad = tape.gradient_vars(value.v, u_vars);

    // Directional derivative of the gradient along (qd, qdd) gives H w; the
    // velocity rows minus the position gradient give the torque. Inputs the
    // Lagrangian never touches have a zero gradient entry.
    ad::Num s = ad::make_num(tape, 0.0);
    for (int i = 0; i < n; ++i) {
        if (grad[i].valid()) s = s + qd[i] * ad::Num{&tape, grad[i]};
        if (grad[n + i].valid()) s = s + qdd[i] * ad::Num{&tape, grad[n + i]};
    }
    VecX hw = tape.gradient(s.v, u_vars);

    VecX tau(n);
    for (int i = 0; i < n; ++i) {
        tau[i] = hw[n + i] - (grad[i].valid() ? tape.val(grad[i]) : 0.0);
    }
    return tau;
}

MatX network_inputs_q(const Normalization& norms, const StateBatch& batch) {
    return apply_cols(norms.q, batch.q);
}

MatX network_inputs_qqd(const Normalization& norms, const StateBatch& batch) {
    MatX X(2 * batch.dof(), batch.count());
    X.topRows(batch.dof()) = apply_cols(norms.q, batch.q);
    X.bottomRows(batch.dof()) = apply_cols(norms.qd, batch.qd);
    return X;
}

MatX network_inputs_full(const Normalization& norms, const StateBatch& batch) {
    const int n = batch.dof();
    MatX X(3 * n, batch.count());
    X.topRows(n) = apply_cols(norms.q, batch.q);
    X.middleRows(n, n) = apply_cols(norms.qd, batch.qd);
    X.bottomRows(n) = apply_cols(norms.qdd, batch.qdd);
    return X;
}

MatX rnea_baseline_batch(const RobotModel& robot, const StateBatch& batch) {
    const int n = batch.dof();
    MatX out(n, batch.count());
    for (int b = 0; b < batch.count(); ++b) {
        const VecX tau_rbd = rnea(robot, batch.state(b));
        for (int i = 0; i < n; ++i) {
            const auto& motor = robot.motors[i];
            out(i, b) = tau_rbd[i] / motor.gear_ratio +
                        motor.motor_inertia * motor.gear_ratio * batch.qdd(i, b);
        }
    }
    return out;
}

MatX lnn_tau_batch(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                   const StateBatch& batch) {
    const int n = batch.dof();
    const int B = batch.count();
    ad::JetShape shape{1, {}};
    ad::JetBatch input = ad::JetBatch::zero(shape, 2 * n, B);
    input.c[0] = network_inputs_qqd(norms, batch);
    input.c[1].topRows(n) = norms.q.scale.asDiagonal() * batch.qd;
    input.c[1].bottomRows(n) = norms.qd.scale.asDiagonal() * batch.qdd;

    MlpJetTrace trace;
    ad::JetBatch out = mlp_forward_jet(spec, params, input, &trace);
    ad::JetBatch out_adj = ad::JetBatch::zero(shape, 1, B);
    out_adj.c[1].setOnes();
    ad::JetBatch in_adj = mlp_backward_jet(spec, params, trace, out_adj);

    // Value-component adjoint holds H w in network coordinates, direction
    // adjoint holds the plain gradient; both map back through the input
    // scaling to physical variables.
    MatX tau(n, B);
    tau = norms.qd.scale.asDiagonal() * in_adj.c[0].bottomRows(n) -
          norms.q.scale.asDiagonal() * in_adj.c[1].topRows(n);
    return tau;
}

void lnn_tau_param_grad(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                        const StateBatch& batch, const MatX& r, VecX& param_grad) {
    const int n = batch.dof();
    const int B = batch.count();
    ad::JetShape shape{3, {{0, 1}}};
    ad::JetBatch input = ad::JetBatch::zero(shape, 2 * n, B);
    input.c[0] = network_inputs_qqd(norms, batch);
    input.c[1].topRows(n) = norms.q.scale.asDiagonal() * batch.qd;
    input.c[1].bottomRows(n) = norms.qd.scale.asDiagonal() * batch.qdd;
    input.c[2].bottomRows(n) = norms.qd.scale.asDiagonal() * r;
    input.c[3].topRows(n) = norms.q.scale.asDiagonal() * r;

    MlpJetTrace trace;
    ad::JetBatch out = mlp_forward_jet(spec, params, input, &trace);
    ad::JetBatch out_adj = ad::JetBatch::zero(shape, 1, B);
    out_adj.c[shape.pair_comp(0)].setOnes();
    out_adj.c[shape.dir_comp(2)].setConstant(-1.0);
    mlp_backward_jet(spec, params, trace, out_adj, &param_grad);
}

namespace {

// Shared forward pass for the structured head: tracked directions are the
// physical partials of q, so the output components carry o and do/dq.
ad::JetBatch delan_forward(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                           const StateBatch& batch, MlpJetTrace* trace) {
    const int n = batch.dof();
    ad::JetShape shape{n, {}};
    ad::JetBatch input = ad::JetBatch::zero(shape, n, batch.count());
    input.c[0] = network_inputs_q(norms, batch);
    for (int k = 0; k < n; ++k) {
        input.c[shape.dir_comp(k)].row(k).setConstant(norms.q.scale[k]);
    }
    return mlp_forward_jet(spec, params, input, trace);
}

}  // namespace

MatX delan_tau_batch(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                     const StateBatch& batch, double eps_pd) {
    const int n = batch.dof();
    const int B = batch.count();
    const int m = delan_output_dim(n);
    ad::JetBatch out = delan_forward(spec, params, norms, batch, nullptr);

    MatX tau(n, B);
    MatX J(m, n);
    for (int b = 0; b < B; ++b) {
        for (int k = 0; k < n; ++k) J.col(k) = out.c[out.shape.dir_comp(k)].col(b);
        tau.col(b) = delan_assemble(out.c[0].col(b), J, batch.qd.col(b), batch.qdd.col(b),
                                    eps_pd);
    }
    return tau;
}

void delan_tau_param_grad(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                          const StateBatch& batch, double eps_pd, const MatX& r,
                          VecX& param_grad) {
    const int n = batch.dof();
    const int B = batch.count();
    const int m = delan_output_dim(n);
    MlpJetTrace trace;
    ad::JetBatch out = delan_forward(spec, params, norms, batch, &trace);

    ad::JetBatch out_adj = ad::JetBatch::zero(out.shape, m, B);
    MatX J(m, n);
    VecX obar(m);
    MatX jbar(m, n);
    for (int b = 0; b < B; ++b) {
        for (int k = 0; k < n; ++k) J.col(k) = out.c[out.shape.dir_comp(k)].col(b);
        obar.setZero();
        jbar.setZero();
        delan_assemble_pullback(out.c[0].col(b), J, batch.qd.col(b), batch.qdd.col(b), eps_pd,
                                r.col(b), obar, jbar);
        out_adj.c[0].col(b) = obar;
        for (int k = 0; k < n; ++k) out_adj.c[out.shape.dir_comp(k)].col(b) = jbar.col(k);
    }
    mlp_backward_jet(spec, params, trace, out_adj, &param_grad);
}

LqFit rnea_lq_fit(const RobotModel& robot, const StateBatch& states, const MatX& y_physical) {
    const int n = states.dof();
    const MatX base = rnea_baseline_batch(robot, states);
    LqFit fit{VecX::Zero(n), {}};
    for (int i = 0; i < n; ++i) {
        const double denom = states.qd.row(i).squaredNorm();
        if (denom == 0.0) {
            fit.warnings.push_back("joint " + std::to_string(i + 1) +
                                   ": all-zero velocities, degenerate regressor; viscous "
                                   "coefficient set to 0");
            continue;
        }
        const double num = states.qd.row(i).dot(y_physical.row(i) - base.row(i));
        fit.viscous[i] = -num / denom;
    }
    return fit;
}

VecX IdModel::predict(const JointState& state) const {
    return predict_batch(StateBatch::single(state)).col(0);
}

MatX IdModel::predict_batch(const StateBatch& batch) const {
    switch (variant) {
        case Variant::Mlp: {
            MatX y = mlp_forward_batch(spec, params, network_inputs_full(norms, batch));
            return invert_cols(norms.y, y);
        }
        case Variant::DeLaN:
            return delan_tau_batch(spec, params, norms, batch, eps_pd);
        case Variant::Lnn:
            return lnn_tau_batch(spec, params, norms, batch);
        case Variant::LnnMlp: {
            MatX tau = lnn_tau_batch(spec, params, norms, batch);
            MatX h = mlp_forward_batch(correction_spec, correction_params,
                                       network_inputs_qqd(norms, batch));
            return tau + target_span(norms.y).asDiagonal() * h;
        }
        case Variant::RneaMlp: {
            MatX base = rnea_baseline_batch(*robot, batch);
            MatX h = mlp_forward_batch(spec, params, network_inputs_qqd(norms, batch));
            return base + target_span(norms.y).asDiagonal() * h;
        }
        case Variant::RneaLq: {
            MatX base = rnea_baseline_batch(*robot, batch);
            return base - viscous.asDiagonal() * batch.qd;
        }
    }
    throw std::logic_error("unhandled variant");
}

IdModel make_model(Variant v, const Normalization& norms, const ModelLayout& layout,
                   uint64_t seed, std::shared_ptr<const RobotModel> robot) {
    if (!robot) throw std::invalid_argument("make_model requires a robot configuration");
    const int n = norms.dof();
    if (n < 1) throw std::invalid_argument("make_model requires normalization statistics");

    IdModel model;
    model.variant = v;
    model.norms = norms;
    model.eps_pd = layout.eps_pd;
    model.robot = robot;
    model.robot_hash = robot_config_hash(*robot);

    MlpSpec base;
    base.hidden_layers = layout.hidden_layers;
    base.hidden_width = layout.hidden_width;
    base.activation = ad::Activation::Tanh;

    switch (v) {
        case Variant::Mlp:
            model.spec = base;
            model.spec.input_dim = 3 * n;
            model.spec.output_dim = n;
            model.params = init_params(model.spec, InitScheme::UniformFan, seed);
            break;
        case Variant::DeLaN: {
            model.spec = base;
            model.spec.input_dim = n;
            model.spec.output_dim = delan_output_dim(n);
            model.params = init_params(model.spec, InitScheme::LagrangianScaled, seed);
            auto last = layer_view(model.spec, model.params, model.spec.hidden_layers);
            const double bias = softplus_inv(1.0 - layout.eps_pd);
            for (int i = 0; i < n; ++i) last.b[i] = bias;
            break;
        }
        case Variant::Lnn:
            model.spec = base;
            model.spec.input_dim = 2 * n;
            model.spec.output_dim = 1;
            model.params = init_params(model.spec, InitScheme::LagrangianScaled, seed);
            break;
        case Variant::LnnMlp:
            model.spec = base;
            model.spec.input_dim = 2 * n;
            model.spec.output_dim = 1;
            model.params = init_params(model.spec, InitScheme::LagrangianScaled, seed);
            model.correction_spec = base;
            model.correction_spec.input_dim = 2 * n;
            model.correction_spec.output_dim = n;
            model.correction_spec.hidden_width = layout.correction_width;
            model.correction_params =
                init_params(model.correction_spec, InitScheme::UniformFan, mix_seed(seed, 1));
            break;
        case Variant::RneaMlp:
            model.spec = base;
            model.spec.input_dim = 2 * n;
            model.spec.output_dim = n;
            model.spec.hidden_width = layout.correction_width;
            model.params = init_params(model.spec, InitScheme::UniformFan, seed);
            break;
        case Variant::RneaLq:
            model.viscous = VecX::Zero(n);
            break;
    }
    return model;
}

void save_checkpoint(const IdModel& model, const std::string& path) {
    json j;
    j["variant"] = to_string(model.variant);
    j["eps_pd"] = model.eps_pd;
    j["normalization"] = norms_to_json(model.norms);
    j["robot_hash"] = model.robot_hash;
    if (model.variant != Variant::RneaLq) {
        j["spec"] = spec_to_json(model.spec);
        j["params"] = vec_to_json(model.params);
    }
    if (model.variant == Variant::LnnMlp) {
        j["correction_spec"] = spec_to_json(model.correction_spec);
        j["correction_params"] = vec_to_json(model.correction_params);
    }
    if (model.variant == Variant::RneaLq) {
        j["viscous"] = vec_to_json(model.viscous);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out << j.dump(2) << "\n";
}

IdModel load_checkpoint(const std::string& path, std::shared_ptr<const RobotModel> robot) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
    json j = json::parse(in);

    IdModel model;
    model.variant = variant_from_string(j.at("variant").get<std::string>());
    model.eps_pd = j.at("eps_pd").get<double>();
    model.norms = norms_from_json(j.at("normalization"));
    model.robot_hash = j.at("robot_hash").get<std::string>();
    model.robot = robot;
    if (robot) {
        const std::string actual = robot_config_hash(*robot);
        if (actual != model.robot_hash) {
            throw std::runtime_error("checkpoint '" + path + "' was trained against robot " +
                                     model.robot_hash + " but the supplied robot hashes to " +
                                     actual);
        }
    }
    if (model.variant != Variant::RneaLq) {
        model.spec = spec_from_json(j.at("spec"));
        model.params = json_to_vec(j.at("params"));
        if (model.params.size() != model.spec.param_count()) {
            throw std::runtime_error("checkpoint '" + path + "' parameter count mismatch");
        }
    }
    if (model.variant == Variant::LnnMlp) {
        model.correction_spec = spec_from_json(j.at("correction_spec"));
        model.correction_params = json_to_vec(j.at("correction_params"));
        if (model.correction_params.size() != model.correction_spec.param_count()) {
            throw std::runtime_error("checkpoint '" + path + "' correction parameter mismatch");
        }
    }
    if (model.variant == Variant::RneaLq) {
        model.viscous = json_to_vec(j.at("viscous"));
    }
    return model;
}

}  // namespace idyn::nets
