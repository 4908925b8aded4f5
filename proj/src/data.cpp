#include "idyn/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace idyn::data {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 6.283185307179586476925286766559;

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

json mat_to_json(const MatX& m) {
    json j = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vec_to_json(m.row(r)));
    return j;
}

MatX json_to_mat(const json& j, int cols, const std::string& field) {
    MatX m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (static_cast<int>(j[r].size()) != cols) {
            throw std::invalid_argument("trajectory field '" + field + "' row " +
                                        std::to_string(r) + " must have " + std::to_string(cols) +
                                        " entries");
        }
        for (int c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

void FourierTrajectory::validate() const {
    if (a.rows() < 1 || a.cols() != 4 || b.rows() != a.rows() || b.cols() != 3) {
        throw std::invalid_argument("trajectory coefficient blocks must be n x 4 and n x 3");
    }
    if (!(period > 0.0) || !(dt > 0.0)) {
        throw std::invalid_argument("trajectory period and sample interval must be positive");
    }
    if (dt > period / 20.0) {
        throw std::invalid_argument("sample interval too coarse: need dt <= period/20");
    }
    const bool check_q = q_min.size() == dof() && q_max.size() == dof();
    const bool check_qd = qd_max.size() == dof();
    const bool check_qdd = qdd_max.size() == dof();
    if (!check_q && !check_qd && !check_qdd) return;
    const int steps = 2000;
    for (int s = 0; s <= steps; ++s) {
        const KinematicSample k = fourier_eval(*this, period * s / steps);
        for (int i = 0; i < dof(); ++i) {
            if (check_q && (k.q[i] < q_min[i] || k.q[i] > q_max[i])) {
                throw std::invalid_argument("joint " + std::to_string(i + 1) +
                                            " position leaves its configured limits");
            }
            if (check_qd && std::abs(k.qd[i]) > qd_max[i]) {
                throw std::invalid_argument("joint " + std::to_string(i + 1) +
                                            " velocity exceeds its configured limit");
            }
            if (check_qdd && std::abs(k.qdd[i]) > qdd_max[i]) {
                throw std::invalid_argument("joint " + std::to_string(i + 1) +
                                            " acceleration exceeds its configured limit");
            }
        }
    }
}

KinematicSample fourier_eval(const FourierTrajectory& traj, double t) {
    const int n = traj.dof();
    const double w = kTwoPi / traj.period;
    KinematicSample out{VecX::Zero(n), VecX::Zero(n), VecX::Zero(n)};
    for (int i = 0; i < n; ++i) {
        out.q[i] = 0.5 * traj.a(i, 0);
        for (int k = 1; k <= 3; ++k) {
            const double kw = k * w;
            const double s = std::sin(kw * t);
            const double c = std::cos(kw * t);
            const double ak = traj.a(i, k);
            const double bk = traj.b(i, k - 1);
            out.q[i] += ak * s + bk * c;
            out.qd[i] += kw * (ak * c - bk * s);
            out.qdd[i] -= kw * kw * (ak * s + bk * c);
        }
    }
    return out;
}

nlohmann::json trajectory_to_json(const FourierTrajectory& traj) {
    json j;
    j["period"] = traj.period;
    j["dt"] = traj.dt;
    j["a"] = mat_to_json(traj.a);
    j["b"] = mat_to_json(traj.b);
    if (traj.q_min.size() > 0) j["q_min"] = vec_to_json(traj.q_min);
    if (traj.q_max.size() > 0) j["q_max"] = vec_to_json(traj.q_max);
    if (traj.qd_max.size() > 0) j["qd_max"] = vec_to_json(traj.qd_max);
    if (traj.qdd_max.size() > 0) j["qdd_max"] = vec_to_json(traj.qdd_max);
    return j;
}

FourierTrajectory trajectory_from_json(const nlohmann::json& j) {
    FourierTrajectory traj;
    traj.period = j.at("period").get<double>();
    traj.dt = j.at("dt").get<double>();
    traj.a = json_to_mat(j.at("a"), 4, "a");
    traj.b = json_to_mat(j.at("b"), 3, "b");
    if (j.contains("q_min")) traj.q_min = json_to_vec(j.at("q_min"));
    if (j.contains("q_max")) traj.q_max = json_to_vec(j.at("q_max"));
    if (j.contains("qd_max")) traj.qd_max = json_to_vec(j.at("qd_max"));
    if (j.contains("qdd_max")) traj.qdd_max = json_to_vec(j.at("qdd_max"));
    traj.validate();
    return traj;
}

FourierTrajectory load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trajectory config '" + path + "'");
    try {
        return trajectory_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw std::runtime_error("trajectory config '" + path + "': " + e.what());
    }
}

TargetKind target_from_string(const std::string& name) {
    if (name == "tau") return TargetKind::JointTorque;
    if (name == "tau_u") return TargetKind::MotorTorque;
    throw std::invalid_argument("unknown target kind '" + name + "' (expected tau or tau_u)");
}

std::string to_string(TargetKind k) {
    return k == TargetKind::JointTorque ? "tau" : "tau_u";
}

nlohmann::json noise_to_json(const NoiseConfig& cfg) {
    json j;
    j["current_rel"] = cfg.current_rel;
    j["qd_std"] = cfg.qd_std;
    if (cfg.current_abs.size() > 0) j["current_abs"] = vec_to_json(cfg.current_abs);
    if (cfg.qd_abs.size() > 0) j["qd_abs"] = vec_to_json(cfg.qd_abs);
    return j;
}

NoiseConfig noise_from_json(const nlohmann::json& j) {
    NoiseConfig cfg;
    if (j.contains("current_rel")) cfg.current_rel = j.at("current_rel").get<double>();
    if (j.contains("qd_std")) cfg.qd_std = j.at("qd_std").get<double>();
    if (j.contains("current_abs")) cfg.current_abs = json_to_vec(j.at("current_abs"));
    if (j.contains("qd_abs")) cfg.qd_abs = json_to_vec(j.at("qd_abs"));
    if (cfg.current_rel < 0.0 || cfg.qd_std < 0.0 || (cfg.current_abs.size() > 0 && cfg.current_abs.minCoeff() < 0.0) ||
        (cfg.qd_abs.size() > 0 && cfg.qd_abs.minCoeff() < 0.0)) {
        throw std::invalid_argument("noise magnitudes must be nonnegative");
    }
    return cfg;
}

Dataset synthesize_dataset(const RobotModel& robot, const FourierTrajectory& traj,
                           const NoiseConfig& noise, std::uint64_t seed, TargetKind kind) {
    traj.validate();
    const int n = robot.dof();
    if (traj.dof() != n) {
        throw std::invalid_argument("trajectory and robot disagree on the joint count");
    }
    const int N = static_cast<int>(std::floor(traj.period / traj.dt)) + 1;

    std::vector<KinematicSample> kin(N);
    MatX currents(N, n);
    for (int k = 0; k < N; ++k) {
        kin[k] = fourier_eval(traj, k * traj.dt);
        const JointState state{kin[k].q, kin[k].qd, kin[k].qdd};
        const VecX y_clean = kind == TargetKind::MotorTorque
                                 ? motor_torque(robot, state, robot.ground_truth_friction)
                                 : rnea(robot, state);
        currents.row(k) = torque_to_current(robot, y_clean);
    }

    VecX sigma_current(n);
    VecX sigma_qd(n);
    for (int i = 0; i < n; ++i) {
        sigma_current[i] = noise.current_abs.size() > 0
                               ? noise.current_abs[i]
                               : noise.current_rel * currents.col(i).cwiseAbs().maxCoeff();
        sigma_qd[i] = noise.qd_abs.size() > 0 ? noise.qd_abs[i] : noise.qd_std;
    }

    MatX qd_noisy(N, n);
    for (int k = 0; k < N; ++k) {
        for (int i = 0; i < n; ++i) {
            currents(k, i) += sigma_current[i] * normal_draw(mix_seed(seed, 2 * i), k);
            qd_noisy(k, i) = kin[k].qd[i] + sigma_qd[i] * normal_draw(mix_seed(seed, 2 * i + 1), k);
        }
    }
    const MatX qdd_est = differentiate(qd_noisy, traj.dt);

    Dataset out;
    out.target = kind;
    out.dt = traj.dt;
    out.seed = seed;
    out.samples.resize(N);
    for (int k = 0; k < N; ++k) {
        TrajectorySample& s = out.samples[k];
        s.t = k * traj.dt;
        s.q = kin[k].q;
        s.qd = qd_noisy.row(k);
        s.qdd = qdd_est.row(k);
        s.y = current_to_torque(robot, currents.row(k));
    }
    return out;
}

namespace {

VecX smooth_forward(const VecX& x, double alpha) {
    VecX out(x.size());
    out[0] = x[0];
    for (Eigen::Index k = 1; k < x.size(); ++k) {
        out[k] = out[k - 1] + alpha * (x[k] - out[k - 1]);
    }
    return out;
}

VecX smooth_backward(const VecX& x, double alpha) {
    VecX out(x.size());
    out[x.size() - 1] = x[x.size() - 1];
    for (Eigen::Index k = x.size() - 2; k >= 0; --k) {
        out[k] = out[k + 1] + alpha * (x[k] - out[k + 1]);
    }
    return out;
}

}  // namespace

VecX lowpass_zero_phase(const VecX& signal, double cutoff_hz, double dt) {
    if (signal.size() < 3) throw std::invalid_argument("filter needs at least 3 samples");
    if (!(cutoff_hz > 0.0) || !(dt > 0.0)) {
        throw std::invalid_argument("filter cutoff and sample interval must be positive");
    }
    if (cutoff_hz >= 0.5 / dt) {
        throw std::invalid_argument("filter cutoff must lie below the Nyquist frequency");
    }
    const double alpha = dt / (dt + 1.0 / (kTwoPi * cutoff_hz));
    const VecX bf = smooth_backward(smooth_forward(signal, alpha), alpha);
    const VecX fb = smooth_forward(smooth_backward(signal, alpha), alpha);
    return 0.5 * (bf + fb);
}

MatX lowpass_zero_phase(const MatX& signals, const VecX& cutoff_hz, double dt) {
    if (cutoff_hz.size() != signals.cols()) {
        throw std::invalid_argument("need one filter cutoff per channel");
    }
    MatX out(signals.rows(), signals.cols());
    for (Eigen::Index c = 0; c < signals.cols(); ++c) {
        out.col(c) = lowpass_zero_phase(VecX(signals.col(c)), cutoff_hz[c], dt);
    }
    return out;
}

void filter_targets(Dataset& dataset, const VecX& cutoff_hz) {
    const int n = dataset.dof();
    if (cutoff_hz.size() != n) throw std::invalid_argument("need one filter cutoff per joint");
    MatX Y(dataset.size(), n);
    for (int k = 0; k < dataset.size(); ++k) Y.row(k) = dataset.samples[k].y;
    Y = lowpass_zero_phase(Y, cutoff_hz, dataset.dt);
    for (int k = 0; k < dataset.size(); ++k) dataset.samples[k].y = Y.row(k);
}

VecX differentiate(const VecX& series, double dt) {
    const Eigen::Index N = series.size();
    if (N < 3) throw std::invalid_argument("differentiation needs at least 3 samples");
    VecX out(N);
    out[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt);
    for (Eigen::Index k = 1; k < N - 1; ++k) {
        out[k] = (series[k + 1] - series[k - 1]) / (2.0 * dt);
    }
    out[N - 1] = (3.0 * series[N - 1] - 4.0 * series[N - 2] + series[N - 3]) / (2.0 * dt);
    return out;
}

MatX differentiate(const MatX& series, double dt) {
    MatX out(series.rows(), series.cols());
    for (Eigen::Index c = 0; c < series.cols(); ++c) {
        out.col(c) = differentiate(VecX(series.col(c)), dt);
    }
    return out;
}

Dataset normalize_split(const Dataset& raw) {
    if (raw.normalized) throw std::invalid_argument("dataset is already normalized");
    const int N = raw.size();
    if (N < 10) throw std::invalid_argument("need at least 10 samples to split");
    const int n = raw.dof();
    const int split = N * 7 / 10;

    MatX qs(split, n), qds(split, n), qdds(split, n), ys(split, n);
    for (int k = 0; k < split; ++k) {
        qs.row(k) = raw.samples[k].q;
        qds.row(k) = raw.samples[k].qd;
        qdds.row(k) = raw.samples[k].qdd;
        ys.row(k) = raw.samples[k].y;
    }

    const VecX q_lo = qs.colwise().minCoeff(), q_hi = qs.colwise().maxCoeff();
    const VecX qd_lo = qds.colwise().minCoeff(), qd_hi = qds.colwise().maxCoeff();
    const VecX qdd_lo = qdds.colwise().minCoeff(), qdd_hi = qdds.colwise().maxCoeff();
    const VecX y_lo = ys.colwise().minCoeff(), y_hi = ys.colwise().maxCoeff();

    Dataset out = raw;
    out.normalized = true;
    out.split_index = split;
    out.norms.q = ChannelAffine::from_min_max(q_lo, q_hi);
    out.norms.qd = ChannelAffine::from_min_max(qd_lo, qd_hi);
    out.norms.qdd = ChannelAffine::from_min_max(qdd_lo, qdd_hi);
    out.norms.y = ChannelAffine::from_min_max(y_lo, y_hi);

    const char* names[] = {"q", "qd", "qdd", "y"};
    const ChannelAffine* blocks[] = {&out.norms.q, &out.norms.qd, &out.norms.qdd, &out.norms.y};
    for (int b = 0; b < 4; ++b) {
        for (int i = 0; i < n; ++i) {
            if (blocks[b]->scale[i] == 0.0) {
                out.warnings.push_back(std::string("constant channel ") + names[b] + "_" +
                                       std::to_string(i + 1) +
                                       " on the training slice; normalized to 0");
            }
        }
    }

    // Subtract-before-scale form so the training extremes land on exactly
    // -1 and +1; the stored affine agrees to rounding error.
    auto to_unit = [](const VecX& x, const VecX& lo, const VecX& hi) {
        VecX mapped(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double range = hi[i] - lo[i];
            mapped[i] = range == 0.0 ? 0.0 : 2.0 * (x[i] - lo[i]) / range - 1.0;
        }
        return mapped;
    };
    for (TrajectorySample& s : out.samples) {
        s.q = to_unit(s.q, q_lo, q_hi);
        s.qd = to_unit(s.qd, qd_lo, qd_hi);
        s.qdd = to_unit(s.qdd, qdd_lo, qdd_hi);
        s.y = to_unit(s.y, y_lo, y_hi);
    }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json affine_to_json(const ChannelAffine& a) {
    return {{"scale", vec_to_json(a.scale)},
            {"offset", vec_to_json(a.offset)},
            {"center", vec_to_json(a.center)}};
}

ChannelAffine affine_from_json(const json& j) {
    return {json_to_vec(j.at("scale")), json_to_vec(j.at("offset")), json_to_vec(j.at("center"))};
}

std::vector<std::string> csv_header(int n) {
    std::vector<std::string> cols{"t"};
    const char* groups[] = {"q", "qd", "qdd", "y"};
    for (const char* g : groups) {
        for (int i = 1; i <= n; ++i) cols.push_back(std::string(g) + "_" + std::to_string(i));
    }
    return cols;
}

}  // namespace

void save_csv(const std::string& path, const Dataset& dataset) {
    const int n = dataset.dof();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");

    const auto cols = csv_header(n);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << "\n";
    for (const TrajectorySample& s : dataset.samples) {
        out << format_double(s.t);
        for (const VecX* block : {&s.q, &s.qd, &s.qdd, &s.y}) {
            for (int i = 0; i < n; ++i) out << "," << format_double((*block)[i]);
        }
        out << "\n";
    }

    json meta;
    meta["dof"] = n;
    meta["dt"] = dataset.dt;
    meta["seed"] = dataset.seed;
    meta["target"] = to_string(dataset.target);
    meta["normalized"] = dataset.normalized;
    meta["split_index"] = dataset.split_index;
    meta["units"] = {{"t", "s"}, {"q", "rad"}, {"qd", "rad/s"}, {"qdd", "rad/s^2"}, {"y", "N*m"}};
    meta["warnings"] = dataset.warnings;
    if (dataset.normalized) {
        meta["normalization"] = {{"q", affine_to_json(dataset.norms.q)},
                                 {"qd", affine_to_json(dataset.norms.qd)},
                                 {"qdd", affine_to_json(dataset.norms.qdd)},
                                 {"y", affine_to_json(dataset.norms.y)}};
    }
    std::ofstream meta_out(path + ".meta.json", std::ios::binary);
    if (!meta_out) throw std::runtime_error("cannot write dataset sidecar for '" + path + "'");
    meta_out << meta.dump(2) << "\n";
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read dataset '" + path + "'");
    std::ifstream meta_in(path + ".meta.json", std::ios::binary);
    if (!meta_in) throw std::runtime_error("missing dataset sidecar '" + path + ".meta.json'");

    json meta;
    try {
        meta = json::parse(meta_in);
    } catch (const json::exception& e) {
        throw std::runtime_error("dataset sidecar '" + path + ".meta.json': " + e.what());
    }

    Dataset out;
    const int n = meta.at("dof").get<int>();
    out.dt = meta.at("dt").get<double>();
    out.seed = meta.at("seed").get<std::uint64_t>();
    out.target = target_from_string(meta.at("target").get<std::string>());
    out.normalized = meta.at("normalized").get<bool>();
    out.split_index = meta.at("split_index").get<int>();
    out.warnings = meta.at("warnings").get<std::vector<std::string>>();
    if (out.normalized) {
        const json& jn = meta.at("normalization");
        out.norms = {affine_from_json(jn.at("q")), affine_from_json(jn.at("qd")),
                     affine_from_json(jn.at("qdd")), affine_from_json(jn.at("y"))};
    } else {
        out.norms = Normalization::identity(n);
    }

    const auto expected = csv_header(n);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string tok;
        std::size_t idx = 0;
        while (std::getline(ss, tok, ',')) {
            if (idx >= expected.size() || tok != expected[idx]) {
                throw std::runtime_error("dataset '" + path + "': header column " +
                                         std::to_string(idx + 1) + " should be '" +
                                         (idx < expected.size() ? expected[idx] : "<none>") +
                                         "' but is '" + tok + "'");
            }
            ++idx;
        }
        if (idx != expected.size()) {
            throw std::runtime_error("dataset '" + path + "': missing column '" + expected[idx] +
                                     "'");
        }
    }

    int row = 1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(expected.size());
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (true) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc{}) {
                throw std::runtime_error("dataset '" + path + "' row " + std::to_string(row) +
                                         ", column '" + expected[vals.size()] +
                                         "': not a number");
            }
            if (!std::isfinite(v)) {
                throw std::runtime_error("dataset '" + path + "' row " + std::to_string(row) +
                                         ", column '" + expected[vals.size()] +
                                         "': non-finite value");
            }
            vals.push_back(v);
            p = res.ptr;
            if (p == end) break;
            if (*p != ',') {
                throw std::runtime_error("dataset '" + path + "' row " + std::to_string(row) +
                                         ": expected comma after column '" +
                                         expected[vals.size() - 1] + "'");
            }
            ++p;
        }
        if (vals.size() != expected.size()) {
            throw std::runtime_error("dataset '" + path + "' row " + std::to_string(row) + " has " +
                                     std::to_string(vals.size()) + " values, expected " +
                                     std::to_string(expected.size()));
        }
        TrajectorySample s;
        s.t = vals[0];
        s.q = Eigen::Map<const VecX>(vals.data() + 1, n);
        s.qd = Eigen::Map<const VecX>(vals.data() + 1 + n, n);
        s.qdd = Eigen::Map<const VecX>(vals.data() + 1 + 2 * n, n);
        s.y = Eigen::Map<const VecX>(vals.data() + 1 + 3 * n, n);
        out.samples.push_back(std::move(s));
        ++row;
    }
    return out;
}

StateBatch state_batch(std::span<const TrajectorySample> slice, const Dataset& dataset) {
    const int n = dataset.dof();
    const int B = static_cast<int>(slice.size());
    StateBatch batch;
    batch.q.resize(n, B);
    batch.qd.resize(n, B);
    batch.qdd.resize(n, B);
    for (int b = 0; b < B; ++b) {
        if (dataset.normalized) {
            batch.q.col(b) = dataset.norms.q.invert(slice[b].q);
            batch.qd.col(b) = dataset.norms.qd.invert(slice[b].qd);
            batch.qdd.col(b) = dataset.norms.qdd.invert(slice[b].qdd);
        } else {
            batch.q.col(b) = slice[b].q;
            batch.qd.col(b) = slice[b].qd;
            batch.qdd.col(b) = slice[b].qdd;
        }
    }
    return batch;
}

MatX target_matrix(std::span<const TrajectorySample> slice) {
    if (slice.empty()) return MatX();
    MatX Y(slice[0].y.size(), slice.size());
    for (std::size_t b = 0; b < slice.size(); ++b) Y.col(b) = slice[b].y;
    return Y;
}

}  // namespace idyn::data
