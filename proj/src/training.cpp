#include "idyn/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "idyn/evaluation.hpp"

namespace idyn::train {

namespace {

using nets::IdModel;
using nets::Variant;

// Normalized prediction residual; tau in physical units, columns = samples.
MatX normalized_residual(const Normalization& norms, const MatX& tau, const MatX& y_norm) {
    return ((norms.y.scale.asDiagonal() * tau).colwise() + norms.y.offset) - y_norm;
}

// 1 where the target channel varies, 0 for constant channels whose scale
// collapsed to zero.
VecX active_mask(const ChannelAffine& y) {
    VecX m = VecX::Zero(y.dim());
    for (int i = 0; i < y.dim(); ++i) m[i] = y.scale[i] != 0.0 ? 1.0 : 0.0;
    return m;
}

double plain_net_gradient(const nets::MlpSpec& spec, const VecX& params, const MatX& inputs,
                          const MatX& out_adjoint, VecX& grad) {
    ad::JetShape shape{0, {}};
    ad::JetBatch in = ad::JetBatch::zero(shape, static_cast<int>(inputs.rows()),
                                         static_cast<int>(inputs.cols()));
    in.c[0] = inputs;
    nets::MlpJetTrace trace;
    ad::JetBatch out = nets::mlp_forward_jet(spec, params, in, &trace);
    ad::JetBatch adj = ad::JetBatch::zero(shape, static_cast<int>(out_adjoint.rows()),
                                          static_cast<int>(out_adjoint.cols()));
    adj.c[0] = out_adjoint;
    nets::mlp_backward_jet(spec, params, trace, adj, &grad);
    return 0.0;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw std::invalid_argument("Adam decay rates must lie in [0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
    if (epochs < 1) throw std::invalid_argument("epoch count must be at least 1");
    if (seeds.empty()) throw std::invalid_argument("need at least one training seed");
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
    return {{"learning_rate", cfg.learning_rate},
            {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},
            {"eps_adam", cfg.eps_adam},
            {"batch_size", cfg.batch_size},
            {"epochs", cfg.epochs},
            {"early_stop_patience", cfg.early_stop_patience},
            {"seeds", cfg.seeds},
            {"hidden_layers", cfg.layout.hidden_layers},
            {"hidden_width", cfg.layout.hidden_width},
            {"correction_width", cfg.layout.correction_width},
            {"eps_pd", cfg.layout.eps_pd}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    auto pick = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    pick("learning_rate", cfg.learning_rate);
    pick("beta1", cfg.beta1);
    pick("beta2", cfg.beta2);
    pick("eps_adam", cfg.eps_adam);
    pick("batch_size", cfg.batch_size);
    pick("epochs", cfg.epochs);
    pick("early_stop_patience", cfg.early_stop_patience);
    pick("seeds", cfg.seeds);
    pick("hidden_layers", cfg.layout.hidden_layers);
    pick("hidden_width", cfg.layout.hidden_width);
    pick("correction_width", cfg.layout.correction_width);
    pick("eps_pd", cfg.layout.eps_pd);
    cfg.validate();
    return cfg;
}

nlohmann::json report_to_json(const TrainReport& report) {
    return {{"variant", report.variant},
            {"seed", report.seed},
            {"epoch_loss", report.epoch_loss},
            {"test_rmse", std::vector<double>(report.test_rmse.data(),
                                              report.test_rmse.data() + report.test_rmse.size())},
            {"seconds", report.seconds},
            {"converged", report.converged},
            {"warnings", report.warnings}};
}

void adam_step(VecX& params, const VecX& grads, AdamState& state, const TrainConfig& cfg,
               std::int64_t step) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step shape mismatch");
    }
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
    state.v.array() = cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grads.array().square();
    const double mc = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double vc = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    params.array() -=
        cfg.learning_rate * (state.m.array() / mc) / ((state.v.array() / vc).sqrt() + cfg.eps_adam);
}

double mse_loss(const IdModel& model, const data::Dataset& dataset,
                std::span<const data::TrajectorySample> slice) {
    if (slice.empty()) throw std::invalid_argument("loss over an empty batch");
    const StateBatch states = data::state_batch(slice, dataset);
    const MatX y = data::target_matrix(slice);
    const MatX rho = normalized_residual(model.norms, model.predict_batch(states), y);
    return rho.squaredNorm() / static_cast<double>(rho.size());
}

double loss_and_gradient(const IdModel& model, const StateBatch& states, const MatX& y_norm,
                         VecX& grad_params, VecX& grad_correction) {
    const int B = states.count();
    const int n = states.dof();
    const double inv = 1.0 / static_cast<double>(B * n);
    const Normalization& norms = model.norms;

    switch (model.variant) {
        case Variant::Mlp: {
            const MatX X = nets::network_inputs_full(norms, states);
            const MatX out = nets::mlp_forward_batch(model.spec, model.params, X);
            const MatX rho = out - y_norm;
            plain_net_gradient(model.spec, model.params, X, 2.0 * inv * rho, grad_params);
            return rho.squaredNorm() * inv;
        }
        case Variant::RneaMlp: {
            const MatX X = nets::network_inputs_qqd(norms, states);
            const MatX h = nets::mlp_forward_batch(model.spec, model.params, X);
            MatX tau = nets::rnea_baseline_batch(*model.robot, states);
            for (int i = 0; i < n; ++i) {
                if (norms.y.scale[i] != 0.0) tau.row(i) += h.row(i) / norms.y.scale[i];
            }
            const MatX rho = normalized_residual(norms, tau, y_norm);
            const MatX adj = 2.0 * inv * (active_mask(norms.y).asDiagonal() * rho);
            plain_net_gradient(model.spec, model.params, X, adj, grad_params);
            return rho.squaredNorm() * inv;
        }
        case Variant::Lnn: {
            const MatX tau = nets::lnn_tau_batch(model.spec, model.params, norms, states);
            const MatX rho = normalized_residual(norms, tau, y_norm);
            const MatX r = 2.0 * inv * (norms.y.scale.asDiagonal() * rho);
            nets::lnn_tau_param_grad(model.spec, model.params, norms, states, r, grad_params);
            return rho.squaredNorm() * inv;
        }
        case Variant::DeLaN: {
            const MatX tau =
                nets::delan_tau_batch(model.spec, model.params, norms, states, model.eps_pd);
            const MatX rho = normalized_residual(norms, tau, y_norm);
            const MatX r = 2.0 * inv * (norms.y.scale.asDiagonal() * rho);
            nets::delan_tau_param_grad(model.spec, model.params, norms, states, model.eps_pd, r,
                                       grad_params);
            return rho.squaredNorm() * inv;
        }
        case Variant::LnnMlp: {
            const MatX X = nets::network_inputs_qqd(norms, states);
            const MatX h =
                nets::mlp_forward_batch(model.correction_spec, model.correction_params, X);
            MatX tau = nets::lnn_tau_batch(model.spec, model.params, norms, states);
            for (int i = 0; i < n; ++i) {
                if (norms.y.scale[i] != 0.0) tau.row(i) += h.row(i) / norms.y.scale[i];
            }
            const MatX rho = normalized_residual(norms, tau, y_norm);
            const MatX r = 2.0 * inv * (norms.y.scale.asDiagonal() * rho);
            nets::lnn_tau_param_grad(model.spec, model.params, norms, states, r, grad_params);
            const MatX adj = 2.0 * inv * (active_mask(norms.y).asDiagonal() * rho);
            plain_net_gradient(model.correction_spec, model.correction_params, X, adj,
                               grad_correction);
            return rho.squaredNorm() * inv;
        }
        case Variant::RneaLq:
            throw std::logic_error("closed-form variant has no gradient path");
    }
    throw std::logic_error("unhandled variant");
}

namespace {

StateBatch gather(const StateBatch& all, const std::vector<int>& order, int begin, int count) {
    StateBatch out;
    out.q.resize(all.q.rows(), count);
    out.qd.resize(all.q.rows(), count);
    out.qdd.resize(all.q.rows(), count);
    for (int k = 0; k < count; ++k) {
        const int src = order[begin + k];
        out.q.col(k) = all.q.col(src);
        out.qd.col(k) = all.qd.col(src);
        out.qdd.col(k) = all.qdd.col(src);
    }
    return out;
}

MatX gather_cols(const MatX& all, const std::vector<int>& order, int begin, int count) {
    MatX out(all.rows(), count);
    for (int k = 0; k < count; ++k) out.col(k) = all.col(order[begin + k]);
    return out;
}

}  // namespace

TrainResult train(Variant variant, const data::Dataset& dataset,
                  std::shared_ptr<const RobotModel> robot, const TrainConfig& cfg,
                  std::uint64_t seed) {
    cfg.validate();
    if (!dataset.normalized) {
        throw std::invalid_argument("training expects a normalized, split dataset");
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    TrainResult result{nets::make_model(variant, dataset.norms, cfg.layout, seed, robot), {}};
    IdModel& model = result.model;
    TrainReport& report = result.report;
    report.variant = nets::to_string(variant);
    report.seed = seed;

    const auto train_slice = dataset.train();
    const StateBatch states = data::state_batch(train_slice, dataset);
    const MatX y_norm = data::target_matrix(train_slice);

    if (variant == Variant::RneaLq) {
        MatX y_phys(y_norm.rows(), y_norm.cols());
        for (int b = 0; b < y_norm.cols(); ++b) {
            y_phys.col(b) = dataset.norms.y.invert(y_norm.col(b));
        }
        nets::LqFit fit = nets::rnea_lq_fit(*robot, states, y_phys);
        model.viscous = fit.viscous;
        report.warnings = fit.warnings;
        report.epoch_loss.push_back(mse_loss(model, dataset, train_slice));
        report.test_rmse = eval::rmse_per_joint(model, dataset, dataset.test());
        report.seconds = elapsed();
        return result;
    }

    const int Ntr = static_cast<int>(train_slice.size());
    AdamState adam_main = AdamState::zero(model.params.size());
    AdamState adam_corr = AdamState::zero(model.correction_params.size());
    VecX grad_main(model.params.size());
    VecX grad_corr(model.correction_params.size());

    VecX best_params = model.params;
    VecX best_corr = model.correction_params;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    std::vector<int> order(Ntr);
    const std::uint64_t shuffle_seed = mix_seed(seed, 0x73687566666c65ULL);
    std::uint64_t draw_index = 0;
    std::int64_t step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = 0; i < Ntr; ++i) order[i] = i;
        for (int i = Ntr - 1; i > 0; --i) {
            const int j = static_cast<int>(bounded_draw(shuffle_seed, draw_index++, i + 1));
            std::swap(order[i], order[j]);
        }

        double epoch_sum = 0.0;
        bool finite = true;
        for (int begin = 0; begin < Ntr; begin += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, Ntr - begin);
            const StateBatch batch = gather(states, order, begin, count);
            const MatX yb = gather_cols(y_norm, order, begin, count);
            grad_main.setZero();
            grad_corr.setZero();
            const double loss = loss_and_gradient(model, batch, yb, grad_main, grad_corr);
            if (!std::isfinite(loss)) {
                finite = false;
                break;
            }
            ++step;
            adam_step(model.params, grad_main, adam_main, cfg, step);
            if (grad_corr.size() > 0) {
                adam_step(model.correction_params, grad_corr, adam_corr, cfg, step);
            }
            epoch_sum += loss * count;
        }
        if (!finite) {
            report.converged = false;
            break;
        }
        const double epoch_loss = epoch_sum / Ntr;
        report.epoch_loss.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best_params = model.params;
            best_corr = model.correction_params;
            best_epoch = epoch;
        }
        if (cfg.early_stop_patience > 0 && epoch - best_epoch >= cfg.early_stop_patience) break;
    }

    model.params = best_params;
    model.correction_params = best_corr;
    report.test_rmse = eval::rmse_per_joint(model, dataset, dataset.test());
    report.seconds = elapsed();
    return result;
}

std::vector<TrainResult> train_seeds(Variant variant, const data::Dataset& dataset,
                                     std::shared_ptr<const RobotModel> robot,
                                     const TrainConfig& cfg) {
    std::vector<TrainResult> results;
    results.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) {
        results.push_back(train(variant, dataset, robot, cfg, seed));
    }
    return results;
}

void append_results_csv(const std::string& path, const TrainReport& report) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot append to results file '" + path + "'");
    if (fresh) out << "variant,seed,joint,rmse,seconds\n";
    for (Eigen::Index i = 0; i < report.test_rmse.size(); ++i) {
        out << report.variant << "," << report.seed << "," << (i + 1) << ","
            << report.test_rmse[i] << "," << report.seconds << "\n";
    }
}

}  // namespace idyn::train
