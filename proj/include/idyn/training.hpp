#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "idyn/data.hpp"
#include "idyn/nets/models.hpp"
#include "json.hpp"

namespace idyn::train {

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int batch_size = 128;
    int epochs = 2000;
    int early_stop_patience = 0;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    nets::ModelLayout layout;

    void validate() const;
};

nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

struct TrainReport {
    std::string variant;
    std::uint64_t seed = 0;
    std::vector<double> epoch_loss;
    VecX test_rmse;
    double seconds = 0.0;
    bool converged = true;
    std::vector<std::string> warnings;
};

nlohmann::json report_to_json(const TrainReport& report);

struct AdamState {
    VecX m, v;
    static AdamState zero(Eigen::Index size) {
        return {VecX::Zero(size), VecX::Zero(size)};
    }
};

// Bias-corrected Adam update, in place; step counts from 1.
void adam_step(VecX& params, const VecX& grads, AdamState& state, const TrainConfig& cfg,
               std::int64_t step);

// Mean squared residual in normalized target units over the given slice.
double mse_loss(const nets::IdModel& model, const data::Dataset& dataset,
                std::span<const data::TrajectorySample> slice);

// Loss and parameter gradients on one batch; grad_correction is only touched
// for the variant with a second network.
double loss_and_gradient(const nets::IdModel& model, const StateBatch& states,
                         const MatX& y_norm, VecX& grad_params, VecX& grad_correction);

struct TrainResult {
    nets::IdModel model;
    TrainReport report;
};

// Minibatch Adam over the training slice with per-epoch seeded shuffling and
// best-by-train-loss selection. The closed-form variant ignores the epoch
// settings and reports a single pseudo-epoch.
TrainResult train(nets::Variant variant, const data::Dataset& dataset,
                  std::shared_ptr<const RobotModel> robot, const TrainConfig& cfg,
                  std::uint64_t seed);

std::vector<TrainResult> train_seeds(nets::Variant variant, const data::Dataset& dataset,
                                     std::shared_ptr<const RobotModel> robot,
                                     const TrainConfig& cfg);

// Appends `variant,seed,joint,rmse,seconds` rows, writing the header first
// when the file does not exist yet.
void append_results_csv(const std::string& path, const TrainReport& report);

}  // namespace idyn::train
