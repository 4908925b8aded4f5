#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idyn/dynamics.hpp"
#include "idyn/normalization.hpp"
#include "idyn/state_batch.hpp"
#include "json.hpp"

namespace idyn::data {

// Third-order series per joint: q(t) = a0/2 + sum_k a_k sin(k w t) + b_k cos(k w t)
// with w = 2 pi / period shared by all joints.
struct FourierTrajectory {
    MatX a;  // n x 4, column 0 holds a0
    MatX b;  // n x 3
    double period = 10.0;
    double dt = 0.008;

    // Optional limits; validate() scans a dense time grid when these are set.
    VecX q_min, q_max, qd_max, qdd_max;

    int dof() const { return static_cast<int>(a.rows()); }
    void validate() const;
};

struct KinematicSample {
    VecX q, qd, qdd;
};

KinematicSample fourier_eval(const FourierTrajectory& traj, double t);

nlohmann::json trajectory_to_json(const FourierTrajectory& traj);
FourierTrajectory trajectory_from_json(const nlohmann::json& j);
FourierTrajectory load_trajectory(const std::string& path);

enum class TargetKind { JointTorque, MotorTorque };
TargetKind target_from_string(const std::string& name);
std::string to_string(TargetKind k);

struct TrajectorySample {
    double t = 0.0;
    VecX q, qd, qdd, y;
};

struct Dataset {
    std::vector<TrajectorySample> samples;
    TargetKind target = TargetKind::MotorTorque;
    double dt = 0.0;
    std::uint64_t seed = 0;
    bool normalized = false;
    int split_index = 0;
    Normalization norms = Normalization::identity(0);
    std::vector<std::string> warnings;

    int dof() const { return samples.empty() ? 0 : static_cast<int>(samples[0].q.size()); }
    int size() const { return static_cast<int>(samples.size()); }
    std::span<const TrajectorySample> train() const {
        return {samples.data(), static_cast<std::size_t>(split_index)};
    }
    std::span<const TrajectorySample> test() const {
        return {samples.data() + split_index, samples.size() - split_index};
    }
};

// Measurement noise model: Gaussian on motor currents and on velocities.
// Current sigma defaults to a fraction of each channel's clean peak current;
// explicit per-joint absolute vectors override the scalar defaults.
struct NoiseConfig {
    double current_rel = 0.01;
    VecX current_abs;
    double qd_std = 1e-3;
    VecX qd_abs;

    static NoiseConfig off() { return {0.0, VecX(), 0.0, VecX()}; }
};

nlohmann::json noise_to_json(const NoiseConfig& cfg);
NoiseConfig noise_from_json(const nlohmann::json& j);

// Samples the trajectory over one period, runs the ground-truth dynamics,
// routes the target through the current measurement (torque -> current ->
// noise -> torque), perturbs the velocity channels, and replaces the
// acceleration channel by numerical differentiation of the noisy velocities.
Dataset synthesize_dataset(const RobotModel& robot, const FourierTrajectory& traj,
                           const NoiseConfig& noise, std::uint64_t seed, TargetKind kind);

// Single-pole smoother run once in each time direction, averaged over both
// orderings so the result is exactly symmetric under time reversal.
VecX lowpass_zero_phase(const VecX& signal, double cutoff_hz, double dt);
MatX lowpass_zero_phase(const MatX& signals, const VecX& cutoff_hz, double dt);

// Filters the target channels in place with per-joint cutoffs.
void filter_targets(Dataset& dataset, const VecX& cutoff_hz);

// Central differences in the interior, one-sided second order at the ends.
// Matrix form treats each column as a channel over the row index.
VecX differentiate(const VecX& series, double dt);
MatX differentiate(const MatX& series, double dt);

// Chronological 70/30 split, then per-channel min/max from the training
// slice only, then the affine map onto [-1, 1] applied to every sample.
Dataset normalize_split(const Dataset& raw);

void save_csv(const std::string& path, const Dataset& dataset);
Dataset load_csv(const std::string& path);

// Physical-unit batches for a slice; a normalized dataset is inverted
// through its stored statistics.
StateBatch state_batch(std::span<const TrajectorySample> slice, const Dataset& dataset);
MatX target_matrix(std::span<const TrajectorySample> slice);

}  // namespace idyn::data
