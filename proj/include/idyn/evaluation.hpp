#pragma once

#include <span>
#include <string>
#include <vector>

#include "idyn/data.hpp"
#include "idyn/nets/models.hpp"

namespace idyn::eval {

// Per-joint root mean square residual over the slice, in normalized target
// units by default, physical units behind the flag.
VecX rmse_per_joint(const nets::IdModel& model, const data::Dataset& dataset,
                    std::span<const data::TrajectorySample> slice, bool physical_units = false);

// Boxplot-style summary of absolute residuals per joint. Quartiles use
// linear interpolation between order statistics; whiskers reach the most
// extreme point within 1.5 IQR of the quartiles; points beyond count as
// outliers.
struct ErrorSummary {
    VecX rmse;
    VecX mean_abs;
    VecX q25, median, q75;
    VecX whisker_low, whisker_high;
    std::vector<int> outlier_count;
};

ErrorSummary abs_error_distribution(const nets::IdModel& model, const data::Dataset& dataset,
                                    std::span<const data::TrajectorySample> slice,
                                    bool physical_units = false);

// Per-joint torque contributions over a trajectory, one column per step.
// mass holds the point-mass share of the motor-side rigid-body torque,
// inertia the remainder from the rotational inertia tensors, and friction
// the residual of the target against the frictionless model.
struct Decomposition {
    MatX mass_term;
    MatX inertia_term;
    MatX motor_inertia_term;
    MatX friction_residual;
    MatX total;
};

Decomposition decompose_contributions(const RobotModel& robot, const StateBatch& states,
                                      const MatX& y);

// Dissipative torque read off a motor-torque model: prediction minus the
// frictionless motor-side baseline.
MatX dissipative_estimate(const nets::IdModel& model, const StateBatch& states,
                          const RobotModel& robot);

// Plain-text emitters consumed by external plotting tools.
void write_rmse_csv(const std::string& path, const std::vector<std::string>& variants,
                    const MatX& rmse);
void write_boxplot_csv(const std::string& path, const std::vector<std::string>& variants,
                       const std::vector<ErrorSummary>& summaries);
void write_decomposition_csv(const std::string& path, const VecX& t, const Decomposition& d);
void write_dissipative_csv(const std::string& path, const VecX& t,
                           const std::vector<std::string>& variants,
                           const std::vector<MatX>& estimates, const MatX& true_tau_d);
void write_ranking(const std::string& path, const std::vector<std::string>& variants,
                   const VecX& mean_rmse);
void write_gnuplot_script(const std::string& path, int dof);

}  // namespace idyn::eval
