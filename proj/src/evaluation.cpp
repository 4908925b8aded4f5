#include "idyn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace idyn::eval {

namespace {

// Residuals per joint (rows) over the slice, normalized or physical.
MatX residual_matrix(const nets::IdModel& model, const data::Dataset& dataset,
                     std::span<const data::TrajectorySample> slice, bool physical_units) {
    if (slice.empty()) throw std::invalid_argument("evaluation over an empty slice");
    const StateBatch states = data::state_batch(slice, dataset);
    const MatX pred = model.predict_batch(states);
    const MatX y = data::target_matrix(slice);
    if (physical_units) {
        MatX res(pred.rows(), pred.cols());
        for (Eigen::Index b = 0; b < y.cols(); ++b) {
            res.col(b) = pred.col(b) - model.norms.y.invert(y.col(b));
        }
        return res;
    }
    return ((model.norms.y.scale.asDiagonal() * pred).colwise() + model.norms.y.offset) - y;
}

// Linear interpolation between order statistics of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t m = sorted.size();
    if (m == 1) return sorted[0];
    const double pos = p * static_cast<double>(m - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= m) return sorted[m - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

VecX rmse_per_joint(const nets::IdModel& model, const data::Dataset& dataset,
                    std::span<const data::TrajectorySample> slice, bool physical_units) {
    const MatX res = residual_matrix(model, dataset, slice, physical_units);
    return (res.array().square().rowwise().mean()).sqrt();
}

ErrorSummary abs_error_distribution(const nets::IdModel& model, const data::Dataset& dataset,
                                    std::span<const data::TrajectorySample> slice,
                                    bool physical_units) {
    const MatX res = residual_matrix(model, dataset, slice, physical_units);
    const int n = static_cast<int>(res.rows());
    ErrorSummary s;
    s.rmse = (res.array().square().rowwise().mean()).sqrt();
    s.mean_abs = res.array().abs().rowwise().mean();
    s.q25.resize(n);
    s.median.resize(n);
    s.q75.resize(n);
    s.whisker_low.resize(n);
    s.whisker_high.resize(n);
    s.outlier_count.assign(n, 0);

    std::vector<double> abs_err(res.cols());
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index b = 0; b < res.cols(); ++b) abs_err[b] = std::abs(res(i, b));
        std::sort(abs_err.begin(), abs_err.end());
        s.q25[i] = quantile_sorted(abs_err, 0.25);
        s.median[i] = quantile_sorted(abs_err, 0.50);
        s.q75[i] = quantile_sorted(abs_err, 0.75);
        const double iqr = s.q75[i] - s.q25[i];
        const double lo_fence = s.q25[i] - 1.5 * iqr;
        const double hi_fence = s.q75[i] + 1.5 * iqr;
        double lo = abs_err.front();
        double hi = abs_err.back();
        for (double v : abs_err) {
            if (v >= lo_fence) {
                lo = v;
                break;
            }
        }
        for (auto it = abs_err.rbegin(); it != abs_err.rend(); ++it) {
            if (*it <= hi_fence) {
                hi = *it;
                break;
            }
        }
        s.whisker_low[i] = lo;
        s.whisker_high[i] = hi;
        for (double v : abs_err) {
            if (v < lo_fence || v > hi_fence) ++s.outlier_count[i];
        }
    }
    return s;
}

Decomposition decompose_contributions(const RobotModel& robot, const StateBatch& states,
                                      const MatX& y) {
    const int n = states.dof();
    const int T = states.count();
    if (y.rows() != n || y.cols() != T) {
        throw std::invalid_argument("decomposition targets do not match the trajectory");
    }

    RobotModel point_mass = robot;
    for (auto& body : point_mass.bodies) body.rotational_inertia.setZero();

    Decomposition d;
    d.mass_term.resize(n, T);
    d.inertia_term.resize(n, T);
    d.motor_inertia_term.resize(n, T);
    d.friction_residual.resize(n, T);
    d.total = y;

    VecX inv_psi(n), motor_side(n);
    for (int i = 0; i < n; ++i) inv_psi[i] = 1.0 / robot.motors[i].gear_ratio;

    for (int k = 0; k < T; ++k) {
        const JointState state = states.state(k);
        const VecX full = rnea(robot, state).cwiseProduct(inv_psi);
        d.mass_term.col(k) = rnea(point_mass, state).cwiseProduct(inv_psi);
        d.inertia_term.col(k) = full - d.mass_term.col(k);
        for (int i = 0; i < n; ++i) {
            d.motor_inertia_term(i, k) =
                robot.motors[i].motor_inertia * robot.motors[i].gear_ratio * state.qdd[i];
        }
        d.friction_residual.col(k) = y.col(k) - full - d.motor_inertia_term.col(k);
    }
    return d;
}

MatX dissipative_estimate(const nets::IdModel& model, const StateBatch& states,
                          const RobotModel& robot) {
    return model.predict_batch(states) - nets::rnea_baseline_batch(robot, states);
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.precision(17);
    return out;
}

}  // namespace

void write_rmse_csv(const std::string& path, const std::vector<std::string>& variants,
                    const MatX& rmse) {
    auto out = open_out(path);
    out << "variant";
    for (Eigen::Index j = 0; j < rmse.cols(); ++j) out << ",joint_" << (j + 1);
    out << "\n";
    for (std::size_t v = 0; v < variants.size(); ++v) {
        out << variants[v];
        for (Eigen::Index j = 0; j < rmse.cols(); ++j) out << "," << rmse(v, j);
        out << "\n";
    }
}

void write_boxplot_csv(const std::string& path, const std::vector<std::string>& variants,
                       const std::vector<ErrorSummary>& summaries) {
    auto out = open_out(path);
    out << "variant,joint,rmse,mean_abs,q25,median,q75,whisker_low,whisker_high,outliers\n";
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const ErrorSummary& s = summaries[v];
        for (Eigen::Index i = 0; i < s.rmse.size(); ++i) {
            out << variants[v] << "," << (i + 1) << "," << s.rmse[i] << "," << s.mean_abs[i] << ","
                << s.q25[i] << "," << s.median[i] << "," << s.q75[i] << "," << s.whisker_low[i]
                << "," << s.whisker_high[i] << "," << s.outlier_count[i] << "\n";
        }
    }
}

void write_decomposition_csv(const std::string& path, const VecX& t, const Decomposition& d) {
    auto out = open_out(path);
    const int n = static_cast<int>(d.mass_term.rows());
    out << "t";
    const char* groups[] = {"mass", "inertia", "motor_inertia", "friction", "total"};
    for (const char* g : groups) {
        for (int i = 1; i <= n; ++i) out << "," << g << "_" << i;
    }
    out << "\n";
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        out << t[k];
        const MatX* blocks[] = {&d.mass_term, &d.inertia_term, &d.motor_inertia_term,
                                &d.friction_residual, &d.total};
        for (const MatX* b : blocks) {
            for (int i = 0; i < n; ++i) out << "," << (*b)(i, k);
        }
        out << "\n";
    }
}

void write_dissipative_csv(const std::string& path, const VecX& t,
                           const std::vector<std::string>& variants,
                           const std::vector<MatX>& estimates, const MatX& true_tau_d) {
    auto out = open_out(path);
    const int n = estimates.empty() ? static_cast<int>(true_tau_d.rows())
                                    : static_cast<int>(estimates[0].rows());
    out << "t";
    for (int i = 1; i <= n; ++i) out << ",true_" << i;
    for (const std::string& v : variants) {
        for (int i = 1; i <= n; ++i) out << "," << v << "_" << i;
    }
    out << "\n";
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        out << t[k];
        for (int i = 0; i < n; ++i) out << "," << true_tau_d(i, k);
        for (const MatX& est : estimates) {
            for (int i = 0; i < n; ++i) out << "," << est(i, k);
        }
        out << "\n";
    }
}

void write_ranking(const std::string& path, const std::vector<std::string>& variants,
                   const VecX& mean_rmse) {
    std::vector<std::size_t> order(variants.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return mean_rmse[a] < mean_rmse[b]; });
    auto out = open_out(path);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        out << (rank + 1) << ". " << variants[order[rank]] << "  mean_rmse="
            << mean_rmse[order[rank]] << "\n";
    }
}

void write_gnuplot_script(const std::string& path, int dof) {
    auto out = open_out(path);
    out << "# Plots for the comparison outputs in this directory.\n"
        << "# Usage: gnuplot plots.gp\n"
        << "set datafile separator ','\n"
        << "set key outside\n"
        << "set terminal pngcairo size 1200,500\n\n"
        << "set output 'decomposition.png'\n"
        << "set title 'Torque contributions, joint 1'\n"
        << "plot 'decomposition.csv' using 1:2 with lines title 'mass', \\\n"
        << "     '' using 1:" << (2 + dof) << " with lines title 'inertia', \\\n"
        << "     '' using 1:" << (2 + 2 * dof) << " with lines title 'motor inertia', \\\n"
        << "     '' using 1:" << (2 + 3 * dof) << " with lines title 'friction', \\\n"
        << "     '' using 1:" << (2 + 4 * dof) << " with lines lc 'black' title 'total'\n\n"
        << "set output 'dissipative.png'\n"
        << "set title 'Dissipative torque estimates, joint 1'\n"
        << "stats 'dissipative.csv' nooutput\n"
        << "n_cols = STATS_columns\n"
        << "plot 'dissipative.csv' using 1:2 with lines lc 'black' title 'true', \\\n"
        << "     for [c=2+" << dof << ":n_cols:" << dof << "] '' using 1:c with lines title columnhead(c)\n";
}

}  // namespace idyn::eval
