// Experiment driver: synthesize datasets, train identification models, and
// compare them on a shared test slice. All steps are reproducible from a
// manifest file plus one seed; reruns produce byte-identical outputs.
//
// Exit codes: 0 success, 1 configuration error, 2 training divergence,
// 3 ordering assertion failed.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "idyn/data.hpp"
#include "idyn/evaluation.hpp"
#include "idyn/nets/models.hpp"
#include "idyn/robot_io.hpp"
#include "idyn/training.hpp"

namespace {

using nlohmann::json;
using namespace idyn;

constexpr const char* kVersion = "1.0.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Manifest {
    std::string path;
    std::string robot_path;
    std::string trajectory_path;
    data::NoiseConfig noise;
    data::TargetKind target = data::TargetKind::MotorTorque;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    VecX target_cutoff_hz;  // empty = no filtering
    std::vector<std::string> variants;
    json train_defaults = json::object();
    json train_overrides = json::object();

    train::TrainConfig train_config(const std::string& variant) const {
        json merged = train_defaults;
        if (train_overrides.contains(variant)) {
            merged.update(train_overrides.at(variant));
        }
        return train::config_from_json(merged);
    }
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return j;
}

std::string resolve_relative(const std::string& manifest_path, const std::string& ref) {
    std::filesystem::path p(ref);
    if (p.is_absolute()) return ref;
    return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

Manifest load_manifest(const std::string& path) {
    const json j = read_json_file(path);
    Manifest m;
    m.path = path;
    auto require = [&](const char* key) -> const json& {
        if (!j.contains(key)) {
            throw ConfigError("manifest '" + path + "' is missing field '" + key + "'");
        }
        return j.at(key);
    };
    m.robot_path = resolve_relative(path, require("robot").get<std::string>());
    m.trajectory_path = resolve_relative(path, require("trajectory").get<std::string>());
    if (j.contains("noise")) m.noise = data::noise_from_json(j.at("noise"));
    if (j.contains("target")) m.target = data::target_from_string(j.at("target").get<std::string>());
    if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) m.out_dir = resolve_relative(path, j.at("out").get<std::string>());
    if (j.contains("target_cutoff_hz")) {
        const json& c = j.at("target_cutoff_hz");
        if (c.is_array()) {
            m.target_cutoff_hz.resize(static_cast<Eigen::Index>(c.size()));
            for (std::size_t i = 0; i < c.size(); ++i) m.target_cutoff_hz[i] = c[i].get<double>();
        } else if (c.get<double>() > 0.0) {
            m.target_cutoff_hz = VecX::Constant(1, c.get<double>());
        }
    }
    m.variants = j.value("variants",
                         std::vector<std::string>{"rnea_mlp", "lnn_mlp", "lnn", "delan"});
    if (j.contains("train")) m.train_defaults = j.at("train");
    if (j.contains("train_overrides")) m.train_overrides = j.at("train_overrides");

    for (const std::string& tag : m.variants) nets::variant_from_string(tag);
    try {
        for (const std::string& tag : m.variants) m.train_config(tag);
    } catch (const std::exception& e) {
        throw ConfigError("manifest '" + path + "': bad train config: " + e.what());
    }
    return m;
}

std::string dataset_path(const Manifest& m) { return m.out_dir + "/dataset.csv"; }

std::string checkpoint_path(const Manifest& m, const std::string& tag, std::uint64_t seed) {
    return m.out_dir + "/" + tag + "_seed" + std::to_string(seed) + ".ckpt.json";
}

std::string report_path(const Manifest& m, const std::string& tag, std::uint64_t seed) {
    return m.out_dir + "/" + tag + "_seed" + std::to_string(seed) + ".report.json";
}

VecX expand_cutoffs(const VecX& configured, int dof) {
    if (configured.size() == 0) return VecX();
    if (configured.size() == 1) return VecX::Constant(dof, configured[0]);
    if (configured.size() != dof) {
        throw ConfigError("target_cutoff_hz needs one entry or one per joint");
    }
    return configured;
}

void print_channel_ranges(const data::Dataset& dataset) {
    const StateBatch states = data::state_batch(dataset.samples, dataset);
    MatX y = data::target_matrix(dataset.samples);
    if (dataset.normalized) {
        for (Eigen::Index b = 0; b < y.cols(); ++b) y.col(b) = dataset.norms.y.invert(y.col(b));
    }
    auto row_range = [](const MatX& block, const char* name) {
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
            std::cout << "  " << name << "_" << (i + 1) << "  [" << block.row(i).minCoeff()
                      << ", " << block.row(i).maxCoeff() << "]\n";
        }
    };
    row_range(states.q, "q");
    row_range(states.qd, "qd");
    row_range(states.qdd, "qdd");
    row_range(y, "y");
}

int cmd_synth(const Manifest& m) {
    const RobotModel robot = load_robot(m.robot_path);
    data::FourierTrajectory traj = data::load_trajectory(m.trajectory_path);
    if (traj.dof() != robot.dof()) {
        throw ConfigError("trajectory in '" + m.trajectory_path + "' has " +
                          std::to_string(traj.dof()) + " joints but robot has " +
                          std::to_string(robot.dof()));
    }

    data::Dataset raw = data::synthesize_dataset(robot, traj, m.noise, m.seed, m.target);
    const VecX cutoffs = expand_cutoffs(m.target_cutoff_hz, robot.dof());
    if (cutoffs.size() > 0) data::filter_targets(raw, cutoffs);
    const data::Dataset dataset = data::normalize_split(raw);

    std::filesystem::create_directories(m.out_dir);
    data::save_csv(dataset_path(m), dataset);

    std::cout << "wrote " << dataset_path(m) << "\n"
              << "samples: " << dataset.size() << " (train " << dataset.split_index << ", test "
              << dataset.size() - dataset.split_index << ")\n"
              << "target: " << data::to_string(dataset.target) << ", seed " << dataset.seed
              << "\nphysical channel ranges:\n";
    print_channel_ranges(dataset);
    for (const std::string& w : dataset.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

int cmd_train(const Manifest& m, const std::vector<std::string>& tags, int jobs) {
    const auto robot = std::make_shared<const RobotModel>(load_robot(m.robot_path));
    const data::Dataset dataset = data::load_csv(dataset_path(m));
    if (dataset.dof() != robot->dof()) {
        throw ConfigError("dataset at '" + dataset_path(m) + "' does not match the robot");
    }
    std::filesystem::create_directories(m.out_dir);

    std::vector<std::vector<train::TrainResult>> results(tags.size());
    std::atomic<std::size_t> next{0};
    std::mutex print_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < tags.size(); i = next.fetch_add(1)) {
            try {
                const nets::Variant variant = nets::variant_from_string(tags[i]);
                const train::TrainConfig cfg = m.train_config(tags[i]);
                results[i] = train::train_seeds(variant, dataset, robot, cfg);
                std::lock_guard<std::mutex> lock(print_mutex);
                for (const train::TrainResult& r : results[i]) {
                    std::cout << tags[i] << " seed " << r.report.seed << ": final loss "
                              << (r.report.epoch_loss.empty() ? 0.0 : r.report.epoch_loss.back())
                              << ", test rmse " << r.report.test_rmse.mean() << ", "
                              << r.report.seconds << " s"
                              << (r.report.converged ? "" : "  [diverged]") << "\n";
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(print_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(tags.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    bool diverged = false;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        for (const train::TrainResult& r : results[i]) {
            nets::save_checkpoint(r.model, checkpoint_path(m, tags[i], r.report.seed));
            std::ofstream out(report_path(m, tags[i], r.report.seed));
            out << train::report_to_json(r.report).dump(2) << "\n";
            train::append_results_csv(m.out_dir + "/results.csv", r.report);
            diverged = diverged || !r.report.converged;
        }
    }
    return diverged ? 2 : 0;
}

// Per-variant evaluation: one model per training seed, ranked by the median
// across seeds of the joint-averaged RMSE. CSVs report the median seed.
struct VariantEval {
    std::string tag;
    std::vector<nets::IdModel> models;  // one per seed, ordered as configured
    MatX rmse;                          // seeds x joints
    double median_mean_rmse = 0.0;
    int median_seed_row = 0;
};

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

int cmd_compare(const Manifest& m, const std::vector<std::string>& tags, bool assert_ordering,
                bool physical_units) {
    const auto robot = std::make_shared<const RobotModel>(load_robot(m.robot_path));
    const data::Dataset dataset = data::load_csv(dataset_path(m));
    const auto test = dataset.test();

    std::vector<VariantEval> evals;
    for (const std::string& tag : tags) {
        VariantEval ev;
        ev.tag = tag;
        const train::TrainConfig cfg = m.train_config(tag);
        ev.rmse.resize(static_cast<Eigen::Index>(cfg.seeds.size()), dataset.dof());
        std::vector<double> means;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            const std::string path = checkpoint_path(m, tag, cfg.seeds[s]);
            if (!std::filesystem::exists(path)) {
                throw ConfigError("missing checkpoint for variant '" + tag + "' (expected at " +
                                  path + "); run the train subcommand first");
            }
            ev.models.push_back(nets::load_checkpoint(path, robot));
            ev.rmse.row(static_cast<Eigen::Index>(s)) =
                eval::rmse_per_joint(ev.models.back(), dataset, test, physical_units);
            means.push_back(ev.rmse.row(static_cast<Eigen::Index>(s)).mean());
        }
        ev.median_mean_rmse = median_of(means);
        ev.median_seed_row = 0;
        double best_gap = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < means.size(); ++s) {
            const double gap = std::abs(means[s] - ev.median_mean_rmse);
            if (gap < best_gap) {
                best_gap = gap;
                ev.median_seed_row = static_cast<int>(s);
            }
        }
        evals.push_back(std::move(ev));
    }

    std::filesystem::create_directories(m.out_dir);

    MatX rmse_rows(static_cast<Eigen::Index>(evals.size()), dataset.dof());
    VecX mean_rmse(static_cast<Eigen::Index>(evals.size()));
    std::vector<std::string> names;
    std::vector<eval::ErrorSummary> summaries;
    for (std::size_t v = 0; v < evals.size(); ++v) {
        for (int j = 0; j < dataset.dof(); ++j) {
            std::vector<double> col(evals[v].rmse.rows());
            for (Eigen::Index s = 0; s < evals[v].rmse.rows(); ++s) col[s] = evals[v].rmse(s, j);
            rmse_rows(static_cast<Eigen::Index>(v), j) = median_of(col);
        }
        mean_rmse[static_cast<Eigen::Index>(v)] = evals[v].median_mean_rmse;
        names.push_back(evals[v].tag);
        summaries.push_back(eval::abs_error_distribution(
            evals[v].models[evals[v].median_seed_row], dataset, test, physical_units));
    }
    eval::write_rmse_csv(m.out_dir + "/rmse.csv", names, rmse_rows);
    eval::write_boxplot_csv(m.out_dir + "/boxplot.csv", names, summaries);
    eval::write_ranking(m.out_dir + "/ranking.txt", names, mean_rmse);

    const StateBatch test_states = data::state_batch(test, dataset);
    VecX t(static_cast<Eigen::Index>(test.size()));
    for (std::size_t k = 0; k < test.size(); ++k) t[static_cast<Eigen::Index>(k)] = test[k].t;

    MatX y_physical = data::target_matrix(test);
    if (dataset.normalized) {
        for (Eigen::Index b = 0; b < y_physical.cols(); ++b) {
            y_physical.col(b) = dataset.norms.y.invert(y_physical.col(b));
        }
    }
    eval::write_decomposition_csv(m.out_dir + "/decomposition.csv", t,
                                  eval::decompose_contributions(*robot, test_states, y_physical));

    if (dataset.target == data::TargetKind::MotorTorque) {
        MatX true_tau_d(dataset.dof(), test_states.count());
        for (int k = 0; k < test_states.count(); ++k) {
            true_tau_d.col(k) =
                robot->ground_truth_friction.dissipative_torque(test_states.qd.col(k));
        }
        std::vector<MatX> estimates;
        for (const VariantEval& ev : evals) {
            estimates.push_back(
                eval::dissipative_estimate(ev.models[ev.median_seed_row], test_states, *robot));
        }
        eval::write_dissipative_csv(m.out_dir + "/dissipative.csv", t, names, estimates,
                                    true_tau_d);
    }
    eval::write_gnuplot_script(m.out_dir + "/plots.gp", dataset.dof());

    std::cout << "variant ranking by "
              << (physical_units ? "physical" : "normalized") << "-unit mean RMSE:\n";
    std::vector<std::size_t> order(evals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mean_rmse[static_cast<Eigen::Index>(a)] < mean_rmse[static_cast<Eigen::Index>(b)];
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        std::cout << "  " << (rank + 1) << ". " << names[order[rank]] << "  "
                  << mean_rmse[static_cast<Eigen::Index>(order[rank])] << "\n";
    }

    if (assert_ordering) {
        auto find = [&](const char* tag) -> double {
            for (const VariantEval& ev : evals) {
                if (ev.tag == tag) return ev.median_mean_rmse;
            }
            throw ConfigError(std::string("--assert-ordering needs variant '") + tag +
                              "' in the comparison");
        };
        const double rnea_mlp = find("rnea_mlp");
        const double lnn_mlp = find("lnn_mlp");
        const double lnn = find("lnn");
        const double delan = find("delan");
        const bool ok = rnea_mlp < lnn_mlp && lnn_mlp < std::min(lnn, delan) &&
                        rnea_mlp <= 0.5 * lnn;
        std::cout << "ordering rnea_mlp < lnn_mlp < min(lnn, delan), rnea_mlp <= lnn/2: "
                  << (ok ? "holds" : "violated") << "\n";
        if (!ok) return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inverse dynamics identification experiments"};
    app.require_subcommand(0, 1);

    std::string manifest_path, variant_tag, out_override, units = "normalized";
    std::optional<std::uint64_t> seed_override;
    bool all_variants = false, assert_ordering = false, show_version = false;
    int jobs = 1;

    app.add_flag("--version", show_version,
                 "Print tool version and, with --manifest, the robot config hash");
    app.add_option("--manifest", manifest_path, "Experiment manifest (JSON)");

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path, "Experiment manifest (JSON)")->required();
        cmd->add_option("--seed", seed_override, "Override the manifest seed");
        cmd->add_option("--out", out_override, "Override the manifest output directory");
    };

    CLI::App* synth = app.add_subcommand("synth", "Synthesize, filter, and normalize a dataset");
    add_common(synth);

    CLI::App* tr = app.add_subcommand("train", "Train identification models");
    add_common(tr);
    tr->add_option("--variant", variant_tag, "Single variant tag to train");
    tr->add_flag("--all", all_variants, "Train every variant listed in the manifest");
    tr->add_option("--jobs", jobs, "Worker threads for --all")->check(CLI::PositiveNumber);

    CLI::App* cmp = app.add_subcommand("compare", "Evaluate trained variants on the test slice");
    add_common(cmp);
    cmp->add_option("--variant", variant_tag, "Restrict the comparison to one variant");
    cmp->add_flag("--assert-ordering", assert_ordering,
                  "Exit 3 unless rnea_mlp < lnn_mlp < min(lnn, delan) and rnea_mlp <= lnn/2");
    cmp->add_option("--units", units, "RMSE units for reports")
        ->check(CLI::IsMember({"normalized", "physical"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (show_version) {
            std::cout << "idyn " << kVersion << "\n";
            if (!manifest_path.empty()) {
                const Manifest m = load_manifest(manifest_path);
                std::cout << "robot config hash: "
                          << robot_config_hash(load_robot(m.robot_path)) << "\n";
            }
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 1;
        }

        Manifest m = load_manifest(manifest_path);
        if (seed_override) m.seed = *seed_override;
        if (!out_override.empty()) m.out_dir = out_override;

        if (synth->parsed()) return cmd_synth(m);

        std::vector<std::string> tags;
        if (!variant_tag.empty()) {
            nets::variant_from_string(variant_tag);
            tags.push_back(variant_tag);
        } else if (all_variants || cmp->parsed()) {
            tags = m.variants;
        } else {
            throw ConfigError("train needs --variant <tag> or --all");
        }

        if (tr->parsed()) return cmd_train(m, tags, jobs);
        if (cmp->parsed()) return cmd_compare(m, tags, assert_ordering, units == "physical");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
