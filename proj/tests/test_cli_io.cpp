#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "idyn/evaluation.hpp"
#include "idyn/robot_io.hpp"
#include "idyn/training.hpp"
#include "json.hpp"

using namespace idyn;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args) {
    static int invocation = 0;
    const fs::path dir = fs::path("/tmp") / "idyn_cli_logs";
    fs::create_directories(dir);
    const fs::path out = dir / ("out_" + std::to_string(invocation));
    const fs::path err = dir / ("err_" + std::to_string(invocation));
    ++invocation;
    const std::string cmd = std::string(IDYN_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string robot_path() {
    return std::string(IDYN_SOURCE_DIR) + "/configs/surrogate_robot.json";
}

// Small twice-retraced trajectory so CLI runs finish in milliseconds.
std::string write_trajectory(const fs::path& dir) {
    json j;
    j["period"] = 2.0;
    j["dt"] = 0.05;
    j["a"] = {{0.4, 0.0, 0.0, 0.0}, {-0.2, 0.0, 0.0, 0.0}, {0.6, 0.0, 0.0, 0.0}};
    j["b"] = {{0.0, 0.45, 0.0}, {0.0, 0.35, 0.0}, {0.0, -0.4, 0.0}};
    j["q_min"] = {-2.0, -1.6, -1.8};
    j["q_max"] = {2.0, 1.6, 1.8};
    j["qd_max"] = {6.0, 6.0, 6.0};
    j["qdd_max"] = {40.0, 40.0, 40.0};
    const fs::path p = dir / "trajectory.json";
    std::ofstream(p) << j.dump(2);
    return p.string();
}

json base_manifest(const fs::path& dir, const std::string& out_name) {
    json m;
    m["robot"] = robot_path();
    m["trajectory"] = write_trajectory(dir);
    m["target"] = "tau_u";
    m["seed"] = 7;
    m["out"] = (dir / out_name).string();
    m["noise"] = {{"current_rel", 0.0}, {"qd_std", 0.0}};
    m["variants"] = {"rnea_mlp", "lnn_mlp", "lnn", "delan"};
    m["train"] = {{"epochs", 3},
                  {"batch_size", 16},
                  {"seeds", {1}},
                  {"hidden_width", 8},
                  {"correction_width", 8}};
    return m;
}

std::string write_manifest(const fs::path& dir, const json& m, const std::string& name) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << m.dump(2);
    return p.string();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("/tmp") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("the version flag reports the tool and the robot fingerprint") {
    const fs::path dir = fresh_dir("idyn_cli_version");
    const std::string manifest = write_manifest(dir, base_manifest(dir, "out"), "m.json");

    const CliResult bare = run_cli("--version");
    CHECK(bare.code == 0);
    CHECK(bare.out.find("idyn ") != std::string::npos);

    const CliResult with = run_cli("--version --manifest " + manifest);
    CHECK(with.code == 0);
    const std::string hash = robot_config_hash(load_robot(robot_path()));
    CHECK(with.out.find("robot config hash: " + hash) != std::string::npos);
}

TEST_CASE("synthesis is reproducible byte for byte") {
    const fs::path dir = fresh_dir("idyn_cli_synth");
    json m = base_manifest(dir, "out_a");
    // Noise on, so the seed actually reaches the sampled bytes.
    m["noise"] = {{"current_rel", 0.01}, {"qd_std", 0.001}};
    const std::string manifest = write_manifest(dir, m, "m.json");

    const CliResult a = run_cli("synth --manifest " + manifest);
    REQUIRE(a.code == 0);
    const CliResult b = run_cli("synth --manifest " + manifest + " --out " +
                                (dir / "out_b").string());
    REQUIRE(b.code == 0);

    const std::string csv_a = slurp(dir / "out_a/dataset.csv");
    const std::string csv_b = slurp(dir / "out_b/dataset.csv");
    CHECK(csv_a == csv_b);
    CHECK(slurp(dir / "out_a/dataset.csv.meta.json") ==
          slurp(dir / "out_b/dataset.csv.meta.json"));

    SUBCASE("row count matches the sampling contract") {
        // period 2.0 at dt 0.05 -> 41 samples plus the header line.
        int lines = 0;
        for (char c : csv_a) lines += (c == '\n');
        CHECK(lines == 42);
    }

    SUBCASE("a different seed changes the bytes") {
        const CliResult c = run_cli("synth --manifest " + manifest + " --seed 8 --out " +
                                    (dir / "out_c").string());
        REQUIRE(c.code == 0);
        CHECK(slurp(dir / "out_c/dataset.csv") != csv_a);
    }
}

TEST_CASE("joint-torque and motor-torque targets differ by the motor-side terms") {
    const fs::path dir = fresh_dir("idyn_cli_targets");
    json mu = base_manifest(dir, "out_u");
    json mt = base_manifest(dir, "out_t");
    mt["target"] = "tau";
    const std::string pu = write_manifest(dir, mu, "mu.json");
    const std::string pt = write_manifest(dir, mt, "mt.json");
    REQUIRE(run_cli("synth --manifest " + pu).code == 0);
    REQUIRE(run_cli("synth --manifest " + pt).code == 0);

    const data::Dataset du = data::load_csv((dir / "out_u/dataset.csv").string());
    const data::Dataset dt = data::load_csv((dir / "out_t/dataset.csv").string());
    REQUIRE(du.size() == dt.size());

    const RobotModel robot = load_robot(robot_path());
    const data::FourierTrajectory traj =
        data::load_trajectory((dir / "trajectory.json").string());
    double worst = 0.0;
    for (int k = 0; k < du.size(); ++k) {
        const auto kin = data::fourier_eval(traj, du.samples[k].t);
        const VecX yu = du.norms.y.invert(du.samples[k].y);
        const VecX yt = dt.norms.y.invert(dt.samples[k].y);
        const VecX tau_d = robot.ground_truth_friction.dissipative_torque(kin.qd);
        for (int i = 0; i < 3; ++i) {
            const auto& motor = robot.motors[i];
            const double expected = yt[i] / motor.gear_ratio +
                                    motor.motor_inertia * motor.gear_ratio * kin.qdd[i] +
                                    tau_d[i];
            worst = std::max(worst, std::abs(yu[i] - expected));
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("configuration mistakes exit with the config error code") {
    const fs::path dir = fresh_dir("idyn_cli_badcfg");

    SUBCASE("missing manifest file") {
        const CliResult r = run_cli("synth --manifest /tmp/does_not_exist_manifest.json");
        CHECK(r.code == 1);
        CHECK(r.err.find("error:") != std::string::npos);
    }

    SUBCASE("missing required field") {
        json m = base_manifest(dir, "out");
        m.erase("robot");
        const CliResult r = run_cli("synth --manifest " + write_manifest(dir, m, "m1.json"));
        CHECK(r.code == 1);
        CHECK(r.err.find("missing field 'robot'") != std::string::npos);
    }

    SUBCASE("unknown variant tag") {
        json m = base_manifest(dir, "out");
        m["variants"] = {"boltzmann_brain"};
        const CliResult r = run_cli("synth --manifest " + write_manifest(dir, m, "m2.json"));
        CHECK(r.code == 1);
        CHECK(r.err.find("boltzmann_brain") != std::string::npos);
    }

    SUBCASE("invalid training hyperparameters") {
        json m = base_manifest(dir, "out");
        m["train"]["learning_rate"] = 0.0;
        const CliResult r = run_cli("synth --manifest " + write_manifest(dir, m, "m3.json"));
        CHECK(r.code == 1);
        CHECK(r.err.find("bad train config") != std::string::npos);
    }

    SUBCASE("train without a variant selection") {
        json m = base_manifest(dir, "out");
        const std::string p = write_manifest(dir, m, "m4.json");
        REQUIRE(run_cli("synth --manifest " + p).code == 0);
        const CliResult r = run_cli("train --manifest " + p);
        CHECK(r.code == 1);
        CHECK(r.err.find("--variant") != std::string::npos);
    }
}

TEST_CASE("training divergence exits with its own status") {
    const fs::path dir = fresh_dir("idyn_cli_diverge");
    json m = base_manifest(dir, "out");
    m["train"]["learning_rate"] = 1e200;
    m["train"]["epochs"] = 5;
    const std::string p = write_manifest(dir, m, "m.json");
    REQUIRE(run_cli("synth --manifest " + p).code == 0);

    const CliResult r = run_cli("train --manifest " + p + " --variant mlp");
    CHECK(r.code == 2);
    CHECK(r.out.find("[diverged]") != std::string::npos);
}

TEST_CASE("comparison refuses to run without the trained checkpoints") {
    const fs::path dir = fresh_dir("idyn_cli_missing");
    json m = base_manifest(dir, "out");
    const std::string p = write_manifest(dir, m, "m.json");
    REQUIRE(run_cli("synth --manifest " + p).code == 0);

    const CliResult r = run_cli("compare --manifest " + p);
    CHECK(r.code == 1);
    CHECK(r.err.find("missing checkpoint for variant 'rnea_mlp'") != std::string::npos);
}

TEST_CASE("crafted checkpoints rank deterministically and gate the ordering flag") {
    const fs::path dir = fresh_dir("idyn_cli_rank");
    json m = base_manifest(dir, "out");
    const std::string p = write_manifest(dir, m, "m.json");
    REQUIRE(run_cli("synth --manifest " + p).code == 0);

    const auto robot = std::make_shared<const RobotModel>(load_robot(robot_path()));
    const data::Dataset ds = data::load_csv((dir / "out/dataset.csv").string());
    nets::ModelLayout layout;

    // Four stand-ins with known quality: the exact viscous fit, a 10% and a
    // 100% underestimate of it, and an all-zero predictor.
    auto lq_model = [&](double viscous_scale) {
        nets::IdModel model = nets::make_model(nets::Variant::RneaLq, ds.norms, layout, 1, robot);
        model.viscous = viscous_scale * robot->ground_truth_friction.viscous;
        return model;
    };
    nets::IdModel zero = nets::make_model(nets::Variant::Mlp, ds.norms, layout, 1, robot);
    zero.params.setZero();

    nets::save_checkpoint(lq_model(1.0), (dir / "out/rnea_mlp_seed1.ckpt.json").string());
    nets::save_checkpoint(lq_model(0.9), (dir / "out/lnn_mlp_seed1.ckpt.json").string());
    nets::save_checkpoint(lq_model(0.5), (dir / "out/delan_seed1.ckpt.json").string());
    nets::save_checkpoint(zero, (dir / "out/lnn_seed1.ckpt.json").string());

    const auto test = ds.test();
    const double r_exact = eval::rmse_per_joint(lq_model(1.0), ds, test).mean();
    const double r_090 = eval::rmse_per_joint(lq_model(0.9), ds, test).mean();
    const double r_050 = eval::rmse_per_joint(lq_model(0.5), ds, test).mean();
    const double r_zero = eval::rmse_per_joint(zero, ds, test).mean();
    REQUIRE(r_exact < r_090);
    REQUIRE(r_090 < r_050);
    REQUIRE(r_050 < r_zero);

    const CliResult ok = run_cli("compare --manifest " + p + " --assert-ordering");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("holds") != std::string::npos);

    for (const char* name :
         {"rmse.csv", "boxplot.csv", "ranking.txt", "decomposition.csv", "dissipative.csv",
          "plots.gp"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir / "out" / name));
    }

    std::ifstream ranking(dir / "out/ranking.txt");
    std::string first;
    std::getline(ranking, first);
    CHECK(first.find("rnea_mlp") != std::string::npos);

    SUBCASE("swapping best and worst flips the assertion") {
        nets::save_checkpoint(zero, (dir / "out/rnea_mlp_seed1.ckpt.json").string());
        nets::save_checkpoint(lq_model(1.0), (dir / "out/lnn_seed1.ckpt.json").string());
        const CliResult bad = run_cli("compare --manifest " + p + " --assert-ordering");
        CHECK(bad.code == 3);
        CHECK(bad.out.find("violated") != std::string::npos);
    }
}

TEST_CASE("a generator-grade checkpoint scores a clean single-variant ranking") {
    const fs::path dir = fresh_dir("idyn_cli_perfect");
    json m = base_manifest(dir, "out");
    const std::string p = write_manifest(dir, m, "m.json");
    REQUIRE(run_cli("synth --manifest " + p).code == 0);

    const auto robot = std::make_shared<const RobotModel>(load_robot(robot_path()));
    data::Dataset ds = data::load_csv((dir / "out/dataset.csv").string());
    nets::ModelLayout layout;
    nets::IdModel model = nets::make_model(nets::Variant::RneaLq, ds.norms, layout, 1, robot);
    model.viscous = robot->ground_truth_friction.viscous;

    // Rewrite the stored targets as this model's own predictions so it is a
    // perfect predictor of the dataset it will be scored on.
    const StateBatch states = data::state_batch({ds.samples.data(), ds.samples.size()}, ds);
    const MatX pred = model.predict_batch(states);
    for (int k = 0; k < ds.size(); ++k) {
        ds.samples[k].y =
            ds.norms.y.scale.cwiseProduct(pred.col(k)) + ds.norms.y.offset;
    }
    data::save_csv((dir / "out/dataset.csv").string(), ds);
    nets::save_checkpoint(model, (dir / "out/rnea_mlp_seed1.ckpt.json").string());

    const CliResult r = run_cli("compare --manifest " + p + " --variant rnea_mlp");
    REQUIRE(r.code == 0);

    std::ifstream rmse(dir / "out/rmse.csv");
    std::string header, row;
    std::getline(rmse, header);
    std::getline(rmse, row);
    CHECK(header == "variant,joint_1,joint_2,joint_3");
    REQUIRE(row.rfind("rnea_mlp,", 0) == 0);
    std::stringstream cells(row.substr(row.find(',') + 1));
    std::string cell;
    while (std::getline(cells, cell, ',')) {
        CHECK(std::abs(std::stod(cell)) <= 1e-12);
    }
    std::string extra;
    CHECK(!std::getline(rmse, extra));
}
