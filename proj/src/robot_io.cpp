#include "idyn/robot_io.hpp"

#include <fstream>
#include "json.hpp"
#include <sstream>

namespace idyn {
namespace {

using nlohmann::json;

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument(std::string("robot config: ") + what + " must be a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json mat3_to_json(const Mat3& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
    return rows;
}

Mat3 mat3_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument(std::string("robot config: ") + what + " must be 3x3");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3)
            throw std::invalid_argument(std::string("robot config: ") + what + " must be 3x3");
        for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

VecX vecx_from_json(const json& j, const char* what) {
    if (!j.is_array())
        throw std::invalid_argument(std::string("robot config: ") + what + " must be an array");
    VecX v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = j[i].get<double>();
    return v;
}

json vecx_to_json(const VecX& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

// Solid cylinder about its COM, symmetry axis given by unit vector `axis`.
Mat3 cylinder_inertia(double mass, double length, double radius, const Vec3& axis) {
    const double axial = 0.5 * mass * radius * radius;
    const double transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
    return transverse * Mat3::Identity() + (axial - transverse) * (axis * axis.transpose());
}

Mat3 shift_to_origin(const Mat3& inertia_com, double mass, const Vec3& com) {
    return inertia_com + mass * (com.squaredNorm() * Mat3::Identity() - com * com.transpose());
}

}  // namespace

json robot_to_json(const RobotModel& model) {
    json links = json::array();
    for (int i = 0; i < model.dof(); ++i) {
        const auto& j = model.joints[i];
        const auto& b = model.bodies[i];
        const auto& m = model.motors[i];
        links.push_back({
            {"joint",
             {{"axis", vec3_to_json(j.axis)},
              {"parent_rotation", mat3_to_json(j.parent_rotation)},
              {"parent_translation", vec3_to_json(j.parent_translation)},
              {"type", "revolute"}}},
            {"inertia",
             {{"mass", b.mass},
              {"center_of_mass", vec3_to_json(b.center_of_mass)},
              {"rotational_inertia", mat3_to_json(b.rotational_inertia)}}},
            {"motor",
             {{"gear_ratio", m.gear_ratio},
              {"torque_constant", m.torque_constant},
              {"motor_inertia", m.motor_inertia}}},
        });
    }
    json out = {{"gravity", vec3_to_json(model.gravity)}, {"links", links}};
    if (model.ground_truth_friction.viscous.size() > 0) {
        out["friction"] = {
            {"viscous", vecx_to_json(model.ground_truth_friction.viscous)},
            {"coulomb", vecx_to_json(model.ground_truth_friction.coulomb)},
            {"coulomb_smoothing_velocity", model.ground_truth_friction.coulomb_smoothing_velocity}};
    }
    return out;
}

RobotModel robot_from_json(const json& j) {
    RobotModel model;
    model.gravity = j.contains("gravity") ? vec3_from_json(j.at("gravity"), "gravity")
                                          : Vec3(0, 0, -9.81);
    if (!j.contains("links") || !j.at("links").is_array() || j.at("links").empty())
        throw std::invalid_argument("robot config: missing non-empty 'links' array");
    for (const auto& link : j.at("links")) {
        JointSpec joint;
        const auto& js = link.at("joint");
        joint.axis = vec3_from_json(js.at("axis"), "joint.axis");
        if (js.contains("parent_rotation"))
            joint.parent_rotation = mat3_from_json(js.at("parent_rotation"), "joint.parent_rotation");
        if (js.contains("parent_translation"))
            joint.parent_translation = vec3_from_json(js.at("parent_translation"), "joint.parent_translation");
        if (js.contains("type") && js.at("type").get<std::string>() != "revolute")
            throw std::invalid_argument("robot config: only revolute joints are supported");

        SpatialInertia body;
        const auto& bs = link.at("inertia");
        body.mass = bs.at("mass").get<double>();
        body.center_of_mass = vec3_from_json(bs.at("center_of_mass"), "inertia.center_of_mass");
        body.rotational_inertia = mat3_from_json(bs.at("rotational_inertia"), "inertia.rotational_inertia");

        MotorSpec motor;
        const auto& ms = link.at("motor");
        motor.gear_ratio = ms.at("gear_ratio").get<double>();
        motor.torque_constant = ms.at("torque_constant").get<double>();
        motor.motor_inertia = ms.at("motor_inertia").get<double>();

        model.joints.push_back(joint);
        model.bodies.push_back(body);
        model.motors.push_back(motor);
    }
    if (j.contains("friction")) {
        const auto& fs = j.at("friction");
        model.ground_truth_friction.viscous = vecx_from_json(fs.at("viscous"), "friction.viscous");
        model.ground_truth_friction.coulomb = vecx_from_json(fs.at("coulomb"), "friction.coulomb");
        if (fs.contains("coulomb_smoothing_velocity"))
            model.ground_truth_friction.coulomb_smoothing_velocity =
                fs.at("coulomb_smoothing_velocity").get<double>();
    } else {
        model.ground_truth_friction = FrictionCoefficients::zero(model.dof());
    }
    model.validate();
    return model;
}

RobotModel load_robot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open robot config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("robot config " + path + ": " + e.what());
    }
    return robot_from_json(j);
}

void save_robot(const std::string& path, const RobotModel& model) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write robot config: " + path);
    out << robot_to_json(model).dump(2) << "\n";
}

std::string robot_config_hash(const RobotModel& model) {
    std::ostringstream hex;
    hex << std::hex << fnv1a64(robot_to_json(model).dump());
    return hex.str();
}

RobotModel surrogate_robot() {
    RobotModel model;
    model.gravity = Vec3(0, 0, -9.81);

    const double lengths[3] = {0.4, 0.3, 0.2};
    const double masses[3] = {10.0, 5.0, 2.0};
    const double radii[3] = {0.05, 0.04, 0.03};
    const double gear[3] = {10.0, 10.0, 5.0};
    const double kt[3] = {0.1, 0.1, 0.05};
    const double rotor[3] = {1e-4, 1e-4, 5e-5};

    // Base yaw about z with a vertical column, then two pitch joints with
    // links along +x of their local frames.
    const Vec3 axes[3] = {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitY()};
    const Vec3 offsets[3] = {Vec3::Zero(), Vec3(0, 0, lengths[0]), Vec3(lengths[1], 0, 0)};
    const Vec3 directions[3] = {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitX()};

    for (int i = 0; i < 3; ++i) {
        JointSpec joint;
        joint.axis = axes[i];
        joint.parent_translation = offsets[i];

        SpatialInertia body;
        body.mass = masses[i];
        body.center_of_mass = 0.5 * lengths[i] * directions[i];
        body.rotational_inertia = shift_to_origin(
            cylinder_inertia(masses[i], lengths[i], radii[i], directions[i]), masses[i],
            body.center_of_mass);

        MotorSpec motor{gear[i], kt[i], rotor[i]};

        model.joints.push_back(joint);
        model.bodies.push_back(body);
        model.motors.push_back(motor);
    }

    model.ground_truth_friction.viscous = (VecX(3) << 8.0, 5.0, 2.0).finished();
    model.ground_truth_friction.coulomb = (VecX(3) << 3.0, 2.0, 1.0).finished();
    model.ground_truth_friction.coulomb_smoothing_velocity = 0.01;
    model.validate();
    return model;
}

RobotModel pendulum_robot(double mass, double length) {
    RobotModel model;
    model.gravity = Vec3(0, 0, -9.81);

    JointSpec joint;
    joint.axis = Vec3::UnitY();

    SpatialInertia body;
    body.mass = mass;
    body.center_of_mass = Vec3(0, 0, -length);  // hanging at q = 0
    body.rotational_inertia =
        shift_to_origin(Mat3::Zero(), mass, body.center_of_mass);  // point mass

    model.joints.push_back(joint);
    model.bodies.push_back(body);
    model.motors.push_back(MotorSpec{1.0, 1.0, 0.0});
    model.ground_truth_friction = FrictionCoefficients::zero(1);
    model.validate();
    return model;
}

RobotModel two_link_robot(double m1, double m2, double l1, double l2) {
    RobotModel model;
    model.gravity = Vec3(0, 0, -9.81);

    JointSpec j1;
    j1.axis = Vec3::UnitY();
    SpatialInertia b1;
    b1.mass = m1;
    b1.center_of_mass = Vec3(0, 0, -l1);
    b1.rotational_inertia = shift_to_origin(Mat3::Zero(), m1, b1.center_of_mass);

    JointSpec j2;
    j2.axis = Vec3::UnitY();
    j2.parent_translation = Vec3(0, 0, -l1);
    SpatialInertia b2;
    b2.mass = m2;
    b2.center_of_mass = Vec3(0, 0, -l2);
    b2.rotational_inertia = shift_to_origin(Mat3::Zero(), m2, b2.center_of_mass);

    model.joints = {j1, j2};
    model.bodies = {b1, b2};
    model.motors = {MotorSpec{1.0, 1.0, 0.0}, MotorSpec{1.0, 1.0, 0.0}};
    model.ground_truth_friction = FrictionCoefficients::zero(2);
    model.validate();
    return model;
}

}  // namespace idyn
