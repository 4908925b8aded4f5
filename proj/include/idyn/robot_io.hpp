#pragma once

#include <string>

#include "json.hpp"

#include "idyn/dynamics.hpp"

namespace idyn {

nlohmann::json robot_to_json(const RobotModel& model);
RobotModel robot_from_json(const nlohmann::json& j);

RobotModel load_robot(const std::string& path);
void save_robot(const std::string& path, const RobotModel& model);

// Hash of the canonical JSON serialization; embedded in checkpoints so a
// model trained on one robot cannot silently be evaluated against another.
std::string robot_config_hash(const RobotModel& model);

// Desk-scale 3-DOF surrogate arm (axes z, y, y) used by the shipped configs.
RobotModel surrogate_robot();

// 1-link point-mass pendulum: m=1 kg at l=1 m, revolute about +y, q=0 hanging.
RobotModel pendulum_robot(double mass = 1.0, double length = 1.0);

// Planar 2-link arm with point masses, both joints about +y, links hanging
// along -z at q=0. Closed-form M(q) and V(q) are known for this chain.
RobotModel two_link_robot(double m1 = 1.5, double m2 = 0.8, double l1 = 1.0, double l2 = 0.7);

}  // namespace idyn
