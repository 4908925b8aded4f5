#pragma once

#include <functional>
#include <memory>
#include <string>

#include "idyn/dynamics.hpp"
#include "idyn/nets/mlp.hpp"
#include "idyn/normalization.hpp"
#include "idyn/state_batch.hpp"

namespace idyn::nets {

using idyn::StateBatch;

enum class Variant { Mlp, DeLaN, Lnn, LnnMlp, RneaMlp, RneaLq };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

// One identification model. Pure-network variants ignore the robot reference;
// RNEA-based variants require it. All predictions are in physical units.
struct IdModel {
    Variant variant = Variant::Mlp;
    MlpSpec spec;
    VecX params;
    MlpSpec correction_spec;
    VecX correction_params;
    VecX viscous;
    double eps_pd = 1e-4;
    Normalization norms = Normalization::identity(0);
    std::shared_ptr<const RobotModel> robot;
    std::string robot_hash;

    int dof() const { return norms.dof(); }
    VecX predict(const JointState& state) const;
    MatX predict_batch(const StateBatch& batch) const;
};

// Network sizing shared by the experiment configs.
struct ModelLayout {
    int hidden_layers = 2;
    int hidden_width = 64;
    int correction_width = 64;
    double eps_pd = 1e-4;
};

IdModel make_model(Variant v, const Normalization& norms, const ModelLayout& layout,
                   uint64_t seed, std::shared_ptr<const RobotModel> robot);

// Checkpoint I/O. Loading verifies the stored robot-config hash against the
// supplied robot and refuses mismatches.
void save_checkpoint(const IdModel& model, const std::string& path);
IdModel load_checkpoint(const std::string& path, std::shared_ptr<const RobotModel> robot);

// Layout of the structured network head: first n raw diagonal entries, then
// the strictly lower triangle column by column, then the n gravity outputs.
int delan_output_dim(int n);

// L with softplus(raw) + eps_pd on the diagonal.
MatX delan_lower_factor(const VecX& o, int n, double eps_pd);

// Torque assembly from raw head outputs o and their Jacobian J = do/dq taken
// with respect to physical q. qd, qdd in physical units.
VecX delan_assemble(const VecX& o, const MatX& J, const VecX& qd, const VecX& qdd,
                    double eps_pd);

// Pullback of r . delan_assemble into (o, J); accumulates into obar, jbar.
void delan_assemble_pullback(const VecX& o, const MatX& J, const VecX& qd, const VecX& qdd,
                             double eps_pd, const VecX& r, VecX& obar, MatX& jbar);

// Inverse dynamics of an arbitrary scalar Lagrangian built on a tape over
// u = [q; qd]. Reference path for the network-free oracle checks.
using ScalarFn = std::function<ad::Num(ad::Tape&, const std::vector<ad::Num>&)>;
VecX lagrangian_tau(const ScalarFn& lagrangian, const VecX& q, const VecX& qd, const VecX& qdd);

// Batched network evaluation paths shared by prediction and training.
MatX network_inputs_q(const Normalization& norms, const StateBatch& batch);
MatX network_inputs_qqd(const Normalization& norms, const StateBatch& batch);
MatX network_inputs_full(const Normalization& norms, const StateBatch& batch);

// Motor-side rigid-body baseline tau_RBD/psi + I_M psi qdd per column.
MatX rnea_baseline_batch(const RobotModel& robot, const StateBatch& batch);

MatX lnn_tau_batch(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                   const StateBatch& batch);
MatX delan_tau_batch(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                     const StateBatch& batch, double eps_pd);

// Closed-form per-joint least squares for the viscous coefficients of the
// motor-side model; states and targets in physical units.
struct LqFit {
    VecX viscous;
    std::vector<std::string> warnings;
};
LqFit rnea_lq_fit(const RobotModel& robot, const StateBatch& states, const MatX& y_physical);

// Gradient of sum over samples of r(:,b) . tau(:,b) with respect to the
// network parameters, accumulated into param_grad.
void lnn_tau_param_grad(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                        const StateBatch& batch, const MatX& r, VecX& param_grad);
void delan_tau_param_grad(const MlpSpec& spec, const VecX& params, const Normalization& norms,
                          const StateBatch& batch, double eps_pd, const MatX& r,
                          VecX& param_grad);

}  // namespace idyn::nets
