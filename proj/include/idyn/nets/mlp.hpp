#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idyn/autodiff/jet.hpp"
#include "idyn/autodiff/tape.hpp"
#include "idyn/common.hpp"

namespace idyn::nets {

// Fully connected network: hidden_layers blocks of width hidden_width with
// the given activation, followed by a linear output layer.
struct MlpSpec {
    int input_dim = 0;
    int output_dim = 0;
    int hidden_layers = 2;
    int hidden_width = 64;
    ad::Activation activation = ad::Activation::Tanh;

    int layer_count() const { return hidden_layers + 1; }
    int layer_in(int l) const { return l == 0 ? input_dim : hidden_width; }
    int layer_out(int l) const { return l == hidden_layers ? output_dim : hidden_width; }
    int param_count() const;
    int layer_offset(int l) const;
    void validate() const;
    bool operator==(const MlpSpec&) const = default;
};

// Views into the flat parameter vector. Weights are stored column major,
// followed by the bias, layer after layer.
struct LayerView {
    Eigen::Map<const MatX> W;
    Eigen::Map<const VecX> b;
};
struct LayerViewMut {
    Eigen::Map<MatX> W;
    Eigen::Map<VecX> b;
};
LayerView layer_view(const MlpSpec& spec, const VecX& params, int l);
LayerViewMut layer_view(const MlpSpec& spec, VecX& params, int l);

enum class InitScheme { UniformFan, LagrangianScaled };
InitScheme init_scheme_from_string(const std::string& name);
std::string to_string(InitScheme s);

// Deterministic initialization. UniformFan draws every weight from the
// symmetric uniform range with bound sqrt(6 / (fan_in + fan_out)) and zeroes
// the biases. LagrangianScaled additionally shrinks the output layer by 0.1
// so assembled quantities start small.
VecX init_params(const MlpSpec& spec, InitScheme scheme, uint64_t seed);

// Saved per-layer state of a jet forward pass, needed for the reverse sweep.
struct MlpJetTrace {
    std::vector<ad::JetBatch> layer_input;
    std::vector<ad::JetBatch> hidden_pre;
};

// Forward pass over a batch of jets (input rows = input_dim, cols = batch).
ad::JetBatch mlp_forward_jet(const MlpSpec& spec, const VecX& params, const ad::JetBatch& input,
                             MlpJetTrace* trace = nullptr);

// Reverse pass. out_adj carries the adjoints of every output component.
// Returns the input adjoints; accumulates parameter gradients if param_grad
// is given (must be zero-initialized to param_count()).
ad::JetBatch mlp_backward_jet(const MlpSpec& spec, const VecX& params, const MlpJetTrace& trace,
                              const ad::JetBatch& out_adj, VecX* param_grad = nullptr);

// Convenience wrappers for plain (derivative-free) evaluation.
MatX mlp_forward_batch(const MlpSpec& spec, const VecX& params, const MatX& X);
VecX mlp_forward(const MlpSpec& spec, const VecX& params, const VecX& x);

// Builds the same network on a tape; reference path for derivative checks.
std::vector<ad::Num> mlp_tape_forward(const MlpSpec& spec, ad::Tape& tape,
                                      const std::vector<ad::Num>& params,
                                      const std::vector<ad::Num>& x);

}  // namespace idyn::nets
