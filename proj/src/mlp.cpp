#include "idyn/nets/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace idyn::nets {

int MlpSpec::param_count() const {
    int total = 0;
    for (int l = 0; l < layer_count(); ++l) {
        total += layer_out(l) * (layer_in(l) + 1);
    }
    return total;
}

int MlpSpec::layer_offset(int l) const {
    int off = 0;
    for (int k = 0; k < l; ++k) {
        off += layer_out(k) * (layer_in(k) + 1);
    }
    return off;
}

void MlpSpec::validate() const {
    if (input_dim <= 0 || output_dim <= 0) {
        throw std::invalid_argument("network needs positive input and output dimensions");
    }
    if (hidden_layers < 0 || (hidden_layers > 0 && hidden_width <= 0)) {
        throw std::invalid_argument("network hidden layout is invalid");
    }
}

LayerView layer_view(const MlpSpec& spec, const VecX& params, int l) {
    const int in = spec.layer_in(l);
    const int out = spec.layer_out(l);
    const double* base = params.data() + spec.layer_offset(l);
    return {Eigen::Map<const MatX>(base, out, in),
            Eigen::Map<const VecX>(base + out * in, out)};
}

LayerViewMut layer_view(const MlpSpec& spec, VecX& params, int l) {
    const int in = spec.layer_in(l);
    const int out = spec.layer_out(l);
    double* base = params.data() + spec.layer_offset(l);
    return {Eigen::Map<MatX>(base, out, in), Eigen::Map<VecX>(base + out * in, out)};
}

InitScheme init_scheme_from_string(const std::string& name) {
    if (name == "uniform_fan") return InitScheme::UniformFan;
    if (name == "lagrangian_scaled") return InitScheme::LagrangianScaled;
    throw std::invalid_argument("unknown init scheme '" + name + "'");
}

std::string to_string(InitScheme s) {
    return s == InitScheme::UniformFan ? "uniform_fan" : "lagrangian_scaled";
}

VecX init_params(const MlpSpec& spec, InitScheme scheme, uint64_t seed) {
    spec.validate();
    VecX params = VecX::Zero(spec.param_count());
    uint64_t counter = 0;
    for (int l = 0; l < spec.layer_count(); ++l) {
        auto view = layer_view(spec, params, l);
        const double bound = std::sqrt(6.0 / (spec.layer_in(l) + spec.layer_out(l)));
        for (Eigen::Index c = 0; c < view.W.cols(); ++c) {
            for (Eigen::Index r = 0; r < view.W.rows(); ++r) {
                view.W(r, c) = bound * (2.0 * uniform01(splitmix64(mix_seed(seed, counter++))) - 1.0);
            }
        }
    }
    if (scheme == InitScheme::LagrangianScaled) {
        auto last = layer_view(spec, params, spec.hidden_layers);
        last.W *= 0.1;
        last.b *= 0.1;
    }
    return params;
}

namespace {

void affine_forward(const LayerView& layer, const ad::JetBatch& a, ad::JetBatch& z) {
    z.shape = a.shape;
    z.c.resize(a.shape.comps());
    for (int c = 0; c < a.shape.comps(); ++c) {
        z.c[c].noalias() = layer.W * a.c[c];
    }
    z.c[0].colwise() += layer.b;
}

}  // namespace

ad::JetBatch mlp_forward_jet(const MlpSpec& spec, const VecX& params, const ad::JetBatch& input,
                             MlpJetTrace* trace) {
    spec.validate();
    if (input.rows() != spec.input_dim) {
        throw std::invalid_argument("network input has wrong dimension");
    }
    if (params.size() != spec.param_count()) {
        throw std::invalid_argument("parameter vector has wrong length");
    }
    if (trace) {
        trace->layer_input.clear();
        trace->hidden_pre.clear();
    }

    ad::JetBatch a = input;
    for (int l = 0; l < spec.layer_count(); ++l) {
        if (trace) trace->layer_input.push_back(a);
        ad::JetBatch z;
        affine_forward(layer_view(spec, params, l), a, z);
        if (l < spec.hidden_layers) {
            if (trace) trace->hidden_pre.push_back(z);
            a = ad::activation_forward(spec.activation, z);
        } else {
            a = std::move(z);
        }
    }
    return a;
}

ad::JetBatch mlp_backward_jet(const MlpSpec& spec, const VecX& params, const MlpJetTrace& trace,
                              const ad::JetBatch& out_adj, VecX* param_grad) {
    if (static_cast<int>(trace.layer_input.size()) != spec.layer_count()) {
        throw std::invalid_argument("jet trace does not match network layout");
    }
    if (param_grad && param_grad->size() != spec.param_count()) {
        throw std::invalid_argument("gradient accumulator has wrong length");
    }

    ad::JetBatch zbar = out_adj;
    for (int l = spec.layer_count() - 1; l >= 0; --l) {
        auto layer = layer_view(spec, params, l);
        const ad::JetBatch& a = trace.layer_input[l];
        if (param_grad) {
            auto view = layer_view(spec, *param_grad, l);
            for (int c = 0; c < zbar.shape.comps(); ++c) {
                view.W.noalias() += zbar.c[c] * a.c[c].transpose();
            }
            view.b += zbar.c[0].rowwise().sum();
        }
        ad::JetBatch abar;
        abar.shape = zbar.shape;
        abar.c.resize(zbar.shape.comps());
        for (int c = 0; c < zbar.shape.comps(); ++c) {
            abar.c[c].noalias() = layer.W.transpose() * zbar.c[c];
        }
        if (l > 0) {
            zbar = ad::JetBatch::zero(abar.shape, abar.rows(), abar.cols());
            ad::activation_backward(spec.activation, trace.hidden_pre[l - 1], abar, zbar);
        } else {
            zbar = std::move(abar);
        }
    }
    return zbar;
}

MatX mlp_forward_batch(const MlpSpec& spec, const VecX& params, const MatX& X) {
    spec.validate();
    if (X.rows() != spec.input_dim) {
        throw std::invalid_argument("network input has wrong dimension");
    }
    MatX a = X;
    for (int l = 0; l < spec.layer_count(); ++l) {
        auto layer = layer_view(spec, params, l);
        MatX z = (layer.W * a).colwise() + layer.b;
        if (l < spec.hidden_layers) {
            switch (spec.activation) {
                case ad::Activation::Identity: a = std::move(z); break;
                case ad::Activation::Tanh: a = z.array().tanh(); break;
                case ad::Activation::Softplus:
                    a = z.array().max(0.0) + (-z.array().abs()).exp().log1p();
                    break;
            }
        } else {
            a = std::move(z);
        }
    }
    return a;
}

VecX mlp_forward(const MlpSpec& spec, const VecX& params, const VecX& x) {
    return mlp_forward_batch(spec, params, x);
}

std::vector<ad::Num> mlp_tape_forward(const MlpSpec& spec, ad::Tape& tape,
                                      const std::vector<ad::Num>& params,
                                      const std::vector<ad::Num>& x) {
    spec.validate();
    if (static_cast<int>(params.size()) != spec.param_count() ||
        static_cast<int>(x.size()) != spec.input_dim) {
        throw std::invalid_argument("tape forward given wrong sized inputs");
    }
    std::vector<ad::Num> a = x;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int off = spec.layer_offset(l);
        const int in = spec.layer_in(l);
        const int out = spec.layer_out(l);
        std::vector<ad::Num> z;
        z.reserve(out);
        for (int r = 0; r < out; ++r) {
            ad::Num acc = params[off + in * out + r];
            for (int c = 0; c < in; ++c) {
                acc = acc + params[off + c * out + r] * a[c];
            }
            z.push_back(acc);
        }
        if (l < spec.hidden_layers) {
            for (auto& v : z) {
                switch (spec.activation) {
                    case ad::Activation::Identity: break;
                    case ad::Activation::Tanh: v = tanh(v); break;
                    case ad::Activation::Softplus: v = softplus(v); break;
                }
            }
        }
        a = std::move(z);
    }
    return a;
}

}  // namespace idyn::nets
