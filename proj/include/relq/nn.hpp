#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relq/rng.hpp"

namespace relq {

// Error carried by contract violations (mismatched shapes, bad specs).
struct SpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Error carried by bad runtime data (non-finite inputs, NaN losses).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Activation { Relu, Softsign, Linear };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Softsign: return "softsign";
        case Activation::Linear: return "linear";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "softsign") return Activation::Softsign;
    if (s == "linear") return Activation::Linear;
    throw SpecError("unknown activation: " + s);
}

struct LayerSpec {
    int input_dim;
    int output_dim;
    Activation activation;

    bool operator==(const LayerSpec&) const = default;
};

inline void validate_chain(const std::vector<LayerSpec>& layers) {
    if (layers.empty()) throw SpecError("network needs at least one layer");
    for (size_t k = 0; k < layers.size(); ++k) {
        if (layers[k].input_dim < 1 || layers[k].output_dim < 1)
            throw SpecError("layer dims must be >= 1");
        if (k > 0 && layers[k].input_dim != layers[k - 1].output_dim)
            throw SpecError("layer " + std::to_string(k) + " input dim " +
                            std::to_string(layers[k].input_dim) + " != previous output dim " +
                            std::to_string(layers[k - 1].output_dim));
    }
}

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Dense feed-forward network. Weights are (output_dim x input_dim), biases
// (output_dim). Plain value type: copying is a deep clone.
template <class S>
struct Network {
    std::vector<LayerSpec> layers;
    std::vector<Mat<S>> weights;
    std::vector<Vec<S>> biases;

    int input_dim() const { return layers.front().input_dim; }
    int output_dim() const { return layers.back().output_dim; }
    size_t layer_count() const { return layers.size(); }
};

// Parameter-shaped container (gradients, Adam moments).
template <class S>
struct ParamShaped {
    std::vector<Mat<S>> weights;
    std::vector<Vec<S>> biases;
};

template <class S>
ParamShaped<S> zeros_like(const Network<S>& n) {
    ParamShaped<S> g;
    g.weights.reserve(n.weights.size());
    g.biases.reserve(n.biases.size());
    for (size_t k = 0; k < n.weights.size(); ++k) {
        g.weights.push_back(Mat<S>::Zero(n.weights[k].rows(), n.weights[k].cols()));
        g.biases.push_back(Vec<S>::Zero(n.biases[k].size()));
    }
    return g;
}

// Fan-in-scaled uniform init: He-style bound sqrt(6/fan_in) for relu layers,
// Xavier-style sqrt(6/(fan_in+fan_out)) otherwise. Biases zero. Deterministic
// per (spec, seed); weights are drawn row-major, layer by layer.
template <class S>
Network<S> init_network(const std::vector<LayerSpec>& layers, uint64_t seed) {
    validate_chain(layers);
    Rng rng(seed);
    Network<S> n;
    n.layers = layers;
    for (const LayerSpec& l : layers) {
        double limit = (l.activation == Activation::Relu)
                           ? std::sqrt(6.0 / l.input_dim)
                           : std::sqrt(6.0 / (l.input_dim + l.output_dim));
        Mat<S> w(l.output_dim, l.input_dim);
        for (int r = 0; r < l.output_dim; ++r)
            for (int c = 0; c < l.input_dim; ++c)
                w(r, c) = static_cast<S>(rng.uniform(-limit, limit));
        n.weights.push_back(std::move(w));
        n.biases.push_back(Vec<S>::Zero(l.output_dim));
    }
    return n;
}

template <class S>
Network<S> clone_params(const Network<S>& n) {
    return n;  // value semantics
}

template <class T, class S>
Network<T> cast_network(const Network<S>& n) {
    Network<T> out;
    out.layers = n.layers;
    for (size_t k = 0; k < n.weights.size(); ++k) {
        out.weights.push_back(n.weights[k].template cast<T>());
        out.biases.push_back(n.biases[k].template cast<T>());
    }
    return out;
}

// Per-layer pre-activations and activations for a (possibly batched) forward
// pass. Columns are batch samples.
template <class S>
struct ForwardTrace {
    Mat<S> input;
    std::vector<Mat<S>> pre;
    std::vector<Mat<S>> act;

    const Mat<S>& output() const { return act.back(); }
    // Penultimate activation ("extracted features"); input for 1-layer nets.
    const Mat<S>& features() const {
        return act.size() >= 2 ? act[act.size() - 2] : input;
    }
};

template <class S>
ForwardTrace<S> forward(const Network<S>& n, const Mat<S>& input) {
    if (input.rows() != n.input_dim())
        throw SpecError("forward: input dim " + std::to_string(input.rows()) + " != " +
                        std::to_string(n.input_dim()));
    if (!input.allFinite()) throw NumericError("forward: non-finite input");
    ForwardTrace<S> t;
    t.input = input;
    t.pre.reserve(n.layer_count());
    t.act.reserve(n.layer_count());
    const Mat<S>* a = &t.input;
    for (size_t k = 0; k < n.layer_count(); ++k) {
        Mat<S> z = n.weights[k] * (*a);
        z.colwise() += n.biases[k];
        Mat<S> h;
        switch (n.layers[k].activation) {
            case Activation::Relu:
                h = z.cwiseMax(S(0));
                break;
            case Activation::Softsign:
                h = (z.array() / (S(1) + z.array().abs())).matrix();
                break;
            case Activation::Linear:
                h = z;
                break;
        }
        t.pre.push_back(std::move(z));
        t.act.push_back(std::move(h));
        a = &t.act.back();
    }
    return t;
}

template <class S>
Vec<S> forward_value(const Network<S>& n, const Vec<S>& input) {
    return forward(n, Mat<S>(input)).output();
}

// Backpropagation. output_gradient holds dLoss/d(output) per batch column;
// the returned gradients are summed over the batch. relu'(0) = 0.
template <class S>
ParamShaped<S> backward(const Network<S>& n, const ForwardTrace<S>& t,
                        const Mat<S>& output_gradient) {
    const size_t L = n.layer_count();
    if (t.act.size() != L || output_gradient.rows() != n.output_dim() ||
        output_gradient.cols() != t.input.cols())
        throw SpecError("backward: trace/gradient shape mismatch");
    ParamShaped<S> g;
    g.weights.resize(L);
    g.biases.resize(L);
    Mat<S> dact = output_gradient;
    for (size_t k = L; k-- > 0;) {
        Mat<S> dpre;
        switch (n.layers[k].activation) {
            case Activation::Relu:
                dpre = (t.pre[k].array() > S(0)).template cast<S>() * dact.array();
                break;
            case Activation::Softsign: {
                auto denom = S(1) + t.pre[k].array().abs();
                dpre = dact.array() / (denom * denom);
                break;
            }
            case Activation::Linear:
                dpre = dact;
                break;
        }
        const Mat<S>& below = (k == 0) ? t.input : t.act[k - 1];
        g.weights[k].noalias() = dpre * below.transpose();
        g.biases[k] = dpre.rowwise().sum();
        if (k > 0) dact.noalias() = n.weights[k].transpose() * dpre;
    }
    return g;
}

template <class S>
struct AdamState {
    ParamShaped<S> first_moment;
    ParamShaped<S> second_moment;
    int64_t step_count = 0;
    S learning_rate = S(0.001);
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S epsilon = S(1e-8);
};

template <class S>
AdamState<S> make_adam(const Network<S>& n, S learning_rate = S(0.001)) {
    AdamState<S> st;
    st.first_moment = zeros_like(n);
    st.second_moment = zeros_like(n);
    st.learning_rate = learning_rate;
    return st;
}

template <class S>
bool all_finite(const ParamShaped<S>& g) {
    for (const auto& w : g.weights)
        if (!w.allFinite()) return false;
    for (const auto& b : g.biases)
        if (!b.allFinite()) return false;
    return true;
}

// Standard Adam with bias correction. Rejects non-finite gradients without
// touching the parameters or the state.
template <class S>
void adam_step(Network<S>& n, const ParamShaped<S>& grads, AdamState<S>& st) {
    if (grads.weights.size() != n.weights.size())
        throw SpecError("adam_step: gradient shape mismatch");
    if (!all_finite(grads)) throw NumericError("adam_step: non-finite gradients");
    st.step_count += 1;
    const S c1 = S(1) - std::pow(st.beta1, static_cast<S>(st.step_count));
    const S c2 = S(1) - std::pow(st.beta2, static_cast<S>(st.step_count));
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = st.beta1 * m + (S(1) - st.beta1) * g;
        v = (st.beta2 * v.array() + (S(1) - st.beta2) * g.array().square()).matrix();
        p.array() -= st.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + st.epsilon);
    };
    for (size_t k = 0; k < n.weights.size(); ++k) {
        update(n.weights[k], grads.weights[k], st.first_moment.weights[k],
               st.second_moment.weights[k]);
        update(n.biases[k], grads.biases[k], st.first_moment.biases[k],
               st.second_moment.biases[k]);
    }
}

// theta' <- theta' + alpha (theta - theta'), every parameter.
template <class S>
void soft_update(Network<S>& target, const Network<S>& online, S alpha) {
    if (target.layers != online.layers) throw SpecError("soft_update: structure mismatch");
    if (alpha < S(0) || alpha > S(1)) throw SpecError("soft_update: alpha outside [0,1]");
    // blended form so alpha = 0 and alpha = 1 are exact
    for (size_t k = 0; k < target.weights.size(); ++k) {
        target.weights[k] = (S(1) - alpha) * target.weights[k] + alpha * online.weights[k];
        target.biases[k] = (S(1) - alpha) * target.biases[k] + alpha * online.biases[k];
    }
}

// Central-difference gradient oracle: (loss(p+eps) - loss(p-eps)) / (2 eps)
// per parameter. Test-time tool; runs the loss 2 * n_params times.
template <class S>
ParamShaped<S> finite_diff_grad(const Network<S>& n,
                                const std::function<double(const Network<S>&)>& loss_fn,
                                double eps) {
    ParamShaped<S> g = zeros_like(n);
    Network<S> probe = n;
    auto central = [&](S& slot, S orig) {
        slot = orig + static_cast<S>(eps);
        double up = loss_fn(probe);
        slot = orig - static_cast<S>(eps);
        double down = loss_fn(probe);
        slot = orig;
        return static_cast<S>((up - down) / (2.0 * eps));
    };
    for (size_t k = 0; k < n.weights.size(); ++k) {
        for (int r = 0; r < n.weights[k].rows(); ++r)
            for (int c = 0; c < n.weights[k].cols(); ++c)
                g.weights[k](r, c) = central(probe.weights[k](r, c), n.weights[k](r, c));
        for (int r = 0; r < n.biases[k].size(); ++r)
            g.biases[k](r) = central(probe.biases[k](r), n.biases[k](r));
    }
    return g;
}

template <class S>
double l1_norm_diff(const Network<S>& a, const Network<S>& b) {
    double s = 0;
    for (size_t k = 0; k < a.weights.size(); ++k) {
        s += (a.weights[k] - b.weights[k]).template cast<double>().cwiseAbs().sum();
        s += (a.biases[k] - b.biases[k]).template cast<double>().cwiseAbs().sum();
    }
    return s;
}

template <class S>
bool bitwise_equal(const Network<S>& a, const Network<S>& b) {
    if (a.layers != b.layers) return false;
    for (size_t k = 0; k < a.weights.size(); ++k) {
        if ((a.weights[k].array() != b.weights[k].array()).any()) return false;
        if ((a.biases[k].array() != b.biases[k].array()).any()) return false;
    }
    return true;
}

}  // namespace relq
