#pragma once

#include <cstdint>
#include <utility>

#include "relq/env.hpp"
#include "relq/nn.hpp"
#include "relq/rng.hpp"

namespace relq {

inline constexpr int kHeadHidden = 64;
inline constexpr int kHeadOutput = 16;

// Head topology used by both quantifiers: two softsign hidden layers and a
// linear output. input_dim is 20 (raw observation) or 64 (Q-net features).
inline std::vector<LayerSpec> head_layers(int input_dim) {
    return {{input_dim, kHeadHidden, Activation::Softsign},
            {kHeadHidden, kHeadHidden, Activation::Softsign},
            {kHeadHidden, kHeadOutput, Activation::Linear}};
}

// Frozen reference plus trainable evaluator sharing one initialization, so
// every input scores exactly 0 before training.
template <class S>
struct ReliabilityHeadPair {
    Network<S> reference;
    Network<S> evaluator;
    AdamState<S> adam;
    S reg_lambda = S(1e-4);  // Eq-18 weight, p = 1
};

// Frozen random target plus independently initialized trainable predictor.
template <class S>
struct RndHeadPair {
    Network<S> target;
    Network<S> predictor;
    AdamState<S> adam;
    S l1_lambda = S(1e-4);
    bool regularize = true;  // whether the predictor loss carries the L1 term
};

template <class S>
ReliabilityHeadPair<S> init_reliability_pair(int input_dim, uint64_t seed) {
    ReliabilityHeadPair<S> p;
    p.reference = init_network<S>(head_layers(input_dim), seed);
    p.evaluator = clone_params(p.reference);
    p.adam = make_adam(p.evaluator);
    return p;
}

template <class S>
RndHeadPair<S> init_rnd_pair(int input_dim, uint64_t seed) {
    RndHeadPair<S> p;
    p.target = init_network<S>(head_layers(input_dim), stream_seed(seed, "target"));
    p.predictor = init_network<S>(head_layers(input_dim), stream_seed(seed, "predictor"));
    p.adam = make_adam(p.predictor);
    return p;
}

// Per-column mean absolute output gap e between two networks.
template <class S>
Vec<S> output_gap(const Network<S>& a, const Network<S>& b, const Mat<S>& inputs) {
    Mat<S> ya = forward(a, inputs).output();
    Mat<S> yb = forward(b, inputs).output();
    return (ya - yb).cwiseAbs().colwise().mean().transpose();
}

template <class S>
S softsign_nonneg(S e) {
    return e / (S(1) + e);
}

// Reliability(s) = softsign(e), e = mean_k |Ref_k(s) - Evalu_k(s)|. In [0,1).
template <class S>
Vec<S> reliability_scores(const ReliabilityHeadPair<S>& p, const Mat<S>& inputs) {
    Vec<S> e = output_gap(p.reference, p.evaluator, inputs);
    return (e.array() / (S(1) + e.array())).matrix();
}

template <class S>
S reliability_score(const ReliabilityHeadPair<S>& p, const Vec<S>& input) {
    return reliability_scores(p, Mat<S>(input))(0);
}

// Mean squared target/predictor gap, per column. >= 0, scale not normalized.
template <class S>
Vec<S> rnd_uncertainties(const RndHeadPair<S>& p, const Mat<S>& inputs) {
    Mat<S> yt = forward(p.target, inputs).output();
    Mat<S> yp = forward(p.predictor, inputs).output();
    return (yt - yp).array().square().matrix().colwise().mean().transpose();
}

template <class S>
S rnd_uncertainty(const RndHeadPair<S>& p, const Vec<S>& input) {
    return rnd_uncertainties(p, Mat<S>(input))(0);
}

inline double combined_reliability(double raw_head_score, double feature_head_score) {
    return 0.5 * (raw_head_score + feature_head_score);
}

template <class S>
struct ReliabilityLoss {
    double improve = 0;
    double forget = 0;
    double regularization = 0;
    double total() const { return improve + forget + regularization; }
    ParamShaped<S> evaluator_grads;
};

namespace detail {

// sign with the tie convention used by the reliability loss: sign(0) = +1.
// At initialization evaluator == reference exactly, so every output gap is 0;
// a zero subgradient there would make the shared start a fixed point and the
// evaluator could never leave it.
template <class S>
Mat<S> sign_tie_up(const Mat<S>& m) {
    return ((m.array() >= S(0)).template cast<S>() * S(2) - S(1)).matrix();
}

template <class S>
void accumulate(ParamShaped<S>& acc, const ParamShaped<S>& g) {
    for (size_t k = 0; k < acc.weights.size(); ++k) {
        acc.weights[k] += g.weights[k];
        acc.biases[k] += g.biases[k];
    }
}

// Gradient of mean_cols(w * softsign(e)) w.r.t. evaluator params, where
// e = mean_k |eval_k - ref_k| and w = -1 (improve) or +1 (forget).
template <class S>
void gap_loss_backward(const Network<S>& reference, const Network<S>& evaluator,
                       const Mat<S>& inputs, S weight, double& loss_out,
                       ParamShaped<S>& grads_acc) {
    const auto cols = inputs.cols();
    const int K = evaluator.output_dim();
    Mat<S> ref_out = forward(reference, inputs).output();
    ForwardTrace<S> tr = forward(evaluator, inputs);
    Mat<S> diff = tr.output() - ref_out;
    Vec<S> e = diff.cwiseAbs().colwise().mean().transpose();
    loss_out += weight * (e.array() / (S(1) + e.array())).mean();
    // d softsign(e)/de = 1/(1+e)^2 ; de/d eval_k = sign(diff_k)/K
    Vec<S> coeff = ((weight / (S(K) * S(cols))) / (S(1) + e.array()).square()).matrix();
    Mat<S> dout =
        (sign_tie_up(diff).array().rowwise() * coeff.transpose().array()).matrix();
    accumulate(grads_acc, backward(evaluator, tr, dout));
}

}  // namespace detail

// Loss of Eqs. 15-18 and its evaluator gradient:
//   mean_trained(-softsign(e)) + mean_irrelevant(+softsign(e))
//   + lambda * sum |theta_e - theta_r|        (p = 1)
// Exposed separately from reliability_update so the finite-difference oracle
// can probe it.
template <class S>
ReliabilityLoss<S> reliability_loss_and_grads(const Network<S>& reference,
                                              const Network<S>& evaluator,
                                              const Mat<S>& trained_inputs,
                                              const Mat<S>& irrelevant_inputs,
                                              S reg_lambda) {
    if (trained_inputs.cols() == 0 || irrelevant_inputs.cols() == 0)
        throw SpecError("reliability update needs non-empty batches");
    ReliabilityLoss<S> r;
    r.evaluator_grads = zeros_like(evaluator);
    detail::gap_loss_backward(reference, evaluator, trained_inputs, S(-1), r.improve,
                              r.evaluator_grads);
    detail::gap_loss_backward(reference, evaluator, irrelevant_inputs, S(1), r.forget,
                              r.evaluator_grads);
    for (size_t k = 0; k < evaluator.weights.size(); ++k) {
        Mat<S> dw = evaluator.weights[k] - reference.weights[k];
        Vec<S> db = evaluator.biases[k] - reference.biases[k];
        r.regularization += reg_lambda * (dw.template cast<double>().cwiseAbs().sum() +
                                          db.template cast<double>().cwiseAbs().sum());
        r.evaluator_grads.weights[k] += reg_lambda * dw.array().sign().matrix();
        r.evaluator_grads.biases[k] += reg_lambda * db.array().sign().matrix();
    }
    return r;
}

// One Adam step on the evaluator; the reference is never touched.
template <class S>
ReliabilityLoss<S> reliability_update(ReliabilityHeadPair<S>& p, const Mat<S>& trained_inputs,
                                      const Mat<S>& irrelevant_inputs) {
    ReliabilityLoss<S> r = reliability_loss_and_grads(p.reference, p.evaluator, trained_inputs,
                                                      irrelevant_inputs, p.reg_lambda);
    if (!std::isfinite(r.total())) throw NumericError("reliability loss is non-finite");
    adam_step(p.evaluator, r.evaluator_grads, p.adam);
    return r;
}

template <class S>
struct RndLoss {
    double mse = 0;
    double regularization = 0;
    double total() const { return mse + regularization; }
    ParamShaped<S> predictor_grads;
};

// MSE between frozen target and predictor outputs, plus optional L1 on the
// predictor parameters.
template <class S>
RndLoss<S> rnd_loss_and_grads(const Network<S>& target, const Network<S>& predictor,
                              const Mat<S>& inputs, S l1_lambda) {
    if (inputs.cols() == 0) throw SpecError("rnd update needs a non-empty batch");
    const auto cols = inputs.cols();
    const int K = predictor.output_dim();
    Mat<S> yt = forward(target, inputs).output();
    ForwardTrace<S> tr = forward(predictor, inputs);
    Mat<S> diff = tr.output() - yt;
    RndLoss<S> r;
    r.mse = diff.template cast<double>().array().square().mean();
    Mat<S> dout = diff * (S(2) / (S(K) * S(cols)));
    r.predictor_grads = backward(predictor, tr, dout);
    if (l1_lambda > S(0)) {
        for (size_t k = 0; k < predictor.weights.size(); ++k) {
            r.regularization +=
                l1_lambda * (predictor.weights[k].template cast<double>().cwiseAbs().sum() +
                             predictor.biases[k].template cast<double>().cwiseAbs().sum());
            r.predictor_grads.weights[k] +=
                l1_lambda * predictor.weights[k].array().sign().matrix();
            r.predictor_grads.biases[k] +=
                l1_lambda * predictor.biases[k].array().sign().matrix();
        }
    }
    return r;
}

template <class S>
RndLoss<S> rnd_update(RndHeadPair<S>& p, const Mat<S>& inputs) {
    RndLoss<S> r = rnd_loss_and_grads(p.target, p.predictor, inputs,
                                      p.regularize ? p.l1_lambda : S(0));
    if (!std::isfinite(r.total())) throw NumericError("rnd loss is non-finite");
    adam_step(p.predictor, r.predictor_grads, p.adam);
    return r;
}

// Q-net penultimate activation, read-only. No gradient ever flows from the
// reliability heads into the Q-net.
template <class S>
Mat<S> extracted_features(const Network<S>& qnet, const Mat<S>& obs) {
    return forward(qnet, obs).features();
}

// Irrelevant states for the forgetting loss: uniform over the scaled
// observation cube [-1,1]^dim, independent of the replay buffer.
template <class S>
Mat<S> sample_irrelevant_observations(Rng& rng, int dim, int count) {
    Mat<S> m(dim, count);
    for (int c = 0; c < count; ++c)
        for (int r = 0; r < dim; ++r) m(r, c) = static_cast<S>(rng.uniform(-1.0, 1.0));
    return m;
}

}  // namespace relq
