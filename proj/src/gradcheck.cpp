#include "relq/gradcheck.hpp"

#include <sstream>

#include "relq/dqn.hpp"
#include "relq/reliability.hpp"

namespace relq {

namespace {

constexpr double kFdEps = 1e-5;

// Push every parameter at least `margin` away from zero so the L1 terms are
// smooth at the probe point.
void push_off_zero(Network<double>& n, double margin) {
    auto fix = [&](double& v) {
        if (std::abs(v) < margin) v = (v >= 0 ? margin : -margin) + v;
    };
    for (auto& w : n.weights)
        for (int r = 0; r < w.rows(); ++r)
            for (int c = 0; c < w.cols(); ++c) fix(w(r, c));
    for (auto& b : n.biases)
        for (int r = 0; r < b.size(); ++r) fix(b(r));
}

Network<double> random_net(const std::vector<LayerSpec>& layers, uint64_t seed,
                           double bias_spread) {
    Network<double> n = init_network<double>(layers, seed);
    Rng rng(splitmix64(seed));
    for (auto& b : n.biases)
        for (int r = 0; r < b.size(); ++r) b(r) = rng.uniform(-bias_spread, bias_spread);
    push_off_zero(n, 1e-2);
    return n;
}

Mat<double> random_inputs(Rng& rng, int dim, int count) {
    Mat<double> m(dim, count);
    for (int c = 0; c < count; ++c)
        for (int r = 0; r < dim; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
    return m;
}

double min_abs(const Mat<double>& m) { return m.cwiseAbs().minCoeff(); }

std::string shape_string(const std::vector<LayerSpec>& layers) {
    std::ostringstream os;
    os << layers.front().input_dim;
    for (const auto& l : layers) os << "->" << l.output_dim;
    return os.str();
}

GradCheckEntry check_dqn(uint64_t seed) {
    const std::vector<LayerSpec> layers = {
        {4, 8, Activation::Relu}, {8, 8, Activation::Relu}, {8, 3, Activation::Linear}};
    const double gamma = 0.9, lambda = 1e-4;
    Network<double> online = random_net(layers, stream_seed(seed, "dqn-online"), 0.3);
    Network<double> target = random_net(layers, stream_seed(seed, "dqn-target"), 0.3);
    Rng rng = Rng::stream(seed, "dqn-data");
    DqnBatch<double> batch;
    for (int attempt = 0;; ++attempt) {
        const int B = 8;
        batch.obs = random_inputs(rng, 4, B);
        batch.next_obs = random_inputs(rng, 4, B);
        batch.rewards = Vec<double>::NullaryExpr(B, [&](int) { return rng.uniform(-1, 1); });
        batch.actions.resize(B);
        batch.terminal.resize(B);
        for (int i = 0; i < B; ++i) {
            batch.actions[i] = static_cast<int>(rng.uniform_index(3));
            batch.terminal[i] = (i % 3 == 0);
        }
        ForwardTrace<double> t = forward(online, batch.obs);
        double m = 1e9;
        for (const auto& pre : t.pre) m = std::min(m, min_abs(pre));
        if (m > 1e-3 || attempt > 100) break;  // keep relu kinks away
    }
    auto analytic = dqn_loss_and_grads(batch, online, target, gamma, lambda);
    auto oracle = finite_diff_grad<double>(
        online,
        [&](const Network<double>& n) {
            return dqn_loss_and_grads(batch, n, target, gamma, lambda).loss;
        },
        kFdEps);
    return {"dqn", shape_string(layers), max_rel_err(analytic.grads, oracle)};
}

GradCheckEntry check_reliability(uint64_t seed) {
    const std::vector<LayerSpec> layers = head_layers(6);
    const double lambda = 1e-4;
    Network<double> reference = random_net(layers, stream_seed(seed, "rel-ref"), 0.3);
    Rng rng = Rng::stream(seed, "rel-data");
    Network<double> evaluator;
    Mat<double> trained, irrelevant;
    for (int attempt = 0;; ++attempt) {
        evaluator = random_net(layers, stream_seed(seed, "rel-eval") + attempt, 0.3);
        trained = random_inputs(rng, 6, 8);
        irrelevant = random_inputs(rng, 6, 8);
        // keep the |Ref - Evalu| and |theta_e - theta_r| kinks away
        double m = std::min(
            min_abs(forward(reference, trained).output() - forward(evaluator, trained).output()),
            min_abs(forward(reference, irrelevant).output() -
                    forward(evaluator, irrelevant).output()));
        for (size_t k = 0; k < layers.size(); ++k) {
            m = std::min(m, min_abs(reference.weights[k] - evaluator.weights[k]));
            m = std::min(m, min_abs(Mat<double>(reference.biases[k] - evaluator.biases[k])));
        }
        if (m > 1e-3 || attempt > 100) break;
    }
    auto analytic = reliability_loss_and_grads(reference, evaluator, trained, irrelevant, lambda);
    auto oracle = finite_diff_grad<double>(
        evaluator,
        [&](const Network<double>& n) {
            return reliability_loss_and_grads(reference, n, trained, irrelevant, lambda).total();
        },
        kFdEps);
    return {"reliability", shape_string(layers), max_rel_err(analytic.evaluator_grads, oracle)};
}

GradCheckEntry check_rnd(uint64_t seed) {
    const std::vector<LayerSpec> layers = head_layers(6);
    const double lambda = 1e-4;
    Network<double> target = random_net(layers, stream_seed(seed, "rnd-target"), 0.3);
    Network<double> predictor = random_net(layers, stream_seed(seed, "rnd-pred"), 0.3);
    Rng rng = Rng::stream(seed, "rnd-data");
    Mat<double> inputs = random_inputs(rng, 6, 8);
    auto analytic = rnd_loss_and_grads(target, predictor, inputs, lambda);
    auto oracle = finite_diff_grad<double>(
        predictor,
        [&](const Network<double>& n) {
            return rnd_loss_and_grads(target, n, inputs, lambda).total();
        },
        kFdEps);
    return {"rnd", shape_string(layers), max_rel_err(analytic.predictor_grads, oracle)};
}

}  // namespace

double max_rel_err(const ParamShaped<double>& analytic, const ParamShaped<double>& oracle) {
    double worst = 0;
    auto scan = [&](const Mat<double>& a, const Mat<double>& o) {
        for (int r = 0; r < a.rows(); ++r)
            for (int c = 0; c < a.cols(); ++c) {
                const double denom = std::max({std::abs(a(r, c)), std::abs(o(r, c)), 1e-8});
                worst = std::max(worst, std::abs(a(r, c) - o(r, c)) / denom);
            }
    };
    for (size_t k = 0; k < analytic.weights.size(); ++k) {
        scan(analytic.weights[k], oracle.weights[k]);
        scan(Mat<double>(analytic.biases[k]), Mat<double>(oracle.biases[k]));
    }
    return worst;
}

GradCheckReport run_gradcheck(uint64_t seed) {
    GradCheckReport r;
    r.entries.push_back(check_dqn(seed));
    r.entries.push_back(check_reliability(seed));
    r.entries.push_back(check_rnd(seed));
    return r;
}

}  // namespace relq
