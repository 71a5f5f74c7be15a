#include "softq/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace softq {

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layer_count(); ++l)
        n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
    return n;
}

bool MlpParams::same_shape(const MlpParams& other) const { return layer_sizes == other.layer_sizes; }

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
    MlpGrads g;
    for (int l = 0; l < params.layer_count(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
    }
    return g;
}

void MlpGrads::set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
}

void MlpGrads::add(const MlpGrads& other, double scale) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l] += scale * other.weights[l];
        biases[l] += scale * other.biases[l];
    }
}

void MlpGrads::scale(double factor) {
    for (auto& w : weights) w *= factor;
    for (auto& b : biases) b *= factor;
}

double MlpGrads::max_abs() const {
    double m = 0.0;
    for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
    for (const auto& b : biases)
        if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
}

bool MlpGrads::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("mlp_init: need at least input and output layers");
    for (int n : layer_sizes)
        if (n < 1) throw std::invalid_argument("mlp_init: layer sizes must be positive");

    std::mt19937_64 rng(seed);
    MlpParams params;
    params.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
        params.weights.push_back(std::move(w));
        params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return params;
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input,
                        ForwardCache* cache) {
    if (input.size() != params.input_size())
        throw std::invalid_argument("forward: input length does not match the network");
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(input);
    }
    Eigen::VectorXd a = input;
    const int layers = params.layer_count();
    for (int l = 0; l < layers; ++l) {
        Eigen::VectorXd z = params.weights[l] * a + params.biases[l];
        if (l + 1 < layers) z = z.cwiseMax(0.0);
        a = std::move(z);
        if (cache) cache->activations.push_back(a);
    }
    return a;
}

std::vector<double> forward_values(const MlpParams& params, const std::vector<double>& input) {
    const Eigen::VectorXd out =
        forward(params, Eigen::Map<const Eigen::VectorXd>(input.data(), input.size()));
    return {out.data(), out.data() + out.size()};
}

void backward(const MlpParams& params, const ForwardCache& cache,
              const Eigen::VectorXd& output_grad, MlpGrads& grads) {
    const int layers = params.layer_count();
    if (static_cast<int>(cache.activations.size()) != layers + 1)
        throw std::invalid_argument("backward: cache does not match the network");
    if (output_grad.size() != params.output_size())
        throw std::invalid_argument("backward: output_grad length mismatch");

    Eigen::VectorXd delta = output_grad;
    for (int l = layers - 1; l >= 0; --l) {
        grads.weights[l].noalias() += delta * cache.activations[l].transpose();
        grads.biases[l] += delta;
        if (l > 0) {
            delta = params.weights[l].transpose() * delta;
            // rectifier gate: activations are positive exactly where the
            // pre-activation was
            delta = delta.cwiseProduct(
                (cache.activations[l].array() > 0.0).cast<double>().matrix());
        }
    }
}

AdamState AdamState::for_params(const MlpParams& params) {
    AdamState s;
    s.first_moment = MlpGrads::zeros_like(params);
    s.second_moment = MlpGrads::zeros_like(params);
    return s;
}

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, double lr) {
    if (grads.weights.size() != params.weights.size())
        throw std::invalid_argument("adam_step: gradient shape mismatch");
    if (!grads.all_finite()) throw std::runtime_error("adam_step: non-finite gradients");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (int l = 0; l < params.layer_count(); ++l) {
        auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = state.beta2 * v.array() + (1.0 - state.beta2) * g.array().square();
            theta.array() -=
                lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.epsilon);
        };
        update(params.weights[l], state.first_moment.weights[l], state.second_moment.weights[l],
               grads.weights[l]);
        update(params.biases[l], state.first_moment.biases[l], state.second_moment.biases[l],
               grads.biases[l]);
    }
}

void polyak_update(MlpParams& target, const MlpParams& main, double tau) {
    if (!target.same_shape(main)) throw std::invalid_argument("polyak_update: shape mismatch");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("polyak_update: tau must lie in [0,1]");
    for (int l = 0; l < target.layer_count(); ++l) {
        target.weights[l] = (1.0 - tau) * target.weights[l] + tau * main.weights[l];
        target.biases[l] = (1.0 - tau) * target.biases[l] + tau * main.biases[l];
    }
}

MlpGrads finite_diff_grad(const std::function<double(const MlpParams&)>& loss_fn,
                          const MlpParams& params, double epsilon) {
    MlpGrads out = MlpGrads::zeros_like(params);
    MlpParams probe = params;

    auto central = [&](double& theta, double& slot) {
        const double saved = theta;
        const double step = epsilon * std::max(1.0, std::abs(saved));
        theta = saved + step;
        const double up = loss_fn(probe);
        theta = saved - step;
        const double down = loss_fn(probe);
        theta = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw std::runtime_error("finite_diff_grad: non-finite loss value");
        slot = (up - down) / (2.0 * step);
    };

    for (int l = 0; l < params.layer_count(); ++l) {
        for (int r = 0; r < probe.weights[l].rows(); ++r)
            for (int c = 0; c < probe.weights[l].cols(); ++c)
                central(probe.weights[l](r, c), out.weights[l](r, c));
        for (int r = 0; r < probe.biases[l].size(); ++r)
            central(probe.biases[l](r), out.biases[l](r));
    }
    return out;
}

double max_rel_deviation(const MlpGrads& a, const MlpGrads& b, double floor) {
    double worst = 0.0;
    auto scan = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double denom = std::max({std::abs(x(i)), std::abs(y(i)), floor});
            worst = std::max(worst, std::abs(x(i) - y(i)) / denom);
        }
    };
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        scan(a.weights[l], b.weights[l]);
        scan(a.biases[l], b.biases[l]);
    }
    return worst;
}

}  // namespace softq
