#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace softq {

/// Dense feed-forward network: rectified-linear hidden layers, identity
/// output. Parameters are value types; a published snapshot is immutable
/// by convention and training always mutates a private copy.
struct MlpParams {
    std::vector<int> layer_sizes;           // input, hidden..., output
    std::vector<Eigen::MatrixXd> weights;   // weights[l] is (out x in)
    std::vector<Eigen::VectorXd> biases;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
    std::size_t parameter_count() const;
    bool same_shape(const MlpParams& other) const;
};

/// Gradients (or moments) shaped like an MlpParams.
struct MlpGrads {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static MlpGrads zeros_like(const MlpParams& params);
    void set_zero();
    void add(const MlpGrads& other, double scale = 1.0);
    void scale(double factor);
    double max_abs() const;
    bool all_finite() const;
};

/// Per-layer activations from one forward pass; a_0 is the input and the
/// last entry is the network output.
struct ForwardCache {
    std::vector<Eigen::VectorXd> activations;
};

/// He-normal weights (variance 2 / fan_in), zero biases; deterministic in
/// the seed. Requires at least an input and an output layer.
MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& input,
                        ForwardCache* cache = nullptr);
std::vector<double> forward_values(const MlpParams& params, const std::vector<double>& input);

/// Accumulates exact reverse-mode gradients of <output, output_grad> into
/// grads. The cache must come from a forward pass of the same network.
void backward(const MlpParams& params, const ForwardCache& cache,
              const Eigen::VectorXd& output_grad, MlpGrads& grads);

struct AdamState {
    MlpGrads first_moment;
    MlpGrads second_moment;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_params(const MlpParams& params);
};

/// Bias-corrected adaptive-moment update. Rejects non-finite gradients.
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, double lr);

/// target <- (1 - tau) * target + tau * main, elementwise.
void polyak_update(MlpParams& target, const MlpParams& main, double tau);

/// Central differences (L(theta+e) - L(theta-e)) / 2e with the step scaled
/// per coordinate. The loss must be pure, deterministic, and differentiable
/// at the evaluation point (no rectifier kink within the step).
MlpGrads finite_diff_grad(const std::function<double(const MlpParams&)>& loss_fn,
                          const MlpParams& params, double epsilon);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor) over all coordinates.
double max_rel_deviation(const MlpGrads& a, const MlpGrads& b, double floor);

}  // namespace softq
