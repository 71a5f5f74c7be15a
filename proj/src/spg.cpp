#include "softq/spg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "softq/tabular.hpp"

namespace softq {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

void check_batch(const GradBatch& batch) {
    if (batch.states.empty()) throw std::invalid_argument("gradient batch is empty");
    if (batch.actions.size() != batch.states.size() || batch.targets.size() != batch.states.size())
        throw std::invalid_argument("gradient batch fields are misaligned");
    for (double t : batch.targets)
        if (!std::isfinite(t)) throw std::runtime_error("gradient batch has a non-finite target");
}

/// Smallest |pre-activation| across hidden layers of one forward pass.
double min_abs_preactivation(const MlpParams& params, const Eigen::VectorXd& input) {
    double min_abs = std::numeric_limits<double>::infinity();
    Eigen::VectorXd a = input;
    for (int l = 0; l + 1 < params.layer_count(); ++l) {
        Eigen::VectorXd z = params.weights[l] * a + params.biases[l];
        min_abs = std::min(min_abs, z.cwiseAbs().minCoeff());
        a = z.cwiseMax(0.0);
    }
    return min_abs;
}

}  // namespace

QDecomposition decompose_q(const MlpParams& params, std::span<const double> obs, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("decompose_q: alpha must be positive");
    const Eigen::VectorXd q =
        forward(params, Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size()));
    QDecomposition out;
    out.value = soft_value_lse({q.data(), static_cast<std::size_t>(q.size())}, alpha);
    out.log_pi.resize(q.size());
    for (Eigen::Index a = 0; a < q.size(); ++a) out.log_pi[a] = (q(a) - out.value) / alpha;
    return out;
}

MlpGrads sql_gradient(const MlpParams& params, const GradBatch& batch) {
    check_batch(batch);
    MlpGrads grads = MlpGrads::zeros_like(params);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    ForwardCache cache;
    Eigen::VectorXd output_grad(params.output_size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Eigen::VectorXd q = forward(params, as_vector(batch.states[i]), &cache);
        output_grad.setZero();
        output_grad(batch.actions[i]) = (q(batch.actions[i]) - batch.targets[i]) * inv_batch;
        backward(params, cache, output_grad, grads);
    }
    return grads;
}

SpgGradients spg_gradient(const MlpParams& params, const GradBatch& batch, double alpha) {
    check_batch(batch);
    if (alpha <= 0.0) throw std::invalid_argument("spg_gradient: alpha must be positive");

    SpgGradients out;
    out.value_term = MlpGrads::zeros_like(params);
    out.policy_term = MlpGrads::zeros_like(params);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    ForwardCache cache;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const int action = batch.actions[i];
        const double target = batch.targets[i];
        const Eigen::VectorXd q = forward(params, as_vector(batch.states[i]), &cache);
        if (!q.allFinite()) throw std::runtime_error("spg_gradient: non-finite forward pass");

        const double value =
            soft_value_lse({q.data(), static_cast<std::size_t>(q.size())}, alpha);
        Eigen::VectorXd pi(q.size());
        for (Eigen::Index a = 0; a < q.size(); ++a) pi(a) = std::exp((q(a) - value) / alpha);
        const double log_pi_a = (q(action) - value) / alpha;

        // dV/dq = pi;  d log pi_a / dq = (e_a - pi) / alpha
        const double value_target = target - alpha * log_pi_a;
        Eigen::VectorXd value_grad = (value - value_target) * inv_batch * pi;

        const double advantage = target - value - alpha * log_pi_a;
        Eigen::VectorXd policy_grad = advantage * inv_batch * pi;
        policy_grad(action) -= advantage * inv_batch;

        backward(params, cache, value_grad, out.value_term);
        backward(params, cache, policy_grad, out.policy_term);
    }

    out.total = out.value_term;
    out.total.add(out.policy_term);
    return out;
}

GradientReport compare_gradients(const MlpGrads& sql, const MlpGrads& spg,
                                 const std::string& batch_descriptor, double rel_tolerance) {
    GradientReport report;
    report.batch_descriptor = batch_descriptor;
    report.finite = sql.all_finite() && spg.all_finite();

    // Deviations are measured against the gradient scale, not coordinate by
    // coordinate: a near-cancelled coordinate would otherwise turn rounding
    // noise into an arbitrarily large ratio.
    const double denom = std::max(sql.max_abs(), 1e-12);
    auto scan = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::string& label) {
        double layer_abs = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i)
            layer_abs = std::max(layer_abs, std::abs(a(i) - b(i)));
        report.per_layer.emplace_back(label, layer_abs / denom);
        report.max_abs_deviation = std::max(report.max_abs_deviation, layer_abs);
    };
    for (std::size_t l = 0; l < sql.weights.size(); ++l) {
        scan(sql.weights[l], spg.weights[l], "W" + std::to_string(l));
        scan(sql.biases[l], spg.biases[l], "b" + std::to_string(l));
    }
    report.max_rel_deviation = report.max_abs_deviation / denom;
    report.pass = report.finite && report.max_rel_deviation < rel_tolerance;
    return report;
}

void draw_verification_case(std::uint64_t seed, const std::vector<int>& net_spec,
                            int batch_size, double alpha, MlpParams& params, GradBatch& batch) {
    if (batch_size < 1) throw std::invalid_argument("draw_verification_case: empty batch");
    params = mlp_init(net_spec, seed);
    std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbULL);
    std::normal_distribution<double> normal(0.0, 1.0);

    batch.states.clear();
    batch.actions.clear();
    batch.targets.clear();
    std::vector<double> state(net_spec.front());
    while (batch.states.size() < static_cast<std::size_t>(batch_size)) {
        for (double& x : state) x = normal(rng);
        // keep central differences valid: stay clear of rectifier kinks
        if (min_abs_preactivation(params, as_vector(state)) < 1e-3) continue;
        batch.states.push_back(state);

        const QDecomposition dec = decompose_q(params, state, alpha);
        ActionDistribution pi(dec.log_pi.size());
        for (std::size_t a = 0; a < pi.size(); ++a) pi[a] = std::exp(dec.log_pi[a]);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        const double u = uni(rng);
        double acc = 0.0;
        int action = static_cast<int>(pi.size()) - 1;
        for (std::size_t a = 0; a < pi.size(); ++a) {
            acc += pi[a];
            if (u < acc) {
                action = static_cast<int>(a);
                break;
            }
        }
        batch.actions.push_back(action);
        batch.targets.push_back(normal(rng));
    }
}

GradientReport verify_equivalence(std::uint64_t seed, const std::vector<int>& net_spec,
                                  int batch_size, double alpha) {
    MlpParams params;
    GradBatch batch;
    draw_verification_case(seed, net_spec, batch_size, alpha, params, batch);

    const MlpGrads sql = sql_gradient(params, batch);
    const SpgGradients spg = spg_gradient(params, batch, alpha);

    std::string descriptor = "seed=" + std::to_string(seed) + " net=";
    for (std::size_t i = 0; i < net_spec.size(); ++i)
        descriptor += (i ? "x" : "") + std::to_string(net_spec[i]);
    descriptor += " batch=" + std::to_string(batch_size) + " alpha=" + std::to_string(alpha);

    return compare_gradients(sql, spg.total, descriptor, 1e-6);
}

}  // namespace softq
