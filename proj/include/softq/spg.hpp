#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "softq/nn.hpp"

namespace softq {

/// Q(s,.) split into the soft state value and scaled log-policy:
/// V = alpha * logsumexp(Q/alpha), log_pi = (Q - V) / alpha, so that
/// V + alpha * log_pi[a] reconstructs Q(s,a) to rounding.
struct QDecomposition {
    double value = 0.0;
    std::vector<double> log_pi;
};

QDecomposition decompose_q(const MlpParams& params, std::span<const double> obs, double alpha);

/// A batch for gradient-identity checks: states with actions drawn from
/// the network's own softmax (the on-policy condition of the identity)
/// and arbitrary constant regression targets.
struct GradBatch {
    std::vector<std::vector<double>> states;
    std::vector<int> actions;
    std::vector<double> targets;
    std::size_t size() const { return states.size(); }
};

/// Exact gradient of mean 0.5 * (Q(s,a) - target)^2 over the batch.
MlpGrads sql_gradient(const MlpParams& params, const GradBatch& batch);

struct SpgGradients {
    MlpGrads value_term;   // gradient of 0.5 * (V - (target - alpha log pi_a))^2
    MlpGrads policy_term;  // -alpha * grad log pi_a * (target - V - alpha log pi_a)
    MlpGrads total;
};

/// The soft-policy-gradient route to the same gradient: value regression
/// toward the sampled soft state-value target plus the policy-gradient
/// term with the soft advantage. Both residuals are treated as constants.
SpgGradients spg_gradient(const MlpParams& params, const GradBatch& batch, double alpha);

struct GradientReport {
    double max_abs_deviation = 0.0;
    double max_rel_deviation = 0.0;  // denominator max(|g|, 1e-12)
    std::vector<std::pair<std::string, double>> per_layer;  // ("W0", dev), ("b0", dev), ...
    std::string batch_descriptor;
    bool finite = true;
    bool pass = false;
};

GradientReport compare_gradients(const MlpGrads& sql, const MlpGrads& spg,
                                 const std::string& batch_descriptor, double rel_tolerance);

/// Deterministic (net, batch) draw for gradient checks. States are
/// resampled until every pre-activation clears the rectifier kink by a
/// margin, so central differences stay valid on the same case.
void draw_verification_case(std::uint64_t seed, const std::vector<int>& net_spec,
                            int batch_size, double alpha, MlpParams& params, GradBatch& batch);

/// Runs both gradient routes on one drawn case; passes iff the max
/// relative deviation stays below 1e-6.
GradientReport verify_equivalence(std::uint64_t seed, const std::vector<int>& net_spec,
                                  int batch_size, double alpha);

}  // namespace softq
