#pragma once

#include <span>
#include <vector>

#include "softq/mdp.hpp"

namespace softq {

/// Probability vector over discrete actions.
using ActionDistribution = std::vector<double>;

/// State-action value table with the temperature it was computed at.
struct QTable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> values;  // [s * A + a]
    double alpha = 1.0;

    double at(int s, int a) const { return values[static_cast<std::size_t>(s) * num_actions + a]; }
    double& at(int s, int a) { return values[static_cast<std::size_t>(s) * num_actions + a]; }
    std::span<const double> row(int s) const {
        return {values.data() + static_cast<std::size_t>(s) * num_actions,
                static_cast<std::size_t>(num_actions)};
    }

    static QTable zeros(int num_states, int num_actions, double alpha);
    double sup_distance(const QTable& other) const;
};

struct TabularPolicy {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> probs;  // [s * A + a]

    double at(int s, int a) const { return probs[static_cast<std::size_t>(s) * num_actions + a]; }
    double& at(int s, int a) { return probs[static_cast<std::size_t>(s) * num_actions + a]; }
    std::span<const double> row(int s) const {
        return {probs.data() + static_cast<std::size_t>(s) * num_actions,
                static_cast<std::size_t>(num_actions)};
    }

    static TabularPolicy uniform(int num_states, int num_actions);
    void validate() const;
};

/// pi = exp(q/alpha - log Z), computed with max subtraction. Ties keep
/// identical probabilities, so lowest-index argmax matches the input row.
ActionDistribution softmax_policy(std::span<const double> q_row, double alpha);

/// alpha * log sum_i exp(q_i / alpha), max-subtracted. Lies in
/// [max(q), max(q) + alpha * log n].
double soft_value_lse(std::span<const double> q_row, double alpha);

/// -sum p log p with 0 log 0 = 0.
double policy_entropy(const ActionDistribution& dist);

int argmax_lowest(std::span<const double> row);

/// Rowwise softmax of a Q table at its own temperature.
TabularPolicy softmax_policy_table(const QTable& q);

/// Exact fixed point of the entropy-regularized Bellman backup for a fixed
/// policy. Flagged-terminal states have value 0. Uses a direct linear solve
/// over state values up to 2000 states, iteration beyond that.
QTable soft_policy_evaluation(const TabularMdp& mdp, const TabularPolicy& policy, double alpha);

/// One full sweep of Q'(s,a) = r(s,a) + gamma * E_s'[alpha log Z(s')], the
/// log-sum-exp form of the corrective-feedback backup. The expectation is
/// taken exactly from the transition tensor.
QTable cf_backup(const TabularMdp& mdp, const QTable& q);

/// Iterates cf_backup from Q = 0 until the sup-norm residual drops below
/// tol. Throws std::runtime_error when max_iters sweeps are not enough.
QTable soft_value_iteration(const TabularMdp& mdp, double alpha, double tol, int max_iters);

struct PolicyIterationTrace {
    std::vector<QTable> q_values;        // Q^{pi_k}, exact
    std::vector<TabularPolicy> policies; // pi_k
};

/// Alternates pi_k = softmax(Q_{k-1}/alpha) with exact evaluation, starting
/// from Q = 0 (so the first policy is uniform). Every step improves Q
/// elementwise.
PolicyIterationTrace soft_policy_iteration(const TabularMdp& mdp, double alpha, int iters);

/// Truncated evaluation of the defining return sum by forward dynamic
/// programming over state distributions; no sampling. Entropy bonuses
/// accrue from the first successor state onward, discounted gamma^t.
/// Truncation error is at most
/// gamma^{horizon+1} * (r_max + alpha log n) / (1 - gamma).
double brute_force_return(const TabularMdp& mdp, const TabularPolicy& policy, double alpha,
                          int horizon, int start_state, int start_action);

}  // namespace softq
