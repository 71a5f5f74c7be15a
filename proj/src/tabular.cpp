#include "softq/tabular.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace softq {

namespace {

void check_row(std::span<const double> q_row, double alpha, const char* who) {
    if (alpha <= 0.0) throw std::invalid_argument(std::string(who) + ": alpha must be positive");
    if (q_row.empty()) throw std::invalid_argument(std::string(who) + ": empty action row");
    for (double v : q_row)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

}  // namespace

QTable QTable::zeros(int num_states, int num_actions, double alpha) {
    QTable q;
    q.num_states = num_states;
    q.num_actions = num_actions;
    q.alpha = alpha;
    q.values.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
    return q;
}

double QTable::sup_distance(const QTable& other) const {
    if (values.size() != other.values.size())
        throw std::invalid_argument("QTable::sup_distance: shape mismatch");
    double sup = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        sup = std::max(sup, std::abs(values[i] - other.values[i]));
    return sup;
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
    TabularPolicy pi;
    pi.num_states = num_states;
    pi.num_actions = num_actions;
    pi.probs.assign(static_cast<std::size_t>(num_states) * num_actions, 1.0 / num_actions);
    return pi;
}

void TabularPolicy::validate() const {
    for (int s = 0; s < num_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < num_actions; ++a) {
            const double p = at(s, a);
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("TabularPolicy: probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("TabularPolicy: row " + std::to_string(s) +
                                        " does not sum to 1");
    }
}

ActionDistribution softmax_policy(std::span<const double> q_row, double alpha) {
    check_row(q_row, alpha, "softmax_policy");
    const double m = *std::max_element(q_row.begin(), q_row.end());
    ActionDistribution out(q_row.size());
    double z = 0.0;
    for (std::size_t i = 0; i < q_row.size(); ++i) {
        out[i] = std::exp((q_row[i] - m) / alpha);
        z += out[i];
    }
    for (double& p : out) p /= z;
    return out;
}

double soft_value_lse(std::span<const double> q_row, double alpha) {
    check_row(q_row, alpha, "soft_value_lse");
    const double m = *std::max_element(q_row.begin(), q_row.end());
    double z = 0.0;
    for (double v : q_row) z += std::exp((v - m) / alpha);
    return m + alpha * std::log(z);
}

double policy_entropy(const ActionDistribution& dist) {
    double h = 0.0;
    for (double p : dist)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

int argmax_lowest(std::span<const double> row) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(row.size()); ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

TabularPolicy softmax_policy_table(const QTable& q) {
    TabularPolicy pi;
    pi.num_states = q.num_states;
    pi.num_actions = q.num_actions;
    pi.probs.resize(q.values.size());
    for (int s = 0; s < q.num_states; ++s) {
        const ActionDistribution row = softmax_policy(q.row(s), q.alpha);
        std::copy(row.begin(), row.end(), pi.probs.begin() + static_cast<std::size_t>(s) * q.num_actions);
    }
    return pi;
}

namespace {

/// State values of a fixed policy: V = r_pi + alpha*H_pi + gamma*P_pi V,
/// with V pinned to 0 at flagged-terminal states.
Eigen::VectorXd policy_state_values(const TabularMdp& mdp, const TabularPolicy& policy,
                                    double alpha) {
    const int n = mdp.num_states;
    Eigen::VectorXd rhs(n);
    Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        if (mdp.terminal[s]) {
            rhs(s) = 0.0;
            continue;
        }
        ActionDistribution row(policy.row(s).begin(), policy.row(s).end());
        double r = 0.0;
        for (int a = 0; a < mdp.num_actions; ++a) {
            r += row[a] * mdp.reward_at(s, a);
            for (int next = 0; next < n; ++next)
                p_pi(s, next) += row[a] * mdp.prob(s, a, next);
        }
        rhs(s) = r + alpha * policy_entropy(row);
    }

    if (n <= 2000) {
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
        for (int s = 0; s < n; ++s) {
            if (mdp.terminal[s]) continue;  // identity row pins V(s) = 0
            system.row(s) -= mdp.gamma * p_pi.row(s);
        }
        return system.partialPivLu().solve(rhs);
    }

    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int iter = 0; iter < 1000000; ++iter) {
        Eigen::VectorXd next = rhs + mdp.gamma * (p_pi * v);
        for (int s = 0; s < n; ++s)
            if (mdp.terminal[s]) next(s) = 0.0;
        const double residual = (next - v).lpNorm<Eigen::Infinity>();
        v = std::move(next);
        if (residual < 1e-13) break;
    }
    return v;
}

QTable q_from_state_values(const TabularMdp& mdp, const Eigen::VectorXd& v, double alpha) {
    QTable q = QTable::zeros(mdp.num_states, mdp.num_actions, alpha);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            double boot = 0.0;
            for (int next = 0; next < mdp.num_states; ++next)
                boot += mdp.prob(s, a, next) * v(next);
            q.at(s, a) = mdp.reward_at(s, a) + mdp.gamma * boot;
        }
    return q;
}

}  // namespace

QTable soft_policy_evaluation(const TabularMdp& mdp, const TabularPolicy& policy, double alpha) {
    if (policy.num_states != mdp.num_states || policy.num_actions != mdp.num_actions)
        throw std::invalid_argument("soft_policy_evaluation: policy shape mismatch");
    if (alpha < 0.0) throw std::invalid_argument("soft_policy_evaluation: alpha must be >= 0");
    policy.validate();
    return q_from_state_values(mdp, policy_state_values(mdp, policy, alpha), alpha);
}

QTable cf_backup(const TabularMdp& mdp, const QTable& q) {
    if (q.num_states != mdp.num_states || q.num_actions != mdp.num_actions)
        throw std::invalid_argument("cf_backup: Q table shape mismatch");
    std::vector<double> v(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s)
        v[s] = mdp.terminal[s] ? 0.0 : soft_value_lse(q.row(s), q.alpha);

    QTable out = QTable::zeros(mdp.num_states, mdp.num_actions, q.alpha);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            double boot = 0.0;
            for (int next = 0; next < mdp.num_states; ++next)
                boot += mdp.prob(s, a, next) * v[next];
            out.at(s, a) = mdp.reward_at(s, a) + mdp.gamma * boot;
        }
    return out;
}

QTable soft_value_iteration(const TabularMdp& mdp, double alpha, double tol, int max_iters) {
    if (tol <= 0.0) throw std::invalid_argument("soft_value_iteration: tol must be positive");
    QTable q = QTable::zeros(mdp.num_states, mdp.num_actions, alpha);
    for (int iter = 0; iter < max_iters; ++iter) {
        QTable next = cf_backup(mdp, q);
        const double residual = next.sup_distance(q);
        q = std::move(next);
        if (residual < tol) return q;
    }
    throw std::runtime_error("soft_value_iteration: no convergence within " +
                             std::to_string(max_iters) + " sweeps");
}

PolicyIterationTrace soft_policy_iteration(const TabularMdp& mdp, double alpha, int iters) {
    if (iters < 1) throw std::invalid_argument("soft_policy_iteration: iters must be >= 1");
    PolicyIterationTrace trace;
    QTable q = QTable::zeros(mdp.num_states, mdp.num_actions, alpha);
    for (int k = 0; k < iters; ++k) {
        TabularPolicy pi = softmax_policy_table(q);
        q = soft_policy_evaluation(mdp, pi, alpha);
        trace.policies.push_back(std::move(pi));
        trace.q_values.push_back(q);
    }
    return trace;
}

double brute_force_return(const TabularMdp& mdp, const TabularPolicy& policy, double alpha,
                          int horizon, int start_state, int start_action) {
    if (horizon < 1) throw std::invalid_argument("brute_force_return: horizon must be >= 1");
    const int n = mdp.num_states;

    // Per-state one-step payout under the policy: expected reward plus the
    // entropy bonus collected on arrival.
    std::vector<double> payout(n, 0.0), entropy(n, 0.0);
    for (int s = 0; s < n; ++s) {
        if (mdp.terminal[s]) continue;
        ActionDistribution row(policy.row(s).begin(), policy.row(s).end());
        entropy[s] = policy_entropy(row);
        for (int a = 0; a < mdp.num_actions; ++a) payout[s] += row[a] * mdp.reward_at(s, a);
    }

    double total = mdp.reward_at(start_state, start_action);
    std::vector<double> dist(n, 0.0), next_dist(n);
    for (int s = 0; s < n; ++s) dist[s] = mdp.prob(start_state, start_action, s);

    double discount = 1.0;
    for (int t = 1; t <= horizon; ++t) {
        discount *= mdp.gamma;
        if (discount == 0.0) break;
        for (int s = 0; s < n; ++s) {
            if (mdp.terminal[s] || dist[s] == 0.0) continue;
            total += discount * dist[s] * (payout[s] + alpha * entropy[s]);
        }
        if (t == horizon) break;
        std::fill(next_dist.begin(), next_dist.end(), 0.0);
        for (int s = 0; s < n; ++s) {
            if (mdp.terminal[s] || dist[s] == 0.0) continue;
            for (int a = 0; a < mdp.num_actions; ++a) {
                const double pa = dist[s] * policy.at(s, a);
                if (pa == 0.0) continue;
                for (int next = 0; next < n; ++next) next_dist[next] += pa * mdp.prob(s, a, next);
            }
        }
        dist.swap(next_dist);
    }
    return total;
}

}  // namespace softq
