#include "softq/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace softq {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

/// Shared formula path for the corrective-feedback one-step target; the
/// Lse scheme, cf_targets, and single-transition QOP segments must agree
/// bit for bit.
double lse_bootstrap_target(double reward, bool done, double gamma, double alpha,
                            std::span<const double> min_q_next) {
    if (done) return reward;
    return reward + gamma * soft_value_lse(min_q_next, alpha);
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TemperatureState TemperatureState::fixed(double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("TemperatureState: alpha must be positive");
    TemperatureState t;
    t.mode = AlphaMode::Fixed;
    t.log_alpha = std::log(alpha);
    return t;
}

TemperatureState TemperatureState::adaptive(double initial_alpha, double target_entropy,
                                            double alpha_lr) {
    if (initial_alpha <= 0.0) throw std::invalid_argument("TemperatureState: alpha must be positive");
    TemperatureState t;
    t.mode = AlphaMode::Adaptive;
    t.log_alpha = std::log(initial_alpha);
    t.target_entropy = target_entropy;
    t.alpha_lr = alpha_lr;
    return t;
}

TemperatureState temperature_update(TemperatureState temp,
                                    std::span<const double> batch_log_probs) {
    if (temp.mode == AlphaMode::Fixed || batch_log_probs.empty()) return temp;
    double mean_log_prob = 0.0;
    for (double lp : batch_log_probs) mean_log_prob += lp;
    mean_log_prob /= static_cast<double>(batch_log_probs.size());
    temp.log_alpha += temp.alpha_lr * temp.alpha() * (temp.target_entropy + mean_log_prob);
    temp.log_alpha = std::clamp(temp.log_alpha, std::log(1e-8), std::log(1e8));
    return temp;
}

const MlpParams& AgentState::acting_net1() const {
    return algorithm == Algorithm::SQN ? q1 : q1_target;
}

const MlpParams& AgentState::acting_net2() const {
    return algorithm == Algorithm::SQN ? q2 : q2_target;
}

AgentState make_agent(Algorithm algorithm, const std::vector<int>& layer_sizes,
                      std::uint64_t seed, double gamma, double tau, double lr, int n,
                      TemperatureState temperature, BackupScheme scheme) {
    if (n < 1) throw std::invalid_argument("make_agent: n must be >= 1");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("make_agent: gamma outside [0,1)");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("make_agent: tau outside [0,1]");

    AgentState agent;
    agent.algorithm = algorithm;
    agent.scheme = scheme;
    agent.n = n;
    agent.gamma = gamma;
    agent.tau = tau;
    agent.lr = lr;
    agent.temperature = temperature;
    agent.q1 = mlp_init(layer_sizes, seed);
    agent.q2 = mlp_init(layer_sizes, seed + 1);
    agent.q1_target = agent.q1;
    agent.q2_target = agent.q2;
    agent.opt1 = AdamState::for_params(agent.q1);
    agent.opt2 = AdamState::for_params(agent.q2);
    agent.rng.seed(seed + 2);
    return agent;
}

Eigen::VectorXd min_q_row(const MlpParams& net1, const MlpParams& net2,
                          const Eigen::VectorXd& obs) {
    return forward(net1, obs).cwiseMin(forward(net2, obs));
}

ActResult act_from_pair(const MlpParams& net1, const MlpParams& net2, double alpha,
                        std::span<const double> obs, std::mt19937_64& rng) {
    const std::vector<double> row = to_std(min_q_row(net1, net2, as_vector(obs)));
    const ActionDistribution pi = softmax_policy(row, alpha);

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    double acc = 0.0;
    int action = static_cast<int>(pi.size()) - 1;
    for (std::size_t i = 0; i < pi.size(); ++i) {
        acc += pi[i];
        if (u < acc) {
            action = static_cast<int>(i);
            break;
        }
    }
    return {action, std::min(0.0, std::log(pi[action]))};
}

int greedy_from_pair(const MlpParams& net1, const MlpParams& net2, std::span<const double> obs) {
    const std::vector<double> row = to_std(min_q_row(net1, net2, as_vector(obs)));
    return argmax_lowest(row);
}

ActResult act(AgentState& agent, std::span<const double> obs) {
    return act_from_pair(agent.acting_net1(), agent.acting_net2(), agent.alpha(), obs, agent.rng);
}

std::vector<double> sqn_targets(AgentState& agent, const std::vector<Transition>& batch,
                                BackupScheme scheme) {
    if (batch.empty()) throw std::invalid_argument("sqn_targets: empty batch");
    const double alpha = agent.alpha();
    std::vector<double> targets;
    targets.reserve(batch.size());

    for (const Transition& t : batch) {
        if (t.done) {
            targets.push_back(t.reward);
            continue;
        }
        const std::vector<double> row =
            to_std(min_q_row(agent.q1_target, agent.q2_target, as_vector(t.next_state)));
        switch (scheme) {
            case BackupScheme::Lse:
                targets.push_back(lse_bootstrap_target(t.reward, false, agent.gamma, alpha, row));
                break;
            case BackupScheme::Expectation: {
                const ActionDistribution pi = softmax_policy(row, alpha);
                double v = 0.0;
                for (std::size_t a = 0; a < pi.size(); ++a)
                    v += pi[a] * (row[a] - alpha * std::log(pi[a]));
                targets.push_back(t.reward + agent.gamma * v);
                break;
            }
            case BackupScheme::Sampled: {
                const ActionDistribution pi = softmax_policy(row, alpha);
                std::uniform_real_distribution<double> uni(0.0, 1.0);
                const double u = uni(agent.rng);
                double acc = 0.0;
                int a = static_cast<int>(pi.size()) - 1;
                for (std::size_t i = 0; i < pi.size(); ++i) {
                    acc += pi[i];
                    if (u < acc) {
                        a = static_cast<int>(i);
                        break;
                    }
                }
                targets.push_back(t.reward + agent.gamma * (row[a] - alpha * std::log(pi[a])));
                break;
            }
            default:
                throw std::invalid_argument("sqn_targets: unknown backup scheme");
        }
    }
    return targets;
}

std::vector<double> cf_targets(const AgentState& agent, const std::vector<Transition>& batch) {
    if (batch.empty()) throw std::invalid_argument("cf_targets: empty batch");
    const double alpha = agent.alpha();
    std::vector<double> targets;
    targets.reserve(batch.size());
    for (const Transition& t : batch) {
        if (t.done) {
            targets.push_back(t.reward);
            continue;
        }
        const std::vector<double> row =
            to_std(min_q_row(agent.q1_target, agent.q2_target, as_vector(t.next_state)));
        targets.push_back(lse_bootstrap_target(t.reward, false, agent.gamma, alpha, row));
    }
    return targets;
}

AnchoredTarget qop_targets(const AgentState& agent, const TrajectorySegment& segment) {
    if (segment.transitions.empty()) throw std::invalid_argument("qop_targets: empty segment");
    const std::size_t length = segment.size();
    const double alpha = agent.alpha();
    const Transition& last = segment.transitions.back();

    // Tail: the final transition's reward plus its bootstrap, on the shared
    // cf formula path so a length-1 segment reproduces cf_targets exactly.
    double tail;
    if (last.done) {
        tail = last.reward;
    } else {
        const std::vector<double> row =
            to_std(min_q_row(agent.q1_target, agent.q2_target, as_vector(last.next_state)));
        tail = lse_bootstrap_target(last.reward, false, agent.gamma, alpha, row);
    }

    double target = 0.0;
    double discount = 1.0;
    for (std::size_t k = 0; k + 1 < length; ++k) {
        target += discount * segment.transitions[k].reward;
        discount *= agent.gamma;
        const std::vector<double> row = to_std(min_q_row(
            agent.q1_target, agent.q2_target, as_vector(segment.transitions[k + 1].state)));
        target += discount * alpha * policy_entropy(softmax_policy(row, alpha));
    }
    target += discount * tail;

    return {&segment.transitions.front().state, segment.transitions.front().action, target};
}

LossGrad q_loss_and_grad(const MlpParams& params, const std::vector<AnchoredTarget>& batch) {
    if (batch.empty()) throw std::invalid_argument("q_loss_and_grad: empty batch");
    for (const AnchoredTarget& item : batch)
        if (!std::isfinite(item.target))
            throw std::runtime_error("q_loss_and_grad: non-finite target");

    LossGrad out;
    out.grads = MlpGrads::zeros_like(params);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    ForwardCache cache;
    Eigen::VectorXd output_grad(params.output_size());

    for (const AnchoredTarget& item : batch) {
        const Eigen::VectorXd q = forward(params, as_vector(*item.state), &cache);
        const double residual = q(item.action) - item.target;
        out.loss += 0.5 * residual * residual * inv_batch;
        output_grad.setZero();
        output_grad(item.action) = residual * inv_batch;
        backward(params, cache, output_grad, out.grads);
    }
    return out;
}

TrainMetrics train_step(AgentState& agent, const std::vector<SegmentPtr>& batch) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

    std::vector<AnchoredTarget> anchored;
    if (agent.algorithm == Algorithm::QOP) {
        anchored.reserve(batch.size());
        for (const SegmentPtr& seg : batch) anchored.push_back(qop_targets(agent, *seg));
    } else {
        std::vector<Transition> transitions;
        for (const SegmentPtr& seg : batch)
            transitions.insert(transitions.end(), seg->transitions.begin(),
                               seg->transitions.end());
        const std::vector<double> targets =
            agent.algorithm == Algorithm::SQN ? sqn_targets(agent, transitions, agent.scheme)
                                              : cf_targets(agent, transitions);
        // Anchor pointers must reference the segment storage, not the
        // flattened local copy.
        anchored.reserve(transitions.size());
        std::size_t idx = 0;
        for (const SegmentPtr& seg : batch)
            for (const Transition& t : seg->transitions)
                anchored.push_back({&t.state, t.action, targets[idx++]});
    }

    TrainMetrics metrics;
    metrics.alpha = agent.alpha();
    for (const AnchoredTarget& item : anchored)
        metrics.target_mean += item.target / static_cast<double>(anchored.size());

    LossGrad g1 = q_loss_and_grad(agent.q1, anchored);
    LossGrad g2 = q_loss_and_grad(agent.q2, anchored);
    adam_step(agent.q1, g1.grads, agent.opt1, agent.lr);
    adam_step(agent.q2, g2.grads, agent.opt2, agent.lr);
    metrics.loss1 = g1.loss;
    metrics.loss2 = g2.loss;

    polyak_update(agent.q1_target, agent.q1, agent.tau);
    polyak_update(agent.q2_target, agent.q2, agent.tau);

    // Acting-policy statistics at the anchor states: exact entropies for
    // reporting, sampled-action log probs for the temperature dual.
    std::vector<double> log_probs;
    log_probs.reserve(anchored.size());
    for (const AnchoredTarget& item : anchored) {
        const std::vector<double> row =
            to_std(min_q_row(agent.acting_net1(), agent.acting_net2(), as_vector(*item.state)));
        const ActionDistribution pi = softmax_policy(row, metrics.alpha);
        metrics.mean_entropy += policy_entropy(pi) / static_cast<double>(anchored.size());
        log_probs.push_back(std::log(pi[item.action]));
    }
    agent.temperature = temperature_update(agent.temperature, log_probs);
    return metrics;
}

double tabular_consistency_probe(const AgentState& agent, const TabularMdp& mdp) {
    if (agent.q1_target.input_size() != mdp.num_states)
        throw std::invalid_argument(
            "tabular_consistency_probe: network input does not match one-hot encoding");
    if (agent.q1_target.output_size() != mdp.num_actions)
        throw std::invalid_argument("tabular_consistency_probe: action count mismatch");

    const QTable q_star = soft_value_iteration(mdp, agent.alpha(), 1e-10, 200000);
    double gap = 0.0;
    Eigen::VectorXd obs = Eigen::VectorXd::Zero(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        if (mdp.terminal[s]) continue;
        obs.setZero();
        obs(s) = 1.0;
        const Eigen::VectorXd row = min_q_row(agent.q1_target, agent.q2_target, obs);
        for (int a = 0; a < mdp.num_actions; ++a)
            gap = std::max(gap, std::abs(row(a) - q_star.at(s, a)));
    }
    return gap;
}

}  // namespace softq
