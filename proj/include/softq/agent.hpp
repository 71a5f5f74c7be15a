#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "softq/mdp.hpp"
#include "softq/nn.hpp"
#include "softq/tabular.hpp"

namespace softq {

enum class Algorithm { SQN, SQN_CF, QOP };

/// How SQN turns the min-target-Q row at s' into a soft state value.
enum class BackupScheme { Expectation, Lse, Sampled };

enum class AlphaMode { Fixed, Adaptive };

struct TemperatureState {
    AlphaMode mode = AlphaMode::Fixed;
    double log_alpha = 0.0;
    double target_entropy = 0.0;
    double alpha_lr = 0.0;

    double alpha() const { return std::exp(log_alpha); }
    static TemperatureState fixed(double alpha);
    static TemperatureState adaptive(double initial_alpha, double target_entropy, double alpha_lr);
};

/// Gradient step on J(alpha) = E[-alpha (log pi + target_entropy)] in
/// log-alpha space; the identity for Fixed mode. Raises alpha when the
/// sampled entropy estimate falls below the target.
TemperatureState temperature_update(TemperatureState temp,
                                    std::span<const double> batch_log_probs);

/// Double soft Q-learner: two main nets regress to targets computed from
/// the elementwise minimum of two polyak-tracked target nets.
struct AgentState {
    Algorithm algorithm = Algorithm::SQN;
    BackupScheme scheme = BackupScheme::Expectation;  // SQN only
    int n = 1;  // n-step horizon (QOP); 1 is valid everywhere
    double gamma = 0.99;
    double tau = 0.005;
    double lr = 3e-4;

    MlpParams q1, q2, q1_target, q2_target;
    AdamState opt1, opt2;
    TemperatureState temperature;
    std::mt19937_64 rng;

    double alpha() const { return temperature.alpha(); }
    /// The pair that defines the acting policy: main nets for SQN, target
    /// nets for the corrective-feedback variants.
    const MlpParams& acting_net1() const;
    const MlpParams& acting_net2() const;
};

AgentState make_agent(Algorithm algorithm, const std::vector<int>& layer_sizes,
                      std::uint64_t seed, double gamma, double tau, double lr, int n,
                      TemperatureState temperature,
                      BackupScheme scheme = BackupScheme::Expectation);

struct ActResult {
    int action = 0;
    double log_prob = 0.0;
};

Eigen::VectorXd min_q_row(const MlpParams& net1, const MlpParams& net2,
                          const Eigen::VectorXd& obs);

/// Samples from softmax(min(net1, net2)(obs) / alpha) and returns the exact
/// log-probability of the sampled action.
ActResult act_from_pair(const MlpParams& net1, const MlpParams& net2, double alpha,
                        std::span<const double> obs, std::mt19937_64& rng);
int greedy_from_pair(const MlpParams& net1, const MlpParams& net2, std::span<const double> obs);

ActResult act(AgentState& agent, std::span<const double> obs);

/// Per transition: r + gamma * (1 - done) * V(s') with V from the chosen
/// scheme. Expectation and Lse agree to rounding; Sampled is an unbiased
/// one-action estimate drawn from the agent's rng.
std::vector<double> sqn_targets(AgentState& agent, const std::vector<Transition>& batch,
                                BackupScheme scheme);

/// r + gamma * (1 - done) * alpha * logsumexp(minQ_target(s')/alpha);
/// shares its formula path with the Lse scheme bit for bit.
std::vector<double> cf_targets(const AgentState& agent, const std::vector<Transition>& batch);

struct AnchoredTarget {
    const std::vector<double>* state = nullptr;
    int action = 0;
    double target = 0.0;
};

/// n-step corrective-feedback target anchored at the segment's first
/// state-action: discounted rewards, exact target-policy entropies at the
/// stored intermediate states, and a log-sum-exp bootstrap at the end
/// unless the segment finished terminally. Collapses bitwise to cf_targets
/// at length 1.
AnchoredTarget qop_targets(const AgentState& agent, const TrajectorySegment& segment);

struct LossGrad {
    double loss = 0.0;
    MlpGrads grads;
};

/// Mean over the batch of 0.5 * (Q(s,a) - target)^2; targets are constants
/// and gradients are exact reverse-mode.
LossGrad q_loss_and_grad(const MlpParams& params, const std::vector<AnchoredTarget>& batch);

struct TrainMetrics {
    double loss1 = 0.0;
    double loss2 = 0.0;
    double mean_entropy = 0.0;
    double alpha = 0.0;  // temperature used for this step's targets
    double target_mean = 0.0;
};

/// One optimization step: targets once from the target nets, both main
/// nets updated toward them, polyak on both target nets, then the
/// temperature when adaptive.
TrainMetrics train_step(AgentState& agent, const std::vector<SegmentPtr>& batch);

/// Sup-norm gap between the agent's min-target-Q on one-hot states and the
/// exact soft fixed point at the agent's temperature. Flagged-terminal
/// states are excluded: episodes end before the agent ever acts there.
double tabular_consistency_probe(const AgentState& agent, const TabularMdp& mdp);

}  // namespace softq
