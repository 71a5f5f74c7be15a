#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace softq {

/// Exact finite MDP: transition tensor P[s][a][s'], reward table R[s][a],
/// discount gamma and a per-state terminal flag. Terminal states self-loop
/// with zero reward and contribute zero value to every backup.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> transition;  // [s * A * S + a * S + s']
    std::vector<double> reward;      // [s * A + a]
    double gamma = 0.0;
    std::vector<bool> terminal;

    double prob(int s, int a, int next) const {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + next];
    }
    double& prob(int s, int a, int next) {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + next];
    }
    double reward_at(int s, int a) const { return reward[static_cast<std::size_t>(s) * num_actions + a]; }
    double& reward_at(int s, int a) { return reward[static_cast<std::size_t>(s) * num_actions + a]; }

    /// Throws std::invalid_argument when rows do not sum to 1 within 1e-12,
    /// probabilities leave [0,1], gamma leaves [0,1), or a terminal state
    /// fails to self-loop with zero reward.
    void validate() const;
};

/// One step of experience, as produced by a rollout worker.
struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;  // true termination; step-limit cuts are not "done"
    double behavior_log_prob = 0.0;
    std::int64_t policy_version = 0;
};

/// Up to n consecutive transitions from one episode. `truncated` marks
/// segments cut mid-episode (n-boundary or step limit) as opposed to
/// segments ending at a true terminal transition.
struct TrajectorySegment {
    std::vector<Transition> transitions;
    bool truncated = false;

    std::size_t size() const { return transitions.size(); }
    /// Checks the chaining invariant and that only the final transition
    /// may carry done = true. Throws std::invalid_argument on violation.
    void validate() const;
};

using SegmentPtr = std::shared_ptr<const TrajectorySegment>;

/// Gridworld: w*h cells, 4 move actions, absorbing goal at the last cell
/// with reward 1 on entry, slip_prob chance of executing a random other
/// action. State index = y * width + x; start is cell 0.
TabularMdp build_gridworld(int width, int height, double gamma, double slip_prob);

/// Chain of `length` states, 2 actions (left/right); the right end is an
/// absorbing goal with reward 1 on entry.
TabularMdp build_chain(int length, double gamma);

/// Random dense MDP: transition rows drawn uniformly from the probability
/// simplex, rewards uniform in [-1, 1], no terminal states. Deterministic
/// in the seed.
TabularMdp build_random_mdp(std::uint64_t seed, int num_states, int num_actions, double gamma);

}  // namespace softq
