#include "softq/mdp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace softq {

namespace {

constexpr double kRowSumTol = 1e-12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void TabularMdp::validate() const {
    require(num_states >= 1 && num_actions >= 1, "TabularMdp: empty state or action set");
    require(gamma >= 0.0 && gamma < 1.0, "TabularMdp: gamma must lie in [0,1)");
    require(transition.size() == static_cast<std::size_t>(num_states) * num_actions * num_states,
            "TabularMdp: transition tensor has wrong size");
    require(reward.size() == static_cast<std::size_t>(num_states) * num_actions,
            "TabularMdp: reward table has wrong size");
    require(terminal.size() == static_cast<std::size_t>(num_states),
            "TabularMdp: terminal mask has wrong size");
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            double row_sum = 0.0;
            for (int next = 0; next < num_states; ++next) {
                const double p = prob(s, a, next);
                require(p >= 0.0 && p <= 1.0, "TabularMdp: probability outside [0,1] at state " +
                                                  std::to_string(s));
                row_sum += p;
            }
            require(std::abs(row_sum - 1.0) <= kRowSumTol,
                    "TabularMdp: transition row does not sum to 1 at (s=" + std::to_string(s) +
                        ", a=" + std::to_string(a) + ")");
            if (terminal[s]) {
                require(prob(s, a, s) == 1.0 && reward_at(s, a) == 0.0,
                        "TabularMdp: terminal state " + std::to_string(s) +
                            " must self-loop with zero reward");
            }
            require(std::isfinite(reward_at(s, a)), "TabularMdp: non-finite reward");
        }
    }
}

void TrajectorySegment::validate() const {
    require(!transitions.empty(), "TrajectorySegment: empty");
    for (std::size_t k = 0; k + 1 < transitions.size(); ++k) {
        require(!transitions[k].done, "TrajectorySegment: done before the final transition");
        require(transitions[k].next_state == transitions[k + 1].state,
                "TrajectorySegment: transitions do not chain at index " + std::to_string(k));
    }
    for (const Transition& t : transitions) {
        require(t.behavior_log_prob <= 0.0, "TrajectorySegment: behavior_log_prob must be <= 0");
    }
}

TabularMdp build_gridworld(int width, int height, double gamma, double slip_prob) {
    require(width >= 1 && height >= 1, "build_gridworld: dimensions must be positive");
    require(gamma >= 0.0 && gamma < 1.0, "build_gridworld: gamma must lie in [0,1)");
    require(slip_prob >= 0.0 && slip_prob < 1.0, "build_gridworld: slip_prob must lie in [0,1)");

    const int n = width * height;
    const int goal = n - 1;
    TabularMdp mdp;
    mdp.num_states = n;
    mdp.num_actions = 4;
    mdp.gamma = gamma;
    mdp.transition.assign(static_cast<std::size_t>(n) * 4 * n, 0.0);
    mdp.reward.assign(static_cast<std::size_t>(n) * 4, 0.0);
    mdp.terminal.assign(n, false);
    mdp.terminal[goal] = true;

    // Moves: 0 up, 1 down, 2 left, 3 right; off-grid moves bounce.
    auto move = [&](int s, int a) {
        int x = s % width, y = s / width;
        switch (a) {
            case 0: y = std::max(0, y - 1); break;
            case 1: y = std::min(height - 1, y + 1); break;
            case 2: x = std::max(0, x - 1); break;
            case 3: x = std::min(width - 1, x + 1); break;
        }
        return y * width + x;
    };

    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < 4; ++a) {
            if (mdp.terminal[s]) {
                mdp.prob(s, a, s) = 1.0;
                continue;
            }
            for (int exec = 0; exec < 4; ++exec) {
                const double p = (exec == a) ? 1.0 - slip_prob : slip_prob / 3.0;
                if (p == 0.0) continue;
                const int next = move(s, exec);
                mdp.prob(s, a, next) += p;
                if (next == goal) mdp.reward_at(s, a) += p;  // reward 1 on entry
            }
        }
    }
    mdp.validate();
    return mdp;
}

TabularMdp build_chain(int length, double gamma) {
    require(length >= 1, "build_chain: length must be positive");
    require(gamma >= 0.0 && gamma < 1.0, "build_chain: gamma must lie in [0,1)");

    const int goal = length - 1;
    TabularMdp mdp;
    mdp.num_states = length;
    mdp.num_actions = 2;
    mdp.gamma = gamma;
    mdp.transition.assign(static_cast<std::size_t>(length) * 2 * length, 0.0);
    mdp.reward.assign(static_cast<std::size_t>(length) * 2, 0.0);
    mdp.terminal.assign(length, false);
    mdp.terminal[goal] = true;

    for (int s = 0; s < length; ++s) {
        for (int a = 0; a < 2; ++a) {
            if (mdp.terminal[s]) {
                mdp.prob(s, a, s) = 1.0;
                continue;
            }
            const int next = (a == 0) ? std::max(0, s - 1) : std::min(goal, s + 1);
            mdp.prob(s, a, next) = 1.0;
            if (next == goal) mdp.reward_at(s, a) = 1.0;
        }
    }
    mdp.validate();
    return mdp;
}

TabularMdp build_random_mdp(std::uint64_t seed, int num_states, int num_actions, double gamma) {
    require(num_states >= 1 && num_actions >= 1, "build_random_mdp: counts must be positive");
    require(gamma >= 0.0 && gamma < 1.0, "build_random_mdp: gamma must lie in [0,1)");

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.gamma = gamma;
    mdp.transition.assign(static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0);
    mdp.reward.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
    mdp.terminal.assign(num_states, false);

    std::vector<double> row(num_states);
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            // Normalized Exp(1) draws are uniform on the simplex.
            double sum = 0.0;
            for (int next = 0; next < num_states; ++next) {
                row[next] = expo(rng);
                sum += row[next];
            }
            double acc = 0.0;
            for (int next = 0; next < num_states - 1; ++next) {
                const double p = row[next] / sum;
                mdp.prob(s, a, next) = p;
                acc += p;
            }
            mdp.prob(s, a, num_states - 1) = 1.0 - acc;  // rows sum to 1 exactly
            mdp.reward_at(s, a) = uni(rng);
        }
    }
    mdp.validate();
    return mdp;
}

}  // namespace softq
