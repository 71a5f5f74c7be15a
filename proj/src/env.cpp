#include "softq/env.hpp"

#include <stdexcept>

namespace softq {

TabularEnv::TabularEnv(TabularMdp mdp, int max_steps, int start_state)
    : mdp_(std::move(mdp)), max_steps_(max_steps), start_state_(start_state) {
    if (max_steps_ < 1) throw std::invalid_argument("TabularEnv: max_steps must be positive");
    if (start_state_ < 0 || start_state_ >= mdp_.num_states)
        throw std::invalid_argument("TabularEnv: start state out of range");
}

std::vector<double> TabularEnv::encode(int s) const {
    std::vector<double> obs(mdp_.num_states, 0.0);
    obs[s] = 1.0;
    return obs;
}

std::vector<double> TabularEnv::reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_ = start_state_;
    steps_ = 0;
    needs_reset_ = false;
    return encode(state_);
}

StepResult TabularEnv::step(int action) {
    if (needs_reset_) throw std::logic_error("TabularEnv: step after episode end without reset");
    if (action < 0 || action >= mdp_.num_actions)
        throw std::out_of_range("TabularEnv: action out of range");

    const double reward = mdp_.reward_at(state_, action);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng_);
    double acc = 0.0;
    int next = mdp_.num_states - 1;
    for (int s = 0; s < mdp_.num_states; ++s) {
        acc += mdp_.prob(state_, action, s);
        if (u < acc) {
            next = s;
            break;
        }
    }
    state_ = next;
    ++steps_;

    StepResult out;
    out.observation = encode(state_);
    out.reward = reward;
    out.terminal = mdp_.terminal[state_];
    out.truncated = !out.terminal && steps_ >= max_steps_;
    needs_reset_ = out.done();
    return out;
}

}  // namespace softq
