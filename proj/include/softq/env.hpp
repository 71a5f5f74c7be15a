#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "softq/mdp.hpp"

namespace softq {

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminal = false;   // true episode end (absorbing goal, score, ...)
    bool truncated = false;  // step-limit cut; bootstrap normally
    bool done() const { return terminal || truncated; }
};

/// Single-agent environment. Instances are single-owner: one worker drives
/// an instance at a time.
class Env {
  public:
    virtual ~Env() = default;
    virtual int action_count() const = 0;
    virtual int observation_length() const = 0;
    virtual std::vector<double> reset(std::uint64_t seed) = 0;
    virtual StepResult step(int action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<Env>()>;

/// Wraps a TabularMdp as an episodic environment with one-hot observations.
/// Episodes end terminally on entering a flagged-terminal state and are
/// truncated at max_steps.
class TabularEnv final : public Env {
  public:
    TabularEnv(TabularMdp mdp, int max_steps, int start_state = 0);

    int action_count() const override { return mdp_.num_actions; }
    int observation_length() const override { return mdp_.num_states; }
    std::vector<double> reset(std::uint64_t seed) override;
    StepResult step(int action) override;

    const TabularMdp& mdp() const { return mdp_; }
    int state() const { return state_; }

  private:
    std::vector<double> encode(int s) const;

    TabularMdp mdp_;
    int max_steps_;
    int start_state_;
    int state_ = 0;
    int steps_ = 0;
    bool needs_reset_ = true;
    std::mt19937_64 rng_;
};

}  // namespace softq
