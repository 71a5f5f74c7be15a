#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "softq/env.hpp"

namespace softq {

/// Two-player zero-sum grid soccer. Players move on a w x h grid, pick up
/// the ball by stepping onto it, steal it by running into the holder, and
/// score by shooting from the column in front of the opponent's goal.
/// Width must be odd so the centered ball keeps the game mirror-symmetric.
struct GridSoccerConfig {
    int grid_width = 5;
    int grid_height = 3;
    int max_steps = 40;
    int observation_length = 10;  // >= 10; extra entries are zero padding

    void validate() const;
};

/// Actions are egocentric so the same network can play either side:
/// forward is +x for player A and -x for player B.
enum class SoccerAction : int { Up = 0, Down = 1, Forward = 2, Backward = 3, Stay = 4, Shoot = 5 };
inline constexpr int kSoccerActionCount = 6;

struct SoccerStep {
    std::vector<double> obs_a;
    std::vector<double> obs_b;
    double reward_a = 0.0;  // reward_b is always -reward_a
    bool terminal = false;
    bool truncated = false;
    bool done() const { return terminal || truncated; }
};

class GridSoccerEnv {
  public:
    explicit GridSoccerEnv(GridSoccerConfig config);

    int action_count() const { return kSoccerActionCount; }
    int observation_length() const { return config_.observation_length; }
    const GridSoccerConfig& config() const { return config_; }

    /// Ball at the center cell, players on a random shared row at opposite
    /// edge columns. Deterministic in the seed.
    std::pair<std::vector<double>, std::vector<double>> reset(std::uint64_t seed);
    SoccerStep step(int action_a, int action_b);

  private:
    struct Pos {
        int x = 0;
        int y = 0;
        bool operator==(const Pos&) const = default;
    };
    enum class Owner { None, A, B };

    Pos intended(Pos from, int ego_action, bool is_a) const;
    std::vector<double> observe(bool for_a) const;

    GridSoccerConfig config_;
    std::mt19937_64 rng_;
    Pos a_, b_, ball_;
    Owner owner_ = Owner::None;
    int steps_ = 0;
    bool needs_reset_ = true;
};

/// Opponent policy: egocentric observation -> ego action.
using OpponentPolicy = std::function<int(const std::vector<double>&, std::mt19937_64&)>;

OpponentPolicy uniform_random_opponent();

/// Presents grid soccer as a single-agent Env: the wrapped opponent drives
/// player B. Rewards and observations are player A's.
class SoccerAgentEnv final : public Env {
  public:
    SoccerAgentEnv(GridSoccerConfig config, OpponentPolicy opponent);

    int action_count() const override { return kSoccerActionCount; }
    int observation_length() const override;
    std::vector<double> reset(std::uint64_t seed) override;
    StepResult step(int action) override;

  private:
    GridSoccerEnv env_;
    OpponentPolicy opponent_;
    std::mt19937_64 opponent_rng_;
    std::vector<double> obs_b_;
};

}  // namespace softq
