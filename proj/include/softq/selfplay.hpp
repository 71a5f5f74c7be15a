#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <random>
#include <utility>

#include "softq/param_server.hpp"

namespace softq {

enum class MatchResult { Win, Draw, Loss };
enum class OpponentKind { Target, History };

/// Frozen target opponent plus a bounded pool of past snapshots. Rollout
/// games draw the target with probability mix_prob and otherwise a uniform
/// historical snapshot (the target again while history is empty).
class OpponentPool {
  public:
    OpponentPool(SnapshotPtr initial_target, double mix_prob, std::size_t history_bound);

    std::pair<SnapshotPtr, OpponentKind> sample(std::mt19937_64& rng) const;
    /// Retires the current target into history (evicting the oldest entry
    /// past the bound) and installs the given snapshot as the new target.
    void promote(SnapshotPtr new_target);

    SnapshotPtr target() const;
    std::size_t history_size() const;
    double mix_prob() const { return mix_prob_; }

  private:
    mutable std::mutex mu_;
    SnapshotPtr target_;
    std::deque<SnapshotPtr> history_;
    const double mix_prob_;
    const std::size_t history_bound_;
};

/// Promotion gate over greedy evaluation games against the target: promote
/// once the trailing window holds at least min_games results and the win
/// rate reaches the threshold. Draws count as non-wins.
class PromotionGate {
  public:
    PromotionGate(double threshold, int min_games, std::size_t window);

    /// Only games against the target enter the window.
    void record(MatchResult result, bool vs_target);
    bool should_promote() const;
    /// Clears the window (called on promotion).
    void reset();

    int games() const;
    int wins() const;
    double threshold() const { return threshold_; }
    int min_games() const { return min_games_; }

  private:
    const double threshold_;
    const int min_games_;
    const std::size_t window_;
    mutable std::mutex mu_;
    std::deque<MatchResult> results_;
    int wins_ = 0;
};

/// Target promotion: archive the old target, install `current`, clear the
/// gate window.
void promote_target(OpponentPool& pool, PromotionGate& gate, SnapshotPtr current);

}  // namespace softq
