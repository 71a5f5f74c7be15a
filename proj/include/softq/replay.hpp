#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "softq/mdp.hpp"

namespace softq {

/// FIFO ring of trajectory segments shared by rollout workers and the
/// trainer. All operations are linearizable; sampled segments are shared
/// immutable pointers so readers never race writers.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(SegmentPtr segment);

    /// Uniform with replacement. Empty buffer yields nullopt ("not ready").
    std::optional<std::vector<SegmentPtr>> sample(std::size_t batch_size, std::mt19937_64& rng);

    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }
    std::uint64_t total_pushed() const;
    std::uint64_t total_sampled() const;

  private:
    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::deque<SegmentPtr> ring_;
    std::uint64_t total_pushed_ = 0;
    std::uint64_t total_sampled_ = 0;
};

/// Sliding-window reuse ratio: segment draws consumed by the trainer over
/// segments produced by rollout workers, across the most recent
/// window_length recorded events.
class ReuseRatioMeter {
  public:
    explicit ReuseRatioMeter(std::size_t window_length);

    void record_produced(std::uint64_t segments);
    void record_consumed(std::uint64_t segment_draws);

    /// nullopt while the window is empty or nothing was produced in it.
    std::optional<double> ratio() const;

  private:
    void append(std::uint64_t produced, std::uint64_t consumed);

    const std::size_t window_;
    mutable std::mutex mu_;
    std::deque<std::pair<std::uint64_t, std::uint64_t>> events_;  // (produced, consumed) deltas
    std::uint64_t window_produced_ = 0;
    std::uint64_t window_consumed_ = 0;
};

}  // namespace softq
