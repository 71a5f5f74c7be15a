#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "softq/param_server.hpp"
#include "softq/replay.hpp"

namespace softq {

/// Trainer-side batch prefetcher: a background thread keeps up to `depth`
/// fully built batches staged so take() rarely waits. Consumption is
/// counted against the flow controller at sampling time, and an empty
/// buffer is waited out, never surfaced as an error.
class BatchCache {
  public:
    BatchCache(ReplayBuffer& buffer, FlowController& flow, ReuseRatioMeter& meter,
               std::size_t batch_size, std::size_t depth, std::uint64_t seed);
    ~BatchCache();

    void start();
    /// Blocks for a staged batch; nullopt once shut down and drained.
    std::optional<std::vector<SegmentPtr>> take();
    void shutdown();

    std::uint64_t staged_hits() const { return staged_hits_; }
    std::uint64_t takes() const { return takes_; }

  private:
    void prefetch_loop();

    ReplayBuffer& buffer_;
    FlowController& flow_;
    ReuseRatioMeter& meter_;
    const std::size_t batch_size_;
    const std::size_t depth_;
    std::mt19937_64 rng_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::vector<SegmentPtr>> staged_;
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> staged_hits_{0};
    std::atomic<std::uint64_t> takes_{0};
    std::thread worker_;
};

}  // namespace softq
