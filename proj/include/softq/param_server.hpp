#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>

#include "softq/nn.hpp"

namespace softq {

/// Immutable acting-policy snapshot: the network pair that defines the
/// softmax policy plus the temperature it samples at. The checksum covers
/// every parameter, the version, and alpha, so torn reads are detectable.
struct PolicySnapshot {
    std::int64_t version = 0;
    MlpParams net1;
    MlpParams net2;
    double alpha = 1.0;
    std::uint64_t checksum = 0;

    static PolicySnapshot make(std::int64_t version, MlpParams net1, MlpParams net2, double alpha);
    bool checksum_ok() const;
};

using SnapshotPtr = std::shared_ptr<const PolicySnapshot>;

std::uint64_t snapshot_checksum(const PolicySnapshot& snapshot);

/// Versioned single-slot parameter store. Versions increase by one per
/// publish; fetch always observes a complete (snapshot, version) pair.
class ParameterServer {
  public:
    std::int64_t publish(MlpParams net1, MlpParams net2, double alpha);
    /// nullptr before the first publish.
    SnapshotPtr fetch() const;
    std::int64_t version() const;

  private:
    mutable std::mutex mu_;
    SnapshotPtr latest_;
    std::int64_t version_ = 0;
};

/// Two-sided reuse-ratio controller over cumulative flow counts. The
/// trainer never lets consumed draws exceed target * produced segments;
/// producers pause once they run more than `slack` segments ahead of
/// consumption, so the measured ratio closes on the target from both
/// sides. slack > batch_size / target keeps the pair deadlock-free.
class FlowController {
  public:
    FlowController(double target_ratio, std::size_t batch_size, std::size_t min_start_segments);

    void note_produced(std::size_t segments);
    void note_consumed(std::size_t segment_draws);

    bool consumer_may_proceed() const;
    bool producer_may_proceed() const;

    /// Block until the side may proceed or stop becomes true.
    void wait_consumer(const std::atomic<bool>& stop);
    void wait_producer(const std::atomic<bool>& stop);
    /// Wake all waiters (call after setting the stop flag).
    void interrupt();

    double measured_ratio() const;  // cumulative consumed / produced
    std::uint64_t produced() const;
    std::uint64_t consumed() const;

  private:
    bool consumer_ok_locked() const;
    bool producer_ok_locked() const;

    const double target_;
    const std::size_t batch_;
    const std::size_t min_start_;
    const std::size_t slack_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::uint64_t produced_ = 0;
    std::uint64_t consumed_ = 0;
};

}  // namespace softq
