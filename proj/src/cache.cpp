#include "softq/cache.hpp"

#include <chrono>
#include <stdexcept>

namespace softq {

BatchCache::BatchCache(ReplayBuffer& buffer, FlowController& flow, ReuseRatioMeter& meter,
                       std::size_t batch_size, std::size_t depth, std::uint64_t seed)
    : buffer_(buffer), flow_(flow), meter_(meter), batch_size_(batch_size), depth_(depth) {
    if (depth_ < 1) throw std::invalid_argument("BatchCache: depth must be >= 1");
    rng_.seed(seed);
}

BatchCache::~BatchCache() { shutdown(); }

void BatchCache::start() {
    if (worker_.joinable()) return;
    worker_ = std::thread([this] { prefetch_loop(); });
}

void BatchCache::prefetch_loop() {
    while (!stop_.load()) {
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stop_.load() || staged_.size() < depth_; });
            if (stop_.load()) break;
        }
        flow_.wait_consumer(stop_);
        if (stop_.load()) break;

        auto batch = buffer_.sample(batch_size_, rng_);
        if (!batch) {
            // not ready yet: wait for pushes rather than failing
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
            continue;
        }
        flow_.note_consumed(batch_size_);
        meter_.record_consumed(batch_size_);
        {
            std::lock_guard lock(mu_);
            staged_.push_back(std::move(*batch));
        }
        cv_.notify_all();
    }
    cv_.notify_all();
}

std::optional<std::vector<SegmentPtr>> BatchCache::take() {
    std::unique_lock lock(mu_);
    takes_.fetch_add(1);
    if (!staged_.empty()) staged_hits_.fetch_add(1);
    cv_.wait(lock, [&] { return stop_.load() || !staged_.empty(); });
    if (staged_.empty()) return std::nullopt;  // shut down and drained
    auto batch = std::move(staged_.front());
    staged_.pop_front();
    cv_.notify_all();
    return batch;
}

void BatchCache::shutdown() {
    stop_.store(true);
    flow_.interrupt();
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

}  // namespace softq
