#include "softq/replay.hpp"

#include <stdexcept>

namespace softq {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(SegmentPtr segment) {
    if (!segment) throw std::invalid_argument("ReplayBuffer: null segment");
    segment->validate();
    std::lock_guard lock(mu_);
    if (ring_.size() == capacity_) ring_.pop_front();
    ring_.push_back(std::move(segment));
    ++total_pushed_;
}

std::optional<std::vector<SegmentPtr>> ReplayBuffer::sample(std::size_t batch_size,
                                                            std::mt19937_64& rng) {
    if (batch_size < 1) throw std::invalid_argument("ReplayBuffer: batch_size must be positive");
    std::lock_guard lock(mu_);
    if (ring_.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, ring_.size() - 1);
    std::vector<SegmentPtr> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(ring_[pick(rng)]);
    total_sampled_ += batch_size;
    return batch;
}

std::size_t ReplayBuffer::size() const {
    std::lock_guard lock(mu_);
    return ring_.size();
}

std::uint64_t ReplayBuffer::total_pushed() const {
    std::lock_guard lock(mu_);
    return total_pushed_;
}

std::uint64_t ReplayBuffer::total_sampled() const {
    std::lock_guard lock(mu_);
    return total_sampled_;
}

ReuseRatioMeter::ReuseRatioMeter(std::size_t window_length) : window_(window_length) {
    if (window_ < 1) throw std::invalid_argument("ReuseRatioMeter: window must be positive");
}

void ReuseRatioMeter::append(std::uint64_t produced, std::uint64_t consumed) {
    std::lock_guard lock(mu_);
    events_.emplace_back(produced, consumed);
    window_produced_ += produced;
    window_consumed_ += consumed;
    while (events_.size() > window_) {
        window_produced_ -= events_.front().first;
        window_consumed_ -= events_.front().second;
        events_.pop_front();
    }
}

void ReuseRatioMeter::record_produced(std::uint64_t segments) { append(segments, 0); }

void ReuseRatioMeter::record_consumed(std::uint64_t segment_draws) { append(0, segment_draws); }

std::optional<double> ReuseRatioMeter::ratio() const {
    std::lock_guard lock(mu_);
    if (events_.empty() || window_produced_ == 0) return std::nullopt;
    return static_cast<double>(window_consumed_) / static_cast<double>(window_produced_);
}

}  // namespace softq
