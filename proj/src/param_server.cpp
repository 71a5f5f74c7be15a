#include "softq/param_server.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace softq {

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;  // FNV-1a
    }
}

void hash_params(std::uint64_t& h, const MlpParams& params) {
    for (int size : params.layer_sizes) hash_bytes(h, &size, sizeof(size));
    for (int l = 0; l < params.layer_count(); ++l) {
        hash_bytes(h, params.weights[l].data(), sizeof(double) * params.weights[l].size());
        hash_bytes(h, params.biases[l].data(), sizeof(double) * params.biases[l].size());
    }
}

}  // namespace

std::uint64_t snapshot_checksum(const PolicySnapshot& snapshot) {
    std::uint64_t h = 14695981039346656037ULL;
    hash_bytes(h, &snapshot.version, sizeof(snapshot.version));
    hash_bytes(h, &snapshot.alpha, sizeof(snapshot.alpha));
    hash_params(h, snapshot.net1);
    hash_params(h, snapshot.net2);
    return h;
}

PolicySnapshot PolicySnapshot::make(std::int64_t version, MlpParams net1, MlpParams net2,
                                    double alpha) {
    PolicySnapshot s;
    s.version = version;
    s.net1 = std::move(net1);
    s.net2 = std::move(net2);
    s.alpha = alpha;
    s.checksum = snapshot_checksum(s);
    return s;
}

bool PolicySnapshot::checksum_ok() const { return checksum == snapshot_checksum(*this); }

std::int64_t ParameterServer::publish(MlpParams net1, MlpParams net2, double alpha) {
    if (!net1.same_shape(net2)) throw std::invalid_argument("ParameterServer: shape mismatch");
    if (!(alpha > 0.0)) throw std::invalid_argument("ParameterServer: alpha must be positive");
    auto snapshot = std::make_shared<PolicySnapshot>();
    std::lock_guard lock(mu_);
    *snapshot = PolicySnapshot::make(version_ + 1, std::move(net1), std::move(net2), alpha);
    ++version_;
    latest_ = std::move(snapshot);
    return version_;
}

SnapshotPtr ParameterServer::fetch() const {
    std::lock_guard lock(mu_);
    return latest_;
}

std::int64_t ParameterServer::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

FlowController::FlowController(double target_ratio, std::size_t batch_size,
                               std::size_t min_start_segments)
    : target_(target_ratio),
      batch_(batch_size),
      min_start_(min_start_segments),
      slack_(min_start_segments + static_cast<std::size_t>(std::ceil(batch_size / target_ratio)) +
             batch_size) {
    if (!(target_ratio > 0.0)) throw std::invalid_argument("FlowController: target must be > 0");
    if (batch_size < 1) throw std::invalid_argument("FlowController: batch_size must be positive");
}

bool FlowController::consumer_ok_locked() const {
    return produced_ >= min_start_ &&
           static_cast<double>(consumed_ + batch_) <= target_ * static_cast<double>(produced_);
}

bool FlowController::producer_ok_locked() const {
    return static_cast<double>(produced_ + 1) <=
           static_cast<double>(consumed_) / target_ + static_cast<double>(slack_);
}

void FlowController::note_produced(std::size_t segments) {
    {
        std::lock_guard lock(mu_);
        produced_ += segments;
    }
    cv_.notify_all();
}

void FlowController::note_consumed(std::size_t segment_draws) {
    {
        std::lock_guard lock(mu_);
        consumed_ += segment_draws;
    }
    cv_.notify_all();
}

bool FlowController::consumer_may_proceed() const {
    std::lock_guard lock(mu_);
    return consumer_ok_locked();
}

bool FlowController::producer_may_proceed() const {
    std::lock_guard lock(mu_);
    return producer_ok_locked();
}

void FlowController::wait_consumer(const std::atomic<bool>& stop) {
    std::unique_lock lock(mu_);
    while (!stop.load() && !consumer_ok_locked())
        cv_.wait_for(lock, std::chrono::milliseconds(50));
}

void FlowController::wait_producer(const std::atomic<bool>& stop) {
    std::unique_lock lock(mu_);
    while (!stop.load() && !producer_ok_locked())
        cv_.wait_for(lock, std::chrono::milliseconds(50));
}

void FlowController::interrupt() { cv_.notify_all(); }

double FlowController::measured_ratio() const {
    std::lock_guard lock(mu_);
    if (produced_ == 0) return 0.0;
    return static_cast<double>(consumed_) / static_cast<double>(produced_);
}

std::uint64_t FlowController::produced() const {
    std::lock_guard lock(mu_);
    return produced_;
}

std::uint64_t FlowController::consumed() const {
    std::lock_guard lock(mu_);
    return consumed_;
}

}  // namespace softq
