#include "softq/selfplay.hpp"

#include <stdexcept>

namespace softq {

OpponentPool::OpponentPool(SnapshotPtr initial_target, double mix_prob, std::size_t history_bound)
    : target_(std::move(initial_target)), mix_prob_(mix_prob), history_bound_(history_bound) {
    if (!target_) throw std::invalid_argument("OpponentPool: initial target required");
    if (mix_prob_ < 0.0 || mix_prob_ > 1.0)
        throw std::invalid_argument("OpponentPool: mix_prob must lie in [0,1]");
    if (history_bound_ < 1) throw std::invalid_argument("OpponentPool: history bound must be >= 1");
}

std::pair<SnapshotPtr, OpponentKind> OpponentPool::sample(std::mt19937_64& rng) const {
    std::lock_guard lock(mu_);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (history_.empty() || uni(rng) < mix_prob_) return {target_, OpponentKind::Target};
    std::uniform_int_distribution<std::size_t> pick(0, history_.size() - 1);
    return {history_[pick(rng)], OpponentKind::History};
}

void OpponentPool::promote(SnapshotPtr new_target) {
    if (!new_target) throw std::invalid_argument("OpponentPool: null target");
    std::lock_guard lock(mu_);
    if (history_.size() == history_bound_) history_.pop_front();
    history_.push_back(std::move(target_));
    target_ = std::move(new_target);
}

SnapshotPtr OpponentPool::target() const {
    std::lock_guard lock(mu_);
    return target_;
}

std::size_t OpponentPool::history_size() const {
    std::lock_guard lock(mu_);
    return history_.size();
}

PromotionGate::PromotionGate(double threshold, int min_games, std::size_t window)
    : threshold_(threshold), min_games_(min_games), window_(window) {
    if (threshold_ < 0.0 || threshold_ > 1.0)
        throw std::invalid_argument("PromotionGate: threshold must lie in [0,1]");
    if (min_games_ < 1) throw std::invalid_argument("PromotionGate: min_games must be >= 1");
    if (window_ < static_cast<std::size_t>(min_games_))
        throw std::invalid_argument("PromotionGate: window must hold at least min_games");
}

void PromotionGate::record(MatchResult result, bool vs_target) {
    if (!vs_target) return;
    std::lock_guard lock(mu_);
    results_.push_back(result);
    if (result == MatchResult::Win) ++wins_;
    if (results_.size() > window_) {
        if (results_.front() == MatchResult::Win) --wins_;
        results_.pop_front();
    }
}

bool PromotionGate::should_promote() const {
    std::lock_guard lock(mu_);
    if (results_.size() < static_cast<std::size_t>(min_games_)) return false;
    return static_cast<double>(wins_) >= threshold_ * static_cast<double>(results_.size());
}

void PromotionGate::reset() {
    std::lock_guard lock(mu_);
    results_.clear();
    wins_ = 0;
}

int PromotionGate::games() const {
    std::lock_guard lock(mu_);
    return static_cast<int>(results_.size());
}

int PromotionGate::wins() const {
    std::lock_guard lock(mu_);
    return wins_;
}

void promote_target(OpponentPool& pool, PromotionGate& gate, SnapshotPtr current) {
    pool.promote(std::move(current));
    gate.reset();
}

}  // namespace softq
