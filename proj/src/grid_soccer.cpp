#include "softq/grid_soccer.hpp"

#include <stdexcept>

namespace softq {

void GridSoccerConfig::validate() const {
    if (grid_width < 3 || grid_width % 2 == 0)
        throw std::invalid_argument("GridSoccerConfig: grid_width must be odd and >= 3");
    if (grid_height < 1) throw std::invalid_argument("GridSoccerConfig: grid_height must be positive");
    if (max_steps < 1) throw std::invalid_argument("GridSoccerConfig: max_steps must be positive");
    if (observation_length < 10)
        throw std::invalid_argument("GridSoccerConfig: observation_length must be >= 10");
}

GridSoccerEnv::GridSoccerEnv(GridSoccerConfig config) : config_(config) {
    config_.validate();
}

std::pair<std::vector<double>, std::vector<double>> GridSoccerEnv::reset(std::uint64_t seed) {
    rng_.seed(seed);
    std::uniform_int_distribution<int> row(0, config_.grid_height - 1);
    const int y = row(rng_);
    a_ = {0, y};
    b_ = {config_.grid_width - 1, y};
    ball_ = {config_.grid_width / 2, config_.grid_height / 2};
    owner_ = Owner::None;
    steps_ = 0;
    needs_reset_ = false;
    return {observe(true), observe(false)};
}

GridSoccerEnv::Pos GridSoccerEnv::intended(Pos from, int ego_action, bool is_a) const {
    Pos to = from;
    const int fwd = is_a ? 1 : -1;
    switch (static_cast<SoccerAction>(ego_action)) {
        case SoccerAction::Up: to.y -= 1; break;
        case SoccerAction::Down: to.y += 1; break;
        case SoccerAction::Forward: to.x += fwd; break;
        case SoccerAction::Backward: to.x -= fwd; break;
        case SoccerAction::Stay:
        case SoccerAction::Shoot: break;
    }
    if (to.x < 0 || to.x >= config_.grid_width || to.y < 0 || to.y >= config_.grid_height)
        return from;  // wall bounce
    return to;
}

SoccerStep GridSoccerEnv::step(int action_a, int action_b) {
    if (needs_reset_) throw std::logic_error("GridSoccerEnv: step after episode end without reset");
    if (action_a < 0 || action_a >= kSoccerActionCount || action_b < 0 ||
        action_b >= kSoccerActionCount)
        throw std::out_of_range("GridSoccerEnv: action out of range");

    SoccerStep out;

    // The holder scores from the column in front of the opponent's goal,
    // either by shooting or by dribbling forward into the goal. Shots and
    // walk-ins resolve before any tackle lands.
    const auto scores = [](int action, bool at_goal_column) {
        return at_goal_column && (action == static_cast<int>(SoccerAction::Shoot) ||
                                  action == static_cast<int>(SoccerAction::Forward));
    };
    const bool a_scores =
        owner_ == Owner::A && scores(action_a, a_.x == config_.grid_width - 1);
    const bool b_scores = owner_ == Owner::B && scores(action_b, b_.x == 0);
    if (a_scores || b_scores) {
        out.reward_a = a_scores ? 1.0 : -1.0;
        out.terminal = true;
        needs_reset_ = true;
        out.obs_a = observe(true);
        out.obs_b = observe(false);
        return out;
    }

    const Pos pa = a_, pb = b_;
    const Pos ia = intended(pa, action_a, true);
    const Pos ib = intended(pb, action_b, false);

    // Simultaneous-move resolution: contested cells and swap attempts bounce.
    if (ia == ib || (ia == pb && ib == pa)) {
        // both stay
    } else if (ia == pb) {
        if (ib == pb) {
            // B holds its cell, A bounces
        } else {
            a_ = ia;
            b_ = ib;
        }
    } else if (ib == pa) {
        if (ia == pa) {
            // A holds its cell, B bounces
        } else {
            a_ = ia;
            b_ = ib;
        }
    } else {
        a_ = ia;
        b_ = ib;
    }

    // Running into a holder who could not get away steals the ball. Both
    // checks read the pre-step owner so a swap attack cannot steal twice.
    const Owner holder = owner_;
    if (ia == pb && b_ == pb && holder == Owner::B) owner_ = Owner::A;
    if (ib == pa && a_ == pa && holder == Owner::A) owner_ = Owner::B;

    if (owner_ == Owner::A) {
        ball_ = a_;
    } else if (owner_ == Owner::B) {
        ball_ = b_;
    } else if (a_ == ball_) {
        owner_ = Owner::A;
    } else if (b_ == ball_) {
        owner_ = Owner::B;
    }

    ++steps_;
    out.truncated = steps_ >= config_.max_steps;
    needs_reset_ = out.done();
    out.obs_a = observe(true);
    out.obs_b = observe(false);
    return out;
}

std::vector<double> GridSoccerEnv::observe(bool for_a) const {
    const double sx = 1.0 / std::max(1, config_.grid_width - 1);
    const double sy = 1.0 / std::max(1, config_.grid_height - 1);
    const auto ego_x = [&](int x) { return for_a ? x : config_.grid_width - 1 - x; };
    const Pos& me = for_a ? a_ : b_;
    const Pos& opp = for_a ? b_ : a_;
    const bool mine = owner_ == (for_a ? Owner::A : Owner::B);
    const bool theirs = owner_ == (for_a ? Owner::B : Owner::A);

    std::vector<double> obs(config_.observation_length, 0.0);
    obs[0] = ego_x(me.x) * sx;
    obs[1] = me.y * sy;
    obs[2] = ego_x(opp.x) * sx;
    obs[3] = opp.y * sy;
    obs[4] = ego_x(ball_.x) * sx;
    obs[5] = ball_.y * sy;
    obs[6] = mine ? 1.0 : 0.0;
    obs[7] = theirs ? 1.0 : 0.0;
    obs[8] = owner_ == Owner::None ? 1.0 : 0.0;
    obs[9] = static_cast<double>(config_.max_steps - steps_) / config_.max_steps;
    return obs;
}

OpponentPolicy uniform_random_opponent() {
    return [](const std::vector<double>&, std::mt19937_64& rng) {
        std::uniform_int_distribution<int> pick(0, kSoccerActionCount - 1);
        return pick(rng);
    };
}

SoccerAgentEnv::SoccerAgentEnv(GridSoccerConfig config, OpponentPolicy opponent)
    : env_(config), opponent_(std::move(opponent)) {}

int SoccerAgentEnv::observation_length() const { return env_.observation_length(); }

std::vector<double> SoccerAgentEnv::reset(std::uint64_t seed) {
    opponent_rng_.seed(seed ^ 0x9e3779b97f4a7c15ULL);
    auto [obs_a, obs_b] = env_.reset(seed);
    obs_b_ = std::move(obs_b);
    return obs_a;
}

StepResult SoccerAgentEnv::step(int action) {
    const int action_b = opponent_(obs_b_, opponent_rng_);
    SoccerStep s = env_.step(action, action_b);
    obs_b_ = std::move(s.obs_b);

    StepResult out;
    out.observation = std::move(s.obs_a);
    out.reward = s.reward_a;
    out.terminal = s.terminal;
    out.truncated = s.truncated;
    return out;
}

}  // namespace softq
