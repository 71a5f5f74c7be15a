#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "softq/env.hpp"
#include "softq/grid_soccer.hpp"
#include "softq/mdp.hpp"

using namespace softq;

namespace {

double row_sum(const TabularMdp& mdp, int s, int a) {
    double sum = 0.0;
    for (int next = 0; next < mdp.num_states; ++next) sum += mdp.prob(s, a, next);
    return sum;
}

}  // namespace

TEST_CASE("gridworld degenerate 1x1 is a single absorbing state") {
    const TabularMdp mdp = build_gridworld(1, 1, 0.9, 0.0);
    REQUIRE(mdp.num_states == 1);
    CHECK(mdp.terminal[0]);
    for (int a = 0; a < 4; ++a) {
        CHECK(mdp.prob(0, a, 0) == 1.0);
        CHECK(mdp.reward_at(0, a) == 0.0);
    }
}

TEST_CASE("gridworld 2x1: right from start reaches the goal with reward 1") {
    const TabularMdp mdp = build_gridworld(2, 1, 0.9, 0.0);
    REQUIRE(mdp.num_states == 2);
    CHECK(mdp.prob(0, 3, 1) == 1.0);  // action 3 = right
    CHECK(mdp.reward_at(0, 3) == 1.0);
    CHECK(mdp.terminal[1]);
    CHECK_FALSE(mdp.terminal[0]);
}

TEST_CASE("gridworld 4x4 with slip: every transition row sums to 1") {
    const TabularMdp mdp = build_gridworld(4, 4, 0.9, 0.1);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a)
            CHECK(std::abs(row_sum(mdp, s, a) - 1.0) <= 1e-12);
}

TEST_CASE("gridworld rejects bad arguments") {
    CHECK_THROWS_AS(build_gridworld(0, 3, 0.9, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_gridworld(3, -1, 0.9, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_gridworld(3, 3, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_gridworld(3, 3, -0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_gridworld(3, 3, 0.9, 1.0), std::invalid_argument);
}

TEST_CASE("random mdp: single state single action has P = 1") {
    const TabularMdp mdp = build_random_mdp(7, 1, 1, 0.5);
    CHECK(mdp.prob(0, 0, 0) == 1.0);
}

TEST_CASE("random mdp is deterministic in the seed") {
    const TabularMdp a = build_random_mdp(42, 5, 3, 0.9);
    const TabularMdp b = build_random_mdp(42, 5, 3, 0.9);
    CHECK(a.transition == b.transition);
    CHECK(a.reward == b.reward);
    const TabularMdp c = build_random_mdp(43, 5, 3, 0.9);
    CHECK(a.transition != c.transition);
}

TEST_CASE("random mdp rows sum to 1 and rewards stay in [-1,1]") {
    const TabularMdp mdp = build_random_mdp(11, 5, 3, 0.9);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            CHECK(std::abs(row_sum(mdp, s, a) - 1.0) <= 1e-12);
            CHECK(mdp.reward_at(s, a) >= -1.0);
            CHECK(mdp.reward_at(s, a) <= 1.0);
        }
    CHECK_THROWS_AS(build_random_mdp(1, 0, 2, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(build_random_mdp(1, 2, 0, 0.9), std::invalid_argument);
}

TEST_CASE("chain: right end is an absorbing goal with reward on entry") {
    const TabularMdp mdp = build_chain(4, 0.9);
    CHECK(mdp.num_actions == 2);
    CHECK(mdp.terminal[3]);
    CHECK(mdp.reward_at(2, 1) == 1.0);
    CHECK(mdp.prob(0, 0, 0) == 1.0);  // left from the left end bounces
}

TEST_CASE("tabular env: reset is deterministic and one-hot encoded") {
    TabularEnv env(build_gridworld(3, 3, 0.9, 0.1), 50);
    const auto obs1 = env.reset(9);
    const auto obs2 = env.reset(9);
    CHECK(obs1 == obs2);
    REQUIRE(static_cast<int>(obs1.size()) == env.observation_length());
    CHECK(obs1[0] == 1.0);
    double sum = 0.0;
    for (double v : obs1) sum += v;
    CHECK(sum == 1.0);
}

TEST_CASE("tabular env: forced transition ends the episode with done") {
    TabularEnv env(build_gridworld(2, 1, 0.9, 0.0), 50);
    env.reset(1);
    const StepResult r = env.step(3);
    CHECK(r.reward == 1.0);
    CHECK(r.terminal);
    CHECK(r.done());
    CHECK_THROWS_AS(env.step(0), std::logic_error);  // step after done
}

TEST_CASE("tabular env rejects out-of-range actions") {
    TabularEnv env(build_gridworld(2, 2, 0.9, 0.0), 50);
    env.reset(1);
    CHECK_THROWS_AS(env.step(4), std::out_of_range);
    CHECK_THROWS_AS(env.step(-1), std::out_of_range);
}

TEST_CASE("tabular env truncates at the step limit; truncation is not terminal") {
    TabularEnv env(build_gridworld(4, 4, 0.9, 0.0), 3);
    env.reset(1);
    env.step(0);
    env.step(0);
    const StepResult r = env.step(0);  // 3rd step, still hugging the top edge
    CHECK(r.truncated);
    CHECK_FALSE(r.terminal);
    CHECK(r.done());
}

TEST_CASE("tabular env: empirical transition frequencies match the tensor") {
    const TabularMdp mdp = build_gridworld(4, 4, 0.9, 0.1);
    const int s = 5, a = 3, samples = 100000;
    std::map<int, int> counts;
    std::mt19937_64 seeder(123);
    for (int trial = 0; trial < samples; ++trial) {
        TabularEnv probe(mdp, 2, s);
        probe.reset(seeder());
        probe.step(a);
        ++counts[probe.state()];
    }
    for (int next = 0; next < mdp.num_states; ++next) {
        const double p = mdp.prob(s, a, next);
        const double freq =
            counts.count(next) ? static_cast<double>(counts[next]) / samples : 0.0;
        const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-12) / samples);
        CHECK(std::abs(freq - p) <= 3.0 * sigma + 1e-9);
    }
}

TEST_CASE("trajectory segments validate chaining and the done-at-end rule") {
    Transition t1;
    t1.state = {1.0, 0.0};
    t1.next_state = {0.0, 1.0};
    Transition t2 = t1;
    t2.state = {0.0, 1.0};
    t2.next_state = {1.0, 0.0};

    TrajectorySegment good;
    good.transitions = {t1, t2};
    CHECK_NOTHROW(good.validate());

    TrajectorySegment broken_chain;
    Transition t3 = t2;
    t3.state = {1.0, 0.0};  // does not chain after t1
    broken_chain.transitions = {t1, t3};
    CHECK_THROWS_AS(broken_chain.validate(), std::invalid_argument);

    TrajectorySegment early_done;
    Transition t4 = t1;
    t4.done = true;
    early_done.transitions = {t4, t2};
    CHECK_THROWS_AS(early_done.validate(), std::invalid_argument);

    TrajectorySegment positive_log_prob;
    Transition t5 = t1;
    t5.behavior_log_prob = 0.5;
    positive_log_prob.transitions = {t5};
    CHECK_THROWS_AS(positive_log_prob.validate(), std::invalid_argument);
}

TEST_CASE("grid soccer config validation") {
    const GridSoccerConfig even_width{4, 3, 40, 10};
    const GridSoccerConfig flat{5, 0, 40, 10};
    const GridSoccerConfig no_steps{5, 3, 0, 10};
    const GridSoccerConfig short_obs{5, 3, 40, 9};
    const GridSoccerConfig ok{5, 3, 40, 10};
    CHECK_THROWS_AS(even_width.validate(), std::invalid_argument);
    CHECK_THROWS_AS(flat.validate(), std::invalid_argument);
    CHECK_THROWS_AS(no_steps.validate(), std::invalid_argument);
    CHECK_THROWS_AS(short_obs.validate(), std::invalid_argument);
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("grid soccer reset: ball centered, players mirrored, seeded") {
    GridSoccerEnv env({5, 3, 40, 10});
    auto [a1, b1] = env.reset(4);
    auto [a2, b2] = env.reset(4);
    CHECK(a1 == a2);
    CHECK(b1 == b2);
    REQUIRE(a1.size() == 10);
    // mirrored start: both players see the same egocentric frame
    CHECK(a1 == b1);
    CHECK(a1[4] == 0.5);  // ball at the ego-normalized center
    CHECK(a1[8] == 1.0);  // ball free
    CHECK(a1[0] == 0.0);  // own column is the home edge
    CHECK(a1[2] == 1.0);  // opponent at the far edge
}

TEST_CASE("grid soccer: both players staying runs to the step limit with no reward") {
    GridSoccerEnv env({5, 3, 8, 10});
    env.reset(2);
    SoccerStep last;
    for (int k = 0; k < 8; ++k) {
        last = env.step(static_cast<int>(SoccerAction::Stay), static_cast<int>(SoccerAction::Stay));
        CHECK(last.reward_a == 0.0);
    }
    CHECK(last.truncated);
    CHECK_FALSE(last.terminal);
    CHECK_THROWS_AS(
        env.step(static_cast<int>(SoccerAction::Stay), static_cast<int>(SoccerAction::Stay)),
        std::logic_error);
}

TEST_CASE("grid soccer: shooting from the goal column with the ball scores") {
    // 3x3: A starts (0,y), B (2,y), ball at (1,1). B steps aside while A
    // collects the ball and carries it to the goal column.
    GridSoccerEnv env({3, 3, 40, 10});
    auto [obs_a, obs_b] = env.reset(0);
    const int fwd = static_cast<int>(SoccerAction::Forward);
    const int up = static_cast<int>(SoccerAction::Up);
    const int stay = static_cast<int>(SoccerAction::Stay);
    const int shoot = static_cast<int>(SoccerAction::Shoot);

    SoccerStep s = env.step(stay, up);  // B clears the row (or bounces at the top)
    s = env.step(stay, up);
    s = env.step(fwd, stay);  // A onto the ball column
    if (s.obs_a[6] != 1.0) s = env.step(static_cast<int>(SoccerAction::Down), stay);
    if (s.obs_a[6] != 1.0) s = env.step(static_cast<int>(SoccerAction::Up), stay);
    REQUIRE(s.obs_a[6] == 1.0);  // A holds the ball
    s = env.step(fwd, stay);     // into the goal column
    REQUIRE_FALSE(s.done());
    s = env.step(shoot, stay);
    CHECK(s.terminal);
    CHECK(s.reward_a == 1.0);
}

TEST_CASE("grid soccer: defender stealing transfers possession") {
    GridSoccerEnv env({5, 3, 40, 10});
    auto [obs_a, obs_b] = env.reset(0);
    const int fwd = static_cast<int>(SoccerAction::Forward);
    const int stay = static_cast<int>(SoccerAction::Stay);
    const int up = static_cast<int>(SoccerAction::Up);
    const int down = static_cast<int>(SoccerAction::Down);

    // steer both players onto the ball row (the start row is seed-dependent)
    SoccerStep s;
    s.obs_a = obs_a;
    const int start_row = static_cast<int>(std::lround(obs_a[1] * 2.0));
    if (start_row < 1) s = env.step(down, down);
    if (start_row > 1) s = env.step(up, up);
    s = env.step(fwd, stay);
    s = env.step(fwd, stay);  // A reaches the centered ball
    REQUIRE(s.obs_a[6] == 1.0);

    // B walks into the holder until the tackle lands
    for (int k = 0; k < 4 && s.obs_a[6] == 1.0; ++k) s = env.step(stay, fwd);
    CHECK(s.obs_a[6] == 0.0);
    CHECK(s.obs_a[7] == 1.0);
    CHECK(s.obs_b[6] == 1.0);
}

TEST_CASE("grid soccer: random-vs-random is symmetric within 3 sigma") {
    GridSoccerEnv env({5, 3, 40, 10});
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> act(0, kSoccerActionCount - 1);
    const int games = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int g = 0; g < games; ++g) {
        env.reset(static_cast<std::uint64_t>(g));
        double reward = 0.0;
        while (true) {
            const SoccerStep s = env.step(act(rng), act(rng));
            if (s.done()) {
                reward = s.reward_a;
                break;
            }
        }
        sum += reward;
        sum_sq += reward * reward;
    }
    const double mean = sum / games;
    const double var = sum_sq / games - mean * mean;
    const double sigma = std::sqrt(std::max(var, 1e-12) / games);
    CHECK(std::abs(mean) <= 3.0 * sigma);
}

TEST_CASE("grid soccer trajectories are seed deterministic") {
    GridSoccerConfig cfg{5, 3, 30, 10};
    std::vector<double> trace1, trace2;
    for (auto* trace : {&trace1, &trace2}) {
        GridSoccerEnv env(cfg);
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> act(0, 5);
        env.reset(31);
        for (int k = 0; k < 30; ++k) {
            const SoccerStep s = env.step(act(rng), act(rng));
            trace->push_back(s.reward_a);
            trace->insert(trace->end(), s.obs_a.begin(), s.obs_a.end());
            if (s.done()) break;
        }
    }
    CHECK(trace1 == trace2);
}

TEST_CASE("soccer agent env adapts the two-player game to the Env interface") {
    SoccerAgentEnv env({5, 3, 20, 10}, uniform_random_opponent());
    const auto obs = env.reset(3);
    CHECK(static_cast<int>(obs.size()) == env.observation_length());
    CHECK(env.action_count() == kSoccerActionCount);
    int steps = 0;
    StepResult r;
    do {
        r = env.step(static_cast<int>(SoccerAction::Stay));
        ++steps;
    } while (!r.done() && steps < 100);
    CHECK(steps <= 20);
}

TEST_CASE("grid soccer observations padded to the configured length") {
    GridSoccerEnv env({5, 3, 40, 24});
    auto [a, b] = env.reset(1);
    REQUIRE(a.size() == 24);
    for (std::size_t i = 10; i < a.size(); ++i) CHECK(a[i] == 0.0);
}
