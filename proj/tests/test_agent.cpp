#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "softq/agent.hpp"
#include "softq/env.hpp"

using namespace softq;

namespace {

AgentState small_agent(Algorithm algorithm, std::vector<int> layers, double alpha,
                       double gamma = 0.9, double tau = 0.01, int n = 1,
                       BackupScheme scheme = BackupScheme::Expectation) {
    return make_agent(algorithm, layers, 42, gamma, tau, 1e-3, n,
                      TemperatureState::fixed(alpha), scheme);
}

/// Linear one-hot network whose rows equal the given Q table.
MlpParams table_net(const QTable& q) {
    MlpParams net;
    net.layer_sizes = {q.num_states, q.num_actions};
    Eigen::MatrixXd w(q.num_actions, q.num_states);
    for (int s = 0; s < q.num_states; ++s)
        for (int a = 0; a < q.num_actions; ++a) w(a, s) = q.at(s, a);
    net.weights.push_back(w);
    net.biases.push_back(Eigen::VectorXd::Zero(q.num_actions));
    return net;
}

std::vector<double> one_hot(int n, int i) {
    std::vector<double> v(n, 0.0);
    v[i] = 1.0;
    return v;
}

Transition make_transition(std::vector<double> s, int a, double r, std::vector<double> next,
                           bool done) {
    Transition t;
    t.state = std::move(s);
    t.action = a;
    t.reward = r;
    t.next_state = std::move(next);
    t.done = done;
    return t;
}

std::vector<Transition> random_transitions(int count, int obs, int actions,
                                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Transition> out;
    for (int i = 0; i < count; ++i) {
        std::vector<double> s(obs), next(obs);
        for (double& v : s) v = normal(rng);
        for (double& v : next) v = normal(rng);
        out.push_back(make_transition(std::move(s), static_cast<int>(rng() % actions),
                                      normal(rng), std::move(next), false));
    }
    return out;
}

}  // namespace

TEST_CASE("zero networks sample uniformly") {
    AgentState agent = small_agent(Algorithm::SQN, {4, 3}, 1.0);
    for (auto* net : {&agent.q1, &agent.q2}) {
        for (auto& w : net->weights) w.setZero();
        for (auto& b : net->biases) b.setZero();
    }
    std::vector<int> counts(3, 0);
    const int draws = 10000;
    const std::vector<double> obs = one_hot(4, 1);
    for (int i = 0; i < draws; ++i) ++counts[act(agent, obs).action];
    const double p = 1.0 / 3.0;
    const double sigma = std::sqrt(p * (1.0 - p) / draws);
    for (int a = 0; a < 3; ++a)
        CHECK(std::abs(static_cast<double>(counts[a]) / draws - p) <= 3.0 * sigma);
}

TEST_CASE("near-zero temperature acts greedily") {
    AgentState agent = small_agent(Algorithm::SQN, {2, 3}, 1.0);
    agent.temperature = TemperatureState::fixed(1e-8);
    // force distinct Q values with a known argmax
    agent.q1.weights[0] << 0.1, 0.0, 0.9, 0.0, 0.4, 0.0;
    agent.q2 = agent.q1;
    const std::vector<double> obs = one_hot(2, 0);
    int greedy_hits = 0;
    for (int i = 0; i < 2000; ++i)
        if (act(agent, obs).action == 1) ++greedy_hits;
    CHECK(greedy_hits == 2000);
    CHECK(greedy_from_pair(agent.q1, agent.q2, obs) == 1);
}

TEST_CASE("sampled log-prob equals the softmax policy's log-prob exactly") {
    AgentState agent = small_agent(Algorithm::QOP, {5, 4}, 0.7);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> obs(5);
        for (double& v : obs) v = normal(rng);
        const ActResult result = act(agent, obs);
        const Eigen::VectorXd row =
            min_q_row(agent.acting_net1(), agent.acting_net2(),
                      Eigen::Map<const Eigen::VectorXd>(obs.data(), obs.size()));
        const ActionDistribution pi = softmax_policy(
            std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), 0.7);
        CHECK(result.log_prob == std::min(0.0, std::log(pi[result.action])));
        double sum = 0.0;
        for (double p : pi) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("done transitions use the raw reward under every scheme") {
    AgentState agent = small_agent(Algorithm::SQN, {3, 2}, 0.5);
    std::vector<Transition> batch{
        make_transition(one_hot(3, 0), 1, 0.75, one_hot(3, 1), true)};
    for (BackupScheme scheme :
         {BackupScheme::Expectation, BackupScheme::Lse, BackupScheme::Sampled}) {
        const std::vector<double> targets = sqn_targets(agent, batch, scheme);
        CHECK(targets[0] == 0.75);
    }
    CHECK(cf_targets(agent, batch)[0] == 0.75);
}

TEST_CASE("expectation and log-sum-exp schemes agree to rounding") {
    AgentState agent = small_agent(Algorithm::SQN, {6, 4}, 0.37);
    std::vector<Transition> batch = random_transitions(200, 6, 4, 9);
    const std::vector<double> expectation = sqn_targets(agent, batch, BackupScheme::Expectation);
    const std::vector<double> lse = sqn_targets(agent, batch, BackupScheme::Lse);
    for (std::size_t i = 0; i < batch.size(); ++i)
        CHECK(std::abs(expectation[i] - lse[i]) <= 1e-10);
}

TEST_CASE("sampled scheme is an unbiased estimate of the expectation target") {
    AgentState agent = small_agent(Algorithm::SQN, {4, 3}, 0.6);
    std::vector<Transition> batch{
        make_transition(one_hot(4, 0), 0, 0.2, one_hot(4, 2), false)};
    const double expectation = sqn_targets(agent, batch, BackupScheme::Expectation)[0];
    const int resamples = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < resamples; ++i) {
        const double t = sqn_targets(agent, batch, BackupScheme::Sampled)[0];
        sum += t;
        sum_sq += t * t;
    }
    const double mean = sum / resamples;
    const double var = std::max(sum_sq / resamples - mean * mean, 1e-12);
    const double sigma = std::sqrt(var / resamples);
    CHECK(std::abs(mean - expectation) <= 3.0 * sigma);
}

TEST_CASE("unknown backup scheme is rejected") {
    AgentState agent = small_agent(Algorithm::SQN, {3, 2}, 0.5);
    std::vector<Transition> batch{
        make_transition(one_hot(3, 0), 0, 0.1, one_hot(3, 1), false)};
    CHECK_THROWS_AS(sqn_targets(agent, batch, static_cast<BackupScheme>(99)),
                    std::invalid_argument);
    CHECK_THROWS_AS(sqn_targets(agent, {}, BackupScheme::Lse), std::invalid_argument);
}

TEST_CASE("cf targets equal the lse scheme bit for bit") {
    AgentState agent = small_agent(Algorithm::SQN_CF, {5, 3}, 0.45);
    std::vector<Transition> batch = random_transitions(300, 5, 3, 13);
    const std::vector<double> lse = sqn_targets(agent, batch, BackupScheme::Lse);
    const std::vector<double> cf = cf_targets(agent, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(cf[i] == lse[i]);
}

TEST_CASE("cf target of a single-action network is reward plus discounted Q") {
    AgentState agent = small_agent(Algorithm::SQN_CF, {3, 1}, 0.8, 0.75);
    std::vector<Transition> batch{
        make_transition(one_hot(3, 0), 0, 0.3, one_hot(3, 1), false)};
    const Eigen::VectorXd row =
        min_q_row(agent.q1_target, agent.q2_target,
                  Eigen::Map<const Eigen::VectorXd>(batch[0].next_state.data(), 3));
    const double target = cf_targets(agent, batch)[0];
    CHECK(target == doctest::Approx(0.3 + 0.75 * row(0)).epsilon(1e-15));
}

TEST_CASE("qop target of a length-1 segment collapses to the cf target bitwise") {
    AgentState agent = small_agent(Algorithm::QOP, {6, 4}, 0.37, 0.9, 0.01, 4);
    std::vector<Transition> transitions = random_transitions(1000, 6, 4, 17);
    for (Transition& t : transitions) {
        TrajectorySegment segment;
        segment.transitions = {t};
        segment.truncated = true;
        const AnchoredTarget anchored = qop_targets(agent, segment);
        const double cf = cf_targets(agent, {t})[0];
        CHECK(anchored.target == cf);
        CHECK(anchored.action == t.action);
    }
}

TEST_CASE("qop target with gamma 0 is the first reward") {
    AgentState agent = small_agent(Algorithm::QOP, {4, 3}, 0.5, 0.0, 0.01, 3);
    TrajectorySegment segment;
    segment.transitions = {make_transition(one_hot(4, 0), 1, 0.8, one_hot(4, 1), false),
                           make_transition(one_hot(4, 1), 2, -0.4, one_hot(4, 2), false)};
    segment.truncated = true;
    CHECK(qop_targets(agent, segment).target == 0.8);
}

TEST_CASE("qop target on a length-2 segment matches the hand-computed sum") {
    const double alpha = 0.5, gamma = 0.8;
    AgentState agent = small_agent(Algorithm::QOP, {3, 2}, alpha, gamma, 0.01, 2);
    // pin both target nets to a known table over 3 one-hot states
    QTable table = QTable::zeros(3, 2, alpha);
    table.at(0, 0) = 0.1; table.at(0, 1) = -0.2;
    table.at(1, 0) = 0.5; table.at(1, 1) = 0.3;
    table.at(2, 0) = -0.1; table.at(2, 1) = 0.7;
    agent.q1_target = table_net(table);
    agent.q2_target = table_net(table);

    TrajectorySegment segment;
    segment.transitions = {make_transition(one_hot(3, 0), 0, 1.0, one_hot(3, 1), false),
                           make_transition(one_hot(3, 1), 1, -0.5, one_hot(3, 2), false)};
    segment.truncated = true;

    // target = r0 + gamma*alpha*H(pi(s1)) + gamma*(r1 + gamma*alpha*lse(Q(s2)/alpha))
    const double q10 = 0.5, q11 = 0.3, q20 = -0.1, q21 = 0.7;
    const double z1 = std::exp(q10 / alpha) + std::exp(q11 / alpha);
    const double p0 = std::exp(q10 / alpha) / z1, p1 = std::exp(q11 / alpha) / z1;
    const double entropy1 = -(p0 * std::log(p0) + p1 * std::log(p1));
    const double lse2 = alpha * std::log(std::exp(q20 / alpha) + std::exp(q21 / alpha));
    const double expected = 1.0 + gamma * alpha * entropy1 + gamma * (-0.5 + gamma * lse2);

    CHECK(std::abs(qop_targets(agent, segment).target - expected) < 1e-12);
    TrajectorySegment empty;
    CHECK_THROWS_AS(qop_targets(agent, empty), std::invalid_argument);
}

TEST_CASE("targets depend on the target networks only") {
    AgentState agent = small_agent(Algorithm::SQN_CF, {5, 3}, 0.4);
    std::vector<Transition> batch = random_transitions(50, 5, 3, 23);
    const std::vector<double> before = cf_targets(agent, batch);
    for (auto& w : agent.q1.weights) w.setConstant(123.0);
    for (auto& w : agent.q2.weights) w.setConstant(-55.0);
    CHECK(cf_targets(agent, batch) == before);
    // and the expectation scheme likewise
    AgentState sqn = small_agent(Algorithm::SQN, {5, 3}, 0.4);
    const std::vector<double> sb = sqn_targets(sqn, batch, BackupScheme::Expectation);
    for (auto& w : sqn.q1.weights) w.setConstant(9.0);
    CHECK(sqn_targets(sqn, batch, BackupScheme::Expectation) == sb);
}

TEST_CASE("q loss is zero when targets equal current predictions") {
    AgentState agent = small_agent(Algorithm::SQN, {4, 3}, 0.5);
    std::vector<AnchoredTarget> batch;
    std::vector<std::vector<double>> states;
    states.reserve(8);
    for (int i = 0; i < 8; ++i) states.push_back(one_hot(4, i % 4));
    for (int i = 0; i < 8; ++i) {
        const std::vector<double> q = forward_values(agent.q1, states[i]);
        batch.push_back({&states[i], i % 3, q[i % 3]});
    }
    const LossGrad lg = q_loss_and_grad(agent.q1, batch);
    CHECK(lg.loss == 0.0);
    CHECK(lg.grads.max_abs() == 0.0);
}

TEST_CASE("single-sample linear-net gradient matches the analytic formula") {
    QTable table = QTable::zeros(3, 2, 1.0);
    table.at(1, 0) = 0.4;
    const MlpParams net = table_net(table);
    std::vector<std::vector<double>> states{one_hot(3, 1)};
    std::vector<AnchoredTarget> batch{{&states[0], 0, 1.0}};
    const LossGrad lg = q_loss_and_grad(net, batch);
    const double residual = 0.4 - 1.0;
    CHECK(lg.loss == doctest::Approx(0.5 * residual * residual).epsilon(1e-15));
    CHECK(lg.grads.weights[0](0, 1) == doctest::Approx(residual).epsilon(1e-15));
    CHECK(lg.grads.weights[0](1, 1) == 0.0);
    CHECK(lg.grads.biases[0](0) == doctest::Approx(residual).epsilon(1e-15));
}

TEST_CASE("q loss gradient matches finite differences") {
    AgentState agent = small_agent(Algorithm::SQN, {5, 8, 3}, 0.5);
    std::vector<std::vector<double>> states;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 6; ++i) {
        std::vector<double> s(5);
        for (double& v : s) v = normal(rng);
        states.push_back(std::move(s));
    }
    std::vector<AnchoredTarget> batch;
    for (int i = 0; i < 6; ++i) batch.push_back({&states[i], i % 3, normal(rng)});

    const LossGrad lg = q_loss_and_grad(agent.q1, batch);
    const auto loss = [&](const MlpParams& p) {
        double total = 0.0;
        for (const auto& item : batch) {
            const std::vector<double> q = forward_values(p, *item.state);
            const double r = q[item.action] - item.target;
            total += 0.5 * r * r;
        }
        return total / batch.size();
    };
    const MlpGrads fd = finite_diff_grad(loss, agent.q1, 1e-5);
    CHECK(max_rel_deviation(lg.grads, fd, 1e-6) < 1e-4);

    std::vector<AnchoredTarget> bad{{&states[0], 0, std::nan("")}};
    CHECK_THROWS_AS(q_loss_and_grad(agent.q1, bad), std::runtime_error);
}

TEST_CASE("train step is deterministic from identical state") {
    AgentState a = small_agent(Algorithm::QOP, {4, 6, 3}, 0.4, 0.9, 0.05, 2);
    AgentState b = a;
    auto segment = std::make_shared<TrajectorySegment>();
    segment->transitions = {make_transition(one_hot(4, 0), 1, 0.5, one_hot(4, 1), false),
                            make_transition(one_hot(4, 1), 2, -0.2, one_hot(4, 2), false)};
    segment->truncated = true;
    const std::vector<SegmentPtr> batch{segment, segment};
    const TrainMetrics ma = train_step(a, batch);
    const TrainMetrics mb = train_step(b, batch);
    CHECK(ma.loss1 == mb.loss1);
    CHECK(ma.loss2 == mb.loss2);
    CHECK(ma.mean_entropy == mb.mean_entropy);
    CHECK(ma.target_mean == mb.target_mean);
    for (int l = 0; l < a.q1.layer_count(); ++l) CHECK(a.q1.weights[l] == b.q1.weights[l]);
}

TEST_CASE("tau 0 leaves the target networks untouched") {
    AgentState agent = small_agent(Algorithm::SQN_CF, {3, 4, 2}, 0.5, 0.9, 0.0);
    const MlpParams t1 = agent.q1_target, t2 = agent.q2_target;
    auto segment = std::make_shared<TrajectorySegment>();
    segment->transitions = {make_transition(one_hot(3, 0), 0, 1.0, one_hot(3, 1), false)};
    segment->truncated = true;
    train_step(agent, {segment});
    for (int l = 0; l < t1.layer_count(); ++l) {
        CHECK(agent.q1_target.weights[l] == t1.weights[l]);
        CHECK(agent.q2_target.weights[l] == t2.weights[l]);
    }
}

TEST_CASE("repeated training on one batch drives the loss down") {
    AgentState agent = small_agent(Algorithm::SQN_CF, {4, 8, 3}, 0.3, 0.8, 0.0);
    std::vector<SegmentPtr> batch;
    std::mt19937_64 rng(37);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 16; ++i) {
        auto segment = std::make_shared<TrajectorySegment>();
        std::vector<double> s(4), next(4);
        for (double& v : s) v = normal(rng);
        for (double& v : next) v = normal(rng);
        segment->transitions = {
            make_transition(std::move(s), static_cast<int>(rng() % 3), normal(rng),
                            std::move(next), false)};
        segment->truncated = true;
        batch.push_back(std::move(segment));
    }
    const double initial = train_step(agent, batch).loss1;
    double final_loss = initial;
    for (int k = 0; k < 99; ++k) final_loss = train_step(agent, batch).loss1;
    CHECK(final_loss < initial);
}

TEST_CASE("temperature dual: fixed mode and equilibrium are identities") {
    TemperatureState fixed = TemperatureState::fixed(0.7);
    const std::vector<double> lps{-1.0, -0.5};
    CHECK(temperature_update(fixed, lps).log_alpha == fixed.log_alpha);

    TemperatureState adaptive = TemperatureState::adaptive(0.7, 1.25, 1e-2);
    // sampled entropy estimate exactly at target: mean(-log pi) == 1.25
    const std::vector<double> at_target{-1.25, -1.25, -1.25};
    CHECK(temperature_update(adaptive, at_target).log_alpha == adaptive.log_alpha);
}

TEST_CASE("temperature rises when entropy falls below target and falls above it") {
    TemperatureState temp = TemperatureState::adaptive(0.5, 1.0, 1e-2);
    const TemperatureState colder = temperature_update(temp, std::vector<double>{-0.2, -0.3});
    CHECK(colder.log_alpha > temp.log_alpha);  // entropy below target: explore more
    const TemperatureState hotter = temperature_update(temp, std::vector<double>{-1.8, -1.9});
    CHECK(hotter.log_alpha < temp.log_alpha);
    CHECK(colder.alpha() > 0.0);
}

TEST_CASE("probe gap of the zero network equals the sup norm of Q*") {
    const TabularMdp mdp = build_random_mdp(51, 3, 2, 0.8);
    AgentState agent = small_agent(Algorithm::SQN_CF, {3, 2}, 0.4, 0.8);
    for (auto* net : {&agent.q1_target, &agent.q2_target}) {
        for (auto& w : net->weights) w.setZero();
        for (auto& b : net->biases) b.setZero();
    }
    const QTable q_star = soft_value_iteration(mdp, 0.4, 1e-10, 200000);
    double sup = 0.0;
    for (double v : q_star.values) sup = std::max(sup, std::abs(v));
    const double gap = tabular_consistency_probe(agent, mdp);
    CHECK(gap == doctest::Approx(sup).epsilon(1e-9));
    CHECK(gap >= 0.0);
}

TEST_CASE("probe rejects encoding mismatches") {
    const TabularMdp mdp = build_random_mdp(51, 3, 2, 0.8);
    AgentState wrong_input = small_agent(Algorithm::SQN_CF, {4, 2}, 0.4);
    CHECK_THROWS_AS(tabular_consistency_probe(wrong_input, mdp), std::invalid_argument);
    AgentState wrong_output = small_agent(Algorithm::SQN_CF, {3, 5}, 0.4);
    CHECK_THROWS_AS(tabular_consistency_probe(wrong_output, mdp), std::invalid_argument);
}

TEST_CASE("cf targets at the exact fixed point reproduce Q* on a deterministic mdp") {
    const TabularMdp mdp = build_chain(5, 0.9);
    const double alpha = 0.3;
    const QTable q_star = soft_value_iteration(mdp, alpha, 1e-12, 1000000);
    AgentState agent = small_agent(Algorithm::SQN_CF, {5, 2}, alpha, 0.9);
    agent.q1_target = table_net(q_star);
    agent.q2_target = table_net(q_star);

    std::vector<Transition> batch;
    for (int s = 0; s < 4; ++s)  // skip the terminal right end
        for (int a = 0; a < 2; ++a) {
            int next = a == 0 ? std::max(0, s - 1) : s + 1;
            batch.push_back(make_transition(one_hot(5, s), a, mdp.reward_at(s, a),
                                            one_hot(5, next), mdp.terminal[next]));
        }
    const std::vector<double> targets = cf_targets(agent, batch);
    std::size_t i = 0;
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 2; ++a) CHECK(std::abs(targets[i++] - q_star.at(s, a)) < 1e-8);
}

TEST_CASE("neural cf sweeps reproduce tabular cf sweeps through table nets") {
    const TabularMdp mdp = build_chain(4, 0.85);
    const double alpha = 0.25;
    AgentState agent = small_agent(Algorithm::SQN_CF, {4, 2}, alpha, 0.85);

    QTable tabular = QTable::zeros(4, 2, alpha);
    QTable neural = tabular;
    for (int sweep = 0; sweep < 25; ++sweep) {
        agent.q1_target = table_net(neural);
        agent.q2_target = table_net(neural);
        // exhaustive transitions of the deterministic chain = exact backup
        QTable next_neural = neural;
        for (int s = 0; s < 4; ++s) {
            if (mdp.terminal[s]) continue;
            for (int a = 0; a < 2; ++a) {
                int next = a == 0 ? std::max(0, s - 1) : std::min(3, s + 1);
                std::vector<Transition> one{make_transition(
                    one_hot(4, s), a, mdp.reward_at(s, a), one_hot(4, next), mdp.terminal[next])};
                next_neural.at(s, a) = cf_targets(agent, one)[0];
            }
        }
        const QTable next_tabular = cf_backup(mdp, tabular);
        // compare only at non-terminal states: the neural loop never trains
        // inside absorbing states
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(std::abs(next_neural.at(s, a) - next_tabular.at(s, a)) < 1e-6);
        // monotone improvement of the backup sweeps from zero
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(next_tabular.at(s, a) >= tabular.at(s, a) - 1e-9);
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a) neural.at(s, a) = next_neural.at(s, a);
        tabular = next_tabular;
    }
}

TEST_CASE("agent construction validates its arguments") {
    CHECK_THROWS_AS(make_agent(Algorithm::QOP, {4, 2}, 1, 0.9, 0.5, 1e-3, 0,
                               TemperatureState::fixed(0.5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_agent(Algorithm::QOP, {4, 2}, 1, 1.0, 0.5, 1e-3, 1,
                               TemperatureState::fixed(0.5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_agent(Algorithm::QOP, {4, 2}, 1, 0.9, 1.5, 1e-3, 1,
                               TemperatureState::fixed(0.5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(TemperatureState::fixed(0.0), std::invalid_argument);
}
