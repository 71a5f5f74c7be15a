#include "softq/workers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace softq {

void WorkerReport::fail(const std::string& message) {
    std::lock_guard lock(mu);
    if (!failed.exchange(true)) error = message;
}

std::string WorkerReport::message() {
    std::lock_guard lock(mu);
    return error;
}

EpisodeStepper::EpisodeStepper(EpisodeEnvFactory make_env, std::uint64_t seed_base)
    : make_env_(std::move(make_env)), seed_base_(seed_base) {
    act_rng_.seed(seed_base ^ 0xa02bdbf7bb3c0a7ULL);
}

void EpisodeStepper::begin_episode() {
    const std::uint64_t episode_seed = seed_base_ + episode_index_;
    env_ = make_env_(episode_seed);
    obs_ = env_->reset(episode_seed);
    episode_over_ = false;
    episode_return_ = 0.0;
    ++episode_index_;
}

TrajectorySegment EpisodeStepper::next_segment(const PolicySnapshot& snapshot,
                                               int segment_length) {
    if (segment_length < 1) throw std::invalid_argument("EpisodeStepper: segment_length >= 1");
    if (episode_over_ || !env_) begin_episode();

    TrajectorySegment segment;
    segment.transitions.reserve(segment_length);
    for (int k = 0; k < segment_length; ++k) {
        const ActResult chosen =
            act_from_pair(snapshot.net1, snapshot.net2, snapshot.alpha, obs_, act_rng_);
        StepResult result = env_->step(chosen.action);

        Transition t;
        t.state = std::move(obs_);
        t.action = chosen.action;
        t.reward = result.reward;
        t.next_state = result.observation;
        t.done = result.terminal;
        t.behavior_log_prob = chosen.log_prob;
        t.policy_version = snapshot.version;
        segment.transitions.push_back(std::move(t));

        obs_ = std::move(result.observation);
        episode_return_ += result.reward;
        if (result.done()) {
            episode_over_ = true;
            last_episode_return_ = episode_return_;
            ++episodes_finished_;
            if (episode_return_ > 0.0) ++episodes_won_;
            if (episode_return_ != 0.0) ++episodes_scored_;
            break;
        }
    }
    segment.truncated = !segment.transitions.back().done;
    return segment;
}

void rollout_worker(const EpisodeEnvFactory& make_env, ParameterServer& ps, ReplayBuffer& buffer,
                    FlowController& flow, ReuseRatioMeter& meter, const RolloutConfig& config,
                    const std::atomic<bool>& stop, std::atomic<std::uint64_t>& env_steps,
                    WorkerReport& report) {
    try {
        EpisodeStepper stepper(make_env, config.seed);
        SnapshotPtr snapshot = ps.fetch();
        while (!snapshot && !stop.load()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
            snapshot = ps.fetch();
        }
        int segments_since_refresh = 0;

        while (!stop.load()) {
            flow.wait_producer(stop);
            if (stop.load()) break;

            if (segments_since_refresh >= config.refresh_interval) {
                snapshot = ps.fetch();
                segments_since_refresh = 0;
            }
            TrajectorySegment segment = stepper.next_segment(*snapshot, config.segment_length);
            env_steps.fetch_add(segment.size());
            buffer.push(std::make_shared<const TrajectorySegment>(std::move(segment)));
            flow.note_produced(1);
            meter.record_produced(1);
            ++segments_since_refresh;
        }
    } catch (const std::exception& e) {
        report.fail(std::string("rollout worker: ") + e.what());
    }
}

void train_worker(AgentState& agent, BatchCache& cache, ParameterServer& ps,
                  const TrainWorkerConfig& config, const std::atomic<bool>& stop,
                  std::atomic<std::int64_t>& train_steps, const MetricsCallback& on_step,
                  WorkerReport& report) {
    try {
        int steps_since_publish = 0;
        while (!stop.load()) {
            auto batch = cache.take();
            if (!batch) break;  // cache shut down
            const TrainMetrics metrics = train_step(agent, *batch);
            if (!std::isfinite(metrics.loss1) || !std::isfinite(metrics.loss2))
                throw std::runtime_error("non-finite loss");
            const std::int64_t step = train_steps.fetch_add(1) + 1;
            if (++steps_since_publish >= config.publish_interval) {
                publish_agent(ps, agent);
                steps_since_publish = 0;
            }
            if (on_step) on_step(step, metrics);
        }
    } catch (const std::exception& e) {
        report.fail(std::string("train worker: ") + e.what());
    }
}

std::int64_t publish_agent(ParameterServer& ps, const AgentState& agent) {
    return ps.publish(agent.acting_net1(), agent.acting_net2(), agent.alpha());
}

EvalResult test_worker(const SnapshotPtr& snapshot, const EpisodeEnvFactory& make_env,
                       int episodes, std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("test_worker: episodes must be >= 1");
    if (!snapshot) throw std::invalid_argument("test_worker: no snapshot published yet");

    EvalResult out;
    out.episodes = episodes;
    out.version = snapshot->version;
    int wins = 0, draws = 0, losses = 0;

    for (int e = 0; e < episodes; ++e) {
        const std::uint64_t episode_seed = seed + static_cast<std::uint64_t>(e);
        std::unique_ptr<Env> env = make_env(episode_seed);
        std::vector<double> obs = env->reset(episode_seed);
        double episode_return = 0.0;
        while (true) {
            const int action = greedy_from_pair(snapshot->net1, snapshot->net2, obs);
            StepResult r = env->step(action);
            episode_return += r.reward;
            obs = std::move(r.observation);
            if (r.done()) break;
        }
        out.mean_return += episode_return / episodes;
        if (episode_return > 0.0)
            ++wins;
        else if (episode_return < 0.0)
            ++losses;
        else
            ++draws;
    }
    out.win_rate = static_cast<double>(wins) / episodes;
    out.draw_rate = static_cast<double>(draws) / episodes;
    out.loss_rate = static_cast<double>(losses) / episodes;
    return out;
}

}  // namespace softq
