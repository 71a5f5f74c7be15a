#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>

#include "softq/agent.hpp"
#include "softq/cache.hpp"
#include "softq/env.hpp"
#include "softq/param_server.hpp"
#include "softq/replay.hpp"

namespace softq {

/// Builds a fresh environment for one episode; self-play wiring bakes the
/// per-episode opponent choice into the returned instance.
using EpisodeEnvFactory = std::function<std::unique_ptr<Env>(std::uint64_t episode_seed)>;

/// First error reported by any worker; the harness shuts down cleanly on it.
struct WorkerReport {
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::string error;

    void fail(const std::string& message);
    std::string message();
};

/// Walks episodes segment by segment: acts through the snapshot's softmax
/// policy, tags transitions with the snapshot version, starts a fresh
/// environment at every episode boundary. Shared by the threaded rollout
/// worker and the deterministic sequential driver.
class EpisodeStepper {
  public:
    EpisodeStepper(EpisodeEnvFactory make_env, std::uint64_t seed_base);

    /// Collects the next segment of at most segment_length transitions.
    TrajectorySegment next_segment(const PolicySnapshot& snapshot, int segment_length);

    std::uint64_t episodes_started() const { return episode_index_; }
    double last_episode_return() const { return last_episode_return_; }
    bool at_episode_boundary() const { return !env_ || episode_over_; }
    std::uint64_t episodes_finished() const { return episodes_finished_; }
    std::uint64_t episodes_won() const { return episodes_won_; }
    /// Episodes that ended with a nonzero return (either side scored).
    std::uint64_t episodes_scored() const { return episodes_scored_; }

  private:
    void begin_episode();

    EpisodeEnvFactory make_env_;
    std::uint64_t seed_base_;
    std::uint64_t episode_index_ = 0;
    std::unique_ptr<Env> env_;
    std::vector<double> obs_;
    bool episode_over_ = true;
    double episode_return_ = 0.0;
    double last_episode_return_ = 0.0;
    std::uint64_t episodes_finished_ = 0;
    std::uint64_t episodes_won_ = 0;
    std::uint64_t episodes_scored_ = 0;
    std::mt19937_64 act_rng_;
};

struct RolloutConfig {
    int segment_length = 1;
    int refresh_interval = 1;  // segments between parameter fetches
    std::uint64_t seed = 0;
};

/// Rollout loop: fetch the acting snapshot every refresh_interval segments,
/// collect a segment, push it; the flow controller paces production.
/// Environment faults are reported, not fatal to the harness.
void rollout_worker(const EpisodeEnvFactory& make_env, ParameterServer& ps, ReplayBuffer& buffer,
                    FlowController& flow, ReuseRatioMeter& meter, const RolloutConfig& config,
                    const std::atomic<bool>& stop, std::atomic<std::uint64_t>& env_steps,
                    WorkerReport& report);

struct TrainWorkerConfig {
    int publish_interval = 1;  // train steps between parameter publishes
};

using MetricsCallback = std::function<void(std::int64_t step, const TrainMetrics& metrics)>;

/// Training loop: take a staged batch, run one optimization step, publish
/// the acting networks every publish_interval steps. A non-finite loss or
/// gradient aborts through the worker report.
void train_worker(AgentState& agent, BatchCache& cache, ParameterServer& ps,
                  const TrainWorkerConfig& config, const std::atomic<bool>& stop,
                  std::atomic<std::int64_t>& train_steps, const MetricsCallback& on_step,
                  WorkerReport& report);

/// Publishes the agent's acting pair (main nets for SQN, target nets for
/// the corrective-feedback variants) at its current temperature.
std::int64_t publish_agent(ParameterServer& ps, const AgentState& agent);

struct EvalResult {
    double win_rate = 0.0;
    double draw_rate = 0.0;
    double loss_rate = 0.0;
    double mean_return = 0.0;
    std::int64_t version = 0;
    int episodes = 0;
};

/// Plays `episodes` greedy episodes of the snapshot's argmax policy and
/// reports win/draw/loss rates (sign of total episode return) plus the
/// mean return.
EvalResult test_worker(const SnapshotPtr& snapshot, const EpisodeEnvFactory& make_env,
                       int episodes, std::uint64_t seed);

}  // namespace softq
