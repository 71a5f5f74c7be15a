#include "softq/driver.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <thread>

#include "softq/checkpoint.hpp"
#include "softq/grid_soccer.hpp"
#include "softq/metrics.hpp"
#include "softq/selfplay.hpp"
#include "softq/workers.hpp"

namespace softq {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::atomic<bool> g_interrupted{false};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b * 0x9e3779b97f4a7c15ULL);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

struct EnvSetup {
    int obs_length = 0;
    int action_count = 0;
    bool two_player = false;
    std::optional<TabularMdp> mdp;
    GridSoccerConfig soccer;
};

EnvSetup make_env_setup(const ExperimentConfig& c) {
    EnvSetup setup;
    switch (c.env) {
        case EnvKind::Gridworld:
            setup.mdp = build_gridworld(c.width, c.height, c.gamma, c.slip_prob);
            break;
        case EnvKind::Chain:
            setup.mdp = build_chain(c.chain_length, c.gamma);
            break;
        case EnvKind::RandomMdp:
            setup.mdp = build_random_mdp(mix_seed(c.seed, 0x6d6470ULL), c.mdp_states,
                                         c.mdp_actions, c.gamma);
            break;
        case EnvKind::GridSoccer:
            setup.soccer = {c.soccer_width, c.soccer_height, c.soccer_max_steps,
                            c.soccer_obs_length};
            setup.soccer.validate();
            setup.two_player = true;
            setup.obs_length = setup.soccer.observation_length;
            setup.action_count = kSoccerActionCount;
            return setup;
    }
    setup.obs_length = setup.mdp->num_states;
    setup.action_count = setup.mdp->num_actions;
    return setup;
}

OpponentPolicy softmax_opponent(SnapshotPtr snapshot) {
    return [snapshot = std::move(snapshot)](const std::vector<double>& obs, std::mt19937_64& rng) {
        return act_from_pair(snapshot->net1, snapshot->net2, snapshot->alpha, obs, rng).action;
    };
}

OpponentPolicy greedy_opponent(SnapshotPtr snapshot) {
    return [snapshot = std::move(snapshot)](const std::vector<double>& obs, std::mt19937_64&) {
        return greedy_from_pair(snapshot->net1, snapshot->net2, obs);
    };
}

/// Rollout environments; for soccer, the opponent is drawn per episode.
EpisodeEnvFactory rollout_env_factory(const EnvSetup& setup, const ExperimentConfig& config,
                                      const std::shared_ptr<OpponentPool>& pool) {
    if (!setup.two_player) {
        const TabularMdp mdp = *setup.mdp;
        const int max_steps = config.max_episode_steps;
        return [mdp, max_steps](std::uint64_t) { return std::make_unique<TabularEnv>(mdp, max_steps); };
    }
    const GridSoccerConfig soccer = setup.soccer;
    if (!pool)
        return [soccer](std::uint64_t) {
            return std::make_unique<SoccerAgentEnv>(soccer, uniform_random_opponent());
        };
    return [soccer, pool](std::uint64_t episode_seed) {
        std::mt19937_64 rng(mix_seed(episode_seed, 0x6f70706fULL));
        auto [snapshot, kind] = pool->sample(rng);
        return std::make_unique<SoccerAgentEnv>(soccer, softmax_opponent(std::move(snapshot)));
    };
}

EpisodeEnvFactory eval_vs_random_factory(const EnvSetup& setup, const ExperimentConfig& config) {
    if (!setup.two_player) {
        const TabularMdp mdp = *setup.mdp;
        const int max_steps = config.max_episode_steps;
        return [mdp, max_steps](std::uint64_t) { return std::make_unique<TabularEnv>(mdp, max_steps); };
    }
    const GridSoccerConfig soccer = setup.soccer;
    return [soccer](std::uint64_t) {
        return std::make_unique<SoccerAgentEnv>(soccer, uniform_random_opponent());
    };
}

EpisodeEnvFactory gate_env_factory(const EnvSetup& setup, SnapshotPtr target) {
    const GridSoccerConfig soccer = setup.soccer;
    return [soccer, target = std::move(target)](std::uint64_t) {
        return std::make_unique<SoccerAgentEnv>(soccer, greedy_opponent(target));
    };
}

AgentState build_agent(const ExperimentConfig& config, const EnvSetup& setup) {
    std::vector<int> layers;
    layers.push_back(setup.obs_length);
    for (int h : config.hidden_sizes) layers.push_back(h);
    layers.push_back(setup.action_count);

    TemperatureState temperature =
        config.alpha_mode == AlphaMode::Fixed
            ? TemperatureState::fixed(config.alpha)
            : TemperatureState::adaptive(
                  config.alpha,
                  config.target_entropy_factor * std::log(static_cast<double>(setup.action_count)),
                  config.alpha_lr);
    return make_agent(config.algorithm, layers, config.seed, config.gamma, config.tau, config.lr,
                      config.n, temperature, config.backup_scheme);
}

double probe_gap_from_nets(const MlpParams& net1, const MlpParams& net2, const TabularMdp& mdp,
                           double alpha) {
    const QTable q_star = soft_value_iteration(mdp, alpha, 1e-10, 200000);
    double gap = 0.0;
    Eigen::VectorXd obs = Eigen::VectorXd::Zero(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        if (mdp.terminal[s]) continue;
        obs.setZero();
        obs(s) = 1.0;
        const Eigen::VectorXd row = min_q_row(net1, net2, obs);
        for (int a = 0; a < mdp.num_actions; ++a)
            gap = std::max(gap, std::abs(row(a) - q_star.at(s, a)));
    }
    return gap;
}

struct RunState {
    ExperimentConfig config;
    RunOptions options;
    EnvSetup setup;
    std::shared_ptr<OpponentPool> pool;
    std::unique_ptr<PromotionGate> gate;
    std::unique_ptr<JsonlWriter> metrics;
    Clock::time_point t0;
    bool deterministic = false;

    std::int64_t eval_round = 0;
    double pending_win_rate = -1.0;
    double pending_gap = -1.0;
    bool have_pending_eval = false;

    RunOutcome outcome;

    double wall_time() const {
        if (deterministic) return 0.0;
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }
};

void write_metrics_line(RunState& rs, std::int64_t step, std::int64_t env_steps,
                        const TrainMetrics& m, const ReuseRatioMeter& meter,
                        std::int64_t ps_version) {
    nlohmann::ordered_json line;
    line["step"] = step;
    line["env_steps"] = env_steps;
    line["wall_time"] = rs.wall_time();
    line["loss1"] = m.loss1;
    line["loss2"] = m.loss2;
    line["alpha"] = m.alpha;
    line["entropy"] = m.mean_entropy;
    line["target_mean"] = m.target_mean;
    const auto ratio = meter.ratio();
    if (ratio)
        line["reuse_ratio"] = *ratio;
    else
        line["reuse_ratio"] = nullptr;
    line["ps_version"] = ps_version;
    if (rs.have_pending_eval) {
        if (rs.pending_win_rate >= 0.0) line["win_rate"] = rs.pending_win_rate;
        if (rs.pending_gap >= 0.0) line["tabular_gap"] = rs.pending_gap;
        rs.have_pending_eval = false;
    }
    rs.metrics->write(line);
}

/// Evaluates the latest published snapshot (and, for self-play runs, plays
/// the greedy gate games against the target, promoting when the gate
/// clears). Returns true when an early-stop threshold was met.
bool run_eval_round(RunState& rs, ParameterServer& ps, const AgentState* agent,
                    std::int64_t env_steps) {
    const std::uint64_t round = static_cast<std::uint64_t>(rs.eval_round++);
    const SnapshotPtr snapshot = ps.fetch();
    bool threshold_hit = false;

    if (rs.setup.two_player) {
        const EvalResult res =
            test_worker(snapshot, eval_vs_random_factory(rs.setup, rs.config),
                        rs.config.eval_episodes, mix_seed(rs.config.seed, 0xe7a1 + round * 2));
        rs.pending_win_rate = res.win_rate;
        rs.have_pending_eval = true;
        rs.outcome.final_win_rate = res.win_rate;
        rs.outcome.best_win_rate = std::max(rs.outcome.best_win_rate, res.win_rate);
        if (rs.options.stop_win_rate >= 0.0 && res.win_rate >= rs.options.stop_win_rate)
            threshold_hit = true;

        if (rs.pool) {
            const EvalResult gate_res =
                test_worker(snapshot, gate_env_factory(rs.setup, rs.pool->target()),
                            rs.config.gate_games, mix_seed(rs.config.seed, 0x9a7e + round * 2));
            const int wins = static_cast<int>(std::lround(gate_res.win_rate * gate_res.episodes));
            const int draws = static_cast<int>(std::lround(gate_res.draw_rate * gate_res.episodes));
            const int losses = gate_res.episodes - wins - draws;
            for (int i = 0; i < wins; ++i) rs.gate->record(MatchResult::Win, true);
            for (int i = 0; i < draws; ++i) rs.gate->record(MatchResult::Draw, true);
            for (int i = 0; i < losses; ++i) rs.gate->record(MatchResult::Loss, true);
            if (rs.gate->should_promote()) promote_target(*rs.pool, *rs.gate, snapshot);
        }
    } else {
        double gap;
        if (agent) {
            gap = tabular_consistency_probe(*agent, *rs.setup.mdp);
        } else {
            gap = probe_gap_from_nets(snapshot->net1, snapshot->net2, *rs.setup.mdp,
                                      snapshot->alpha);
        }
        rs.pending_gap = gap;
        rs.have_pending_eval = true;
        rs.outcome.final_tabular_gap = gap;
        if (rs.options.stop_tabular_gap >= 0.0 && gap <= rs.options.stop_tabular_gap)
            threshold_hit = true;
    }

    if (threshold_hit && !rs.outcome.reached_threshold) {
        rs.outcome.reached_threshold = true;
        rs.outcome.env_steps_to_threshold = env_steps;
        rs.outcome.train_steps_to_threshold = rs.outcome.train_steps;
    }
    return threshold_hit;
}

bool stop_requested(const RunState& rs) {
    if (g_interrupted.load()) return true;
    if (!rs.options.stop_file.empty() && fs::exists(rs.options.stop_file)) return true;
    return false;
}

void run_sequential(RunState& rs, AgentState& agent, ParameterServer& ps) {
    const ExperimentConfig& config = rs.config;
    ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
    FlowController flow(config.reuse_ratio_target, static_cast<std::size_t>(config.batch_size),
                        static_cast<std::size_t>(config.warmup_segments));
    ReuseRatioMeter meter(static_cast<std::size_t>(config.meter_window));
    const std::atomic<bool> never_stop{false};

    EpisodeStepper stepper(rollout_env_factory(rs.setup, config, rs.pool),
                           mix_seed(config.seed, 0x6e76ULL));
    std::mt19937_64 train_rng(mix_seed(config.seed, 0x7472ULL));

    SnapshotPtr snapshot = ps.fetch();
    int segments_since_refresh = 0;
    int since_publish = 0;
    std::int64_t env_steps = 0;
    std::int64_t next_eval = config.eval_interval;
    std::int64_t segments = 0;

    while (env_steps < config.total_steps) {
        if ((segments & 63) == 0 && stop_requested(rs)) break;

        if (segments_since_refresh >= config.refresh_interval) {
            snapshot = ps.fetch();
            segments_since_refresh = 0;
        }
        TrajectorySegment segment = stepper.next_segment(*snapshot, config.n);
        env_steps += static_cast<std::int64_t>(segment.size());
        buffer.push(std::make_shared<const TrajectorySegment>(std::move(segment)));
        flow.note_produced(1);
        meter.record_produced(1);
        ++segments_since_refresh;
        ++segments;

        while (flow.consumer_may_proceed()) {
            auto batch = buffer.sample(static_cast<std::size_t>(config.batch_size), train_rng);
            flow.note_consumed(static_cast<std::size_t>(config.batch_size));
            meter.record_consumed(static_cast<std::size_t>(config.batch_size));
            const TrainMetrics m = train_step(agent, *batch);
            if (!std::isfinite(m.loss1) || !std::isfinite(m.loss2))
                throw std::runtime_error("non-finite loss at train step " +
                                         std::to_string(rs.outcome.train_steps + 1));
            ++rs.outcome.train_steps;
            if (++since_publish >= config.publish_interval) {
                publish_agent(ps, agent);
                since_publish = 0;
            }
            write_metrics_line(rs, rs.outcome.train_steps, env_steps, m, meter, ps.version());
        }

        if (env_steps >= next_eval) {
            const bool hit = run_eval_round(rs, ps, &agent, env_steps);
            next_eval += config.eval_interval;
            if (!rs.options.quiet && rs.setup.two_player)
                std::fprintf(stderr,
                             "  [rollout] episodes=%llu scored=%.3f won=%.3f | eval win=%.3f\n",
                             static_cast<unsigned long long>(stepper.episodes_finished()),
                             stepper.episodes_finished()
                                 ? static_cast<double>(stepper.episodes_scored()) /
                                       stepper.episodes_finished()
                                 : 0.0,
                             stepper.episodes_finished()
                                 ? static_cast<double>(stepper.episodes_won()) /
                                       stepper.episodes_finished()
                                 : 0.0,
                             rs.outcome.final_win_rate);
            if (hit && (rs.options.stop_win_rate >= 0.0 || rs.options.stop_tabular_gap >= 0.0))
                break;
        }
    }

    rs.outcome.env_steps = env_steps;
    if (config.total_steps > 0 && rs.eval_round == 0) run_eval_round(rs, ps, &agent, env_steps);
}

void run_threaded(RunState& rs, AgentState& agent, ParameterServer& ps) {
    const ExperimentConfig& config = rs.config;
    ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
    FlowController flow(config.reuse_ratio_target, static_cast<std::size_t>(config.batch_size),
                        static_cast<std::size_t>(config.warmup_segments));
    ReuseRatioMeter meter(static_cast<std::size_t>(config.meter_window));
    BatchCache cache(buffer, flow, meter, static_cast<std::size_t>(config.batch_size),
                     static_cast<std::size_t>(config.cache_depth), mix_seed(config.seed, 0x7472ULL));
    WorkerReport report;
    std::atomic<bool> stop{false};
    std::atomic<std::uint64_t> env_steps{0};
    std::atomic<std::int64_t> train_steps{0};

    cache.start();
    std::vector<std::thread> rollouts;
    for (int w = 0; w < config.num_rollout_workers; ++w) {
        RolloutConfig rc;
        rc.segment_length = config.n;
        rc.refresh_interval = config.refresh_interval;
        rc.seed = mix_seed(config.seed, 0x6e76ULL + static_cast<std::uint64_t>(w));
        rollouts.emplace_back([&, rc] {
            rollout_worker(rollout_env_factory(rs.setup, config, rs.pool), ps, buffer, flow, meter,
                           rc, stop, env_steps, report);
        });
    }

    const MetricsCallback on_step = [&](std::int64_t step, const TrainMetrics& m) {
        write_metrics_line(rs, step, static_cast<std::int64_t>(env_steps.load()), m, meter,
                           ps.version());
    };
    TrainWorkerConfig tc;
    tc.publish_interval = config.publish_interval;
    std::thread trainer([&] {
        train_worker(agent, cache, ps, tc, stop, train_steps, on_step, report);
    });

    std::int64_t next_eval = config.eval_interval;
    while (static_cast<std::int64_t>(env_steps.load()) < config.total_steps && !report.failed &&
           !stop_requested(rs)) {
        const std::int64_t now_steps = static_cast<std::int64_t>(env_steps.load());
        if (now_steps >= next_eval) {
            rs.outcome.train_steps = train_steps.load();
            const bool hit = run_eval_round(rs, ps, nullptr, now_steps);
            next_eval += config.eval_interval;
            if (hit && (rs.options.stop_win_rate >= 0.0 || rs.options.stop_tabular_gap >= 0.0))
                break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }

    stop.store(true);
    flow.interrupt();
    cache.shutdown();
    for (auto& t : rollouts) t.join();
    trainer.join();

    rs.outcome.env_steps = static_cast<std::int64_t>(env_steps.load());
    rs.outcome.train_steps = train_steps.load();
    if (report.failed) throw std::runtime_error(report.message());
    if (config.total_steps > 0 && rs.eval_round == 0)
        run_eval_round(rs, ps, nullptr, rs.outcome.env_steps);
}

void write_summary(const RunState& rs, const std::string& out_dir) {
    nlohmann::ordered_json summary;
    summary["algorithm"] = to_string(rs.config.algorithm);
    summary["env"] = to_string(rs.config.env);
    summary["seed"] = rs.config.seed;
    summary["ok"] = rs.outcome.ok;
    if (!rs.outcome.error.empty()) summary["error"] = rs.outcome.error;
    summary["env_steps"] = rs.outcome.env_steps;
    summary["train_steps"] = rs.outcome.train_steps;
    summary["wall_time_s"] = rs.outcome.wall_time_s;
    summary["ps_version"] = rs.outcome.ps_version;
    if (rs.outcome.final_win_rate >= 0.0) {
        summary["final_win_rate"] = rs.outcome.final_win_rate;
        summary["best_win_rate"] = rs.outcome.best_win_rate;
    }
    if (rs.outcome.final_tabular_gap >= 0.0)
        summary["final_tabular_gap"] = rs.outcome.final_tabular_gap;
    summary["reached_threshold"] = rs.outcome.reached_threshold;
    summary["env_steps_to_threshold"] = rs.outcome.env_steps_to_threshold;
    summary["train_steps_to_threshold"] = rs.outcome.train_steps_to_threshold;

    std::ofstream out(out_dir + "/summary.json");
    out << summary.dump(2) << "\n";
}

}  // namespace

void install_interrupt_handler() {
    std::signal(SIGINT, [](int) { g_interrupted.store(true); });
    std::signal(SIGTERM, [](int) { g_interrupted.store(true); });
}

bool interrupt_requested() { return g_interrupted.load(); }

void clear_interrupt() { g_interrupted.store(false); }

RunOutcome run_train(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    fs::create_directories(options.out_dir);

    RunState rs;
    rs.config = config;
    rs.options = options;
    rs.t0 = Clock::now();
    rs.deterministic = config.num_rollout_workers == 1;
    rs.setup = make_env_setup(config);
    rs.metrics = std::make_unique<JsonlWriter>(options.out_dir + "/metrics.jsonl");

    {
        std::ofstream cfg(options.out_dir + "/config_used.cfg");
        cfg << serialize_config(config);
    }

    AgentState agent = build_agent(config, rs.setup);
    ParameterServer ps;
    publish_agent(ps, agent);

    if (config.selfplay_enabled && rs.setup.two_player) {
        rs.pool = std::make_shared<OpponentPool>(ps.fetch(), config.mix_prob,
                                                 static_cast<std::size_t>(config.history_bound));
        rs.gate = std::make_unique<PromotionGate>(config.gate_threshold, config.min_games,
                                                  static_cast<std::size_t>(config.gate_window));
    }

    try {
        if (rs.deterministic)
            run_sequential(rs, agent, ps);
        else
            run_threaded(rs, agent, ps);
        rs.outcome.ok = true;
    } catch (const std::exception& e) {
        rs.outcome.ok = false;
        rs.outcome.error = e.what();
        try {
            save_agent(agent, options.out_dir + "/checkpoint_diagnostic.agent");
        } catch (...) {
        }
    }

    rs.outcome.ps_version = ps.version();
    rs.outcome.wall_time_s = std::chrono::duration<double>(Clock::now() - rs.t0).count();
    try {
        save_agent(agent, options.out_dir + "/checkpoint_final.agent");
    } catch (const std::exception& e) {
        if (rs.outcome.ok) {
            rs.outcome.ok = false;
            rs.outcome.error = e.what();
        }
    }
    write_summary(rs, options.out_dir);
    if (!options.quiet) {
        std::string note = rs.outcome.ok ? "ok" : ("FAILED: " + rs.outcome.error);
        std::fprintf(stdout, "run_train %s: env_steps=%lld train_steps=%lld", note.c_str(),
                     static_cast<long long>(rs.outcome.env_steps),
                     static_cast<long long>(rs.outcome.train_steps));
        if (rs.outcome.final_win_rate >= 0.0)
            std::fprintf(stdout, " win_rate=%.3f", rs.outcome.final_win_rate);
        if (rs.outcome.final_tabular_gap >= 0.0)
            std::fprintf(stdout, " tabular_gap=%.4f", rs.outcome.final_tabular_gap);
        std::fprintf(stdout, " wall=%.1fs\n", rs.outcome.wall_time_s);
    }
    return rs.outcome;
}

nlohmann::json run_reuse_sweep(const ExperimentConfig& config, const std::vector<double>& ratios,
                               const std::string& out_dir, bool quiet) {
    if (ratios.size() < 2) throw std::invalid_argument("run_reuse_sweep: need at least 2 ratios");
    fs::create_directories(out_dir);

    nlohmann::json rows = nlohmann::json::array();
    std::ofstream csv(out_dir + "/reuse_sweep.csv");
    csv << "ratio,reached,env_steps_to_threshold,grad_steps_to_threshold,wall_time_s,seed,env\n";

    for (double ratio : ratios) {
        ExperimentConfig c = config;
        c.reuse_ratio_target = ratio;
        RunOptions opt;
        opt.out_dir = out_dir + "/ratio_" + std::to_string(ratio);
        opt.quiet = quiet;
        if (c.env == EnvKind::GridSoccer)
            opt.stop_win_rate = 0.6;
        else
            opt.stop_tabular_gap = 0.1;
        const RunOutcome res = run_train(c, opt);

        nlohmann::json row;
        row["ratio"] = ratio;
        row["reached"] = res.reached_threshold;
        row["env_steps_to_threshold"] = res.env_steps_to_threshold;
        row["grad_steps_to_threshold"] = res.train_steps_to_threshold;
        row["wall_time_s"] = res.wall_time_s;
        rows.push_back(row);
        csv << ratio << "," << (res.reached_threshold ? 1 : 0) << "," << res.env_steps_to_threshold
            << "," << res.train_steps_to_threshold << "," << res.wall_time_s << "," << c.seed << ","
            << to_string(c.env) << "\n";
        csv.flush();
    }

    // The trend (smaller reuse ratio, faster training) is reported, not
    // asserted: desk scale need not reproduce it.
    bool nondecreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::int64_t prev = rows[i - 1]["grad_steps_to_threshold"].get<std::int64_t>();
        const std::int64_t cur = rows[i]["grad_steps_to_threshold"].get<std::int64_t>();
        if (prev < 0 || cur < 0 || cur < prev) nondecreasing = false;
    }
    nlohmann::json report;
    report["rows"] = rows;
    report["grad_steps_nondecreasing_in_ratio"] = nondecreasing;
    report["csv"] = out_dir + "/reuse_sweep.csv";

    std::ofstream out(out_dir + "/reuse_sweep.json");
    out << report.dump(2) << "\n";
    return report;
}

nlohmann::json run_eval(const ExperimentConfig& config, const std::string& checkpoint_path,
                        const std::string& opponent_spec, int episodes, std::uint64_t seed) {
    const EnvSetup setup = make_env_setup(config);
    const AgentState agent = load_agent(checkpoint_path);
    if (agent.q1.input_size() != setup.obs_length)
        throw std::runtime_error("checkpoint \"" + checkpoint_path + "\": network input size " +
                                 std::to_string(agent.q1.input_size()) +
                                 " does not match env observation length " +
                                 std::to_string(setup.obs_length));
    if (agent.q1.output_size() != setup.action_count)
        throw std::runtime_error("checkpoint \"" + checkpoint_path + "\": network output size " +
                                 std::to_string(agent.q1.output_size()) +
                                 " does not match env action count " +
                                 std::to_string(setup.action_count));

    auto snapshot = std::make_shared<PolicySnapshot>(
        PolicySnapshot::make(0, agent.acting_net1(), agent.acting_net2(), agent.alpha()));

    EpisodeEnvFactory factory;
    if (!setup.two_player) {
        const TabularMdp mdp = *setup.mdp;
        const int max_steps = config.max_episode_steps;
        factory = [mdp, max_steps](std::uint64_t) {
            return std::make_unique<TabularEnv>(mdp, max_steps);
        };
    } else if (opponent_spec == "random") {
        const GridSoccerConfig soccer = setup.soccer;
        factory = [soccer](std::uint64_t) {
            return std::make_unique<SoccerAgentEnv>(soccer, uniform_random_opponent());
        };
    } else {
        const AgentState opponent = load_agent(opponent_spec);
        if (opponent.q1.input_size() != setup.obs_length)
            throw std::runtime_error("opponent checkpoint \"" + opponent_spec +
                                     "\": network input size " +
                                     std::to_string(opponent.q1.input_size()) +
                                     " does not match env observation length " +
                                     std::to_string(setup.obs_length));
        auto opp_snapshot = std::make_shared<PolicySnapshot>(PolicySnapshot::make(
            0, opponent.acting_net1(), opponent.acting_net2(), opponent.alpha()));
        const GridSoccerConfig soccer = setup.soccer;
        factory = [soccer, opp_snapshot](std::uint64_t) {
            return std::make_unique<SoccerAgentEnv>(soccer, greedy_opponent(opp_snapshot));
        };
    }

    const EvalResult res = test_worker(snapshot, factory, episodes, seed);
    nlohmann::ordered_json report;
    report["checkpoint"] = checkpoint_path;
    report["opponent"] = setup.two_player ? opponent_spec : "environment";
    report["episodes"] = res.episodes;
    report["win_rate"] = res.win_rate;
    report["draw_rate"] = res.draw_rate;
    report["loss_rate"] = res.loss_rate;
    report["mean_return"] = res.mean_return;
    return report;
}

nlohmann::json solve_tabular(const ExperimentConfig& config, const std::string& out_dir) {
    const EnvSetup setup = make_env_setup(config);
    if (setup.two_player)
        throw std::invalid_argument("solve-tabular: grid_soccer has no exact tabular solution");
    fs::create_directories(out_dir);

    const QTable q_star = soft_value_iteration(*setup.mdp, config.alpha, 1e-12, 1000000);
    const TabularPolicy pi_star = softmax_policy_table(q_star);

    auto dump = [&](const std::string& name, auto value_at) {
        std::ofstream out(out_dir + "/" + name);
        out << "state";
        for (int a = 0; a < setup.mdp->num_actions; ++a) out << ",a" << a;
        out << "\n";
        out.precision(17);
        for (int s = 0; s < setup.mdp->num_states; ++s) {
            out << s;
            for (int a = 0; a < setup.mdp->num_actions; ++a) out << "," << value_at(s, a);
            out << "\n";
        }
    };
    dump("q_star.csv", [&](int s, int a) { return q_star.at(s, a); });
    dump("pi_star.csv", [&](int s, int a) { return pi_star.at(s, a); });

    nlohmann::ordered_json report;
    report["env"] = to_string(config.env);
    report["alpha"] = config.alpha;
    report["gamma"] = config.gamma;
    report["num_states"] = setup.mdp->num_states;
    report["num_actions"] = setup.mdp->num_actions;
    report["q_star_csv"] = out_dir + "/q_star.csv";
    report["pi_star_csv"] = out_dir + "/pi_star.csv";
    return report;
}

}  // namespace softq
