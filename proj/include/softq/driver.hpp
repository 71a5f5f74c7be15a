#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "softq/config.hpp"

namespace softq {

/// How run_train writes and when it may stop early. Threshold stops are
/// used by the reuse sweep and the learning benchmarks.
struct RunOptions {
    std::string out_dir = "softq_out";
    bool quiet = false;
    double stop_win_rate = -1.0;     // stop once an eval reaches this (negative: off)
    double stop_tabular_gap = -1.0;  // stop once the probe gap drops below this (negative: off)
    std::string stop_file;           // polled; run stops when this path exists
};

struct RunOutcome {
    bool ok = false;
    std::string error;
    std::int64_t env_steps = 0;
    std::int64_t train_steps = 0;
    double wall_time_s = 0.0;
    std::int64_t ps_version = 0;
    double final_win_rate = -1.0;    // two-player runs, greedy vs uniform random
    double best_win_rate = -1.0;
    double final_tabular_gap = -1.0; // tabular runs, sup-norm probe
    bool reached_threshold = false;
    std::int64_t env_steps_to_threshold = -1;
    std::int64_t train_steps_to_threshold = -1;
};

/// Runs one experiment to total_steps (or a stop condition), writing
/// metrics.jsonl, config_used.cfg, checkpoint_final.agent and summary.json
/// under out_dir. A single rollout worker runs the deterministic sequential
/// schedule (bit-reproducible metrics); more workers run the threaded
/// harness.
RunOutcome run_train(const ExperimentConfig& config, const RunOptions& options);

/// One training run per ratio on the same seed/env, each stopping at the
/// env-specific performance threshold (win rate 0.6 vs random on soccer,
/// probe gap 0.1 on tabular envs). Writes reuse_sweep.csv under out_dir and
/// returns the report (the speed trend is reported, never asserted).
nlohmann::json run_reuse_sweep(const ExperimentConfig& config, const std::vector<double>& ratios,
                               const std::string& out_dir, bool quiet);

enum class VerifyKind { GradEquiv, TabularSuite, GradCheck };

/// Property suites behind `verify`: Eq-style gradient equivalence, exact
/// tabular monotone improvement, and backward-vs-finite-difference checks.
/// The report lists each check with its measured value; "pass" is the
/// conjunction.
nlohmann::json run_verify(VerifyKind kind, std::uint64_t seed);

/// Greedy match report for a saved agent against another checkpoint, a
/// uniform-random opponent, or (single-agent envs) the environment itself.
nlohmann::json run_eval(const ExperimentConfig& config, const std::string& checkpoint_path,
                        const std::string& opponent_spec, int episodes, std::uint64_t seed);

/// Exact Q* / softmax-policy tables for the configured tabular env, written
/// as q_star.csv and pi_star.csv under out_dir.
nlohmann::json solve_tabular(const ExperimentConfig& config, const std::string& out_dir);

/// Signal plumbing for the CLI: the handler sets a flag run_train polls.
void install_interrupt_handler();
bool interrupt_requested();
void clear_interrupt();

}  // namespace softq
