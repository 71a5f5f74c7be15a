#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "softq/agent.hpp"

namespace softq {

enum class EnvKind { Gridworld, Chain, RandomMdp, GridSoccer };

std::string to_string(Algorithm a);
std::string to_string(EnvKind e);
std::string to_string(BackupScheme s);
std::string to_string(AlphaMode m);

/// Parse/validation failure with the offending location and key.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Full description of one experiment. Parsed from a flat key = value file
/// with [section] headers; every field has a default, every numeric range
/// is checked at parse time.
struct ExperimentConfig {
    // [run]
    Algorithm algorithm = Algorithm::SQN;
    EnvKind env = EnvKind::Gridworld;
    std::uint64_t seed = 1;
    std::int64_t total_steps = 100000;

    // [env]
    int width = 4;               // gridworld / grid_soccer
    int height = 4;
    double slip_prob = 0.1;      // gridworld
    int chain_length = 8;        // chain
    int mdp_states = 5;          // random_mdp
    int mdp_actions = 3;
    int max_episode_steps = 100; // tabular truncation
    int soccer_width = 5;
    int soccer_height = 3;
    int soccer_max_steps = 40;
    int soccer_obs_length = 10;

    // [agent]
    std::vector<int> hidden_sizes = {64, 64};
    double gamma = 0.97;
    double tau = 0.01;
    double lr = 3e-4;
    int n = 1;
    BackupScheme backup_scheme = BackupScheme::Expectation;
    AlphaMode alpha_mode = AlphaMode::Fixed;
    double alpha = 0.2;
    double target_entropy_factor = 0.5;  // target entropy = factor * log(action count)
    double alpha_lr = 3e-4;

    // [harness]
    int batch_size = 64;
    int buffer_capacity = 4096;
    double reuse_ratio_target = 4.0;
    int publish_interval = 10;
    int num_rollout_workers = 1;
    int refresh_interval = 1;
    int cache_depth = 2;
    int warmup_segments = 128;
    int meter_window = 4096;
    std::int64_t eval_interval = 10000;
    int eval_episodes = 200;

    // [selfplay]
    bool selfplay_enabled = false;
    double mix_prob = 0.8;
    double gate_threshold = 0.6;
    int min_games = 100;
    int gate_window = 200;
    int history_bound = 8;
    int gate_games = 50;

    void validate() const;
};

/// Reads and validates a config file. Unknown keys are rejected with the
/// nearest valid key suggested; every error names its file and line.
ExperimentConfig parse_config(const std::string& path);

/// Parses config text (same grammar as parse_config).
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

/// Serializes every field, grouped by section; parsing the result yields
/// an identical config.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace softq
