#include "softq/config.hpp"

#include "softq/grid_soccer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace softq {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::SQN: return "sqn";
        case Algorithm::SQN_CF: return "sqn_cf";
        case Algorithm::QOP: return "qop";
    }
    return "?";
}

std::string to_string(EnvKind e) {
    switch (e) {
        case EnvKind::Gridworld: return "gridworld";
        case EnvKind::Chain: return "chain";
        case EnvKind::RandomMdp: return "random_mdp";
        case EnvKind::GridSoccer: return "grid_soccer";
    }
    return "?";
}

std::string to_string(BackupScheme s) {
    switch (s) {
        case BackupScheme::Expectation: return "expectation";
        case BackupScheme::Lse: return "lse";
        case BackupScheme::Sampled: return "sampled";
    }
    return "?";
}

std::string to_string(AlphaMode m) { return m == AlphaMode::Fixed ? "fixed" : "adaptive"; }

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

using Setter = std::function<void(ExperimentConfig&, const std::string& where, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
    const char* section;
    const char* key;
    Setter set;
    Getter get;
};

[[noreturn]] void bad_value(const std::string& where, const std::string& key,
                            const std::string& detail) {
    throw ConfigError(where + ": invalid value for \"" + key + "\": " + detail);
}

double to_double(const std::string& where, const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) bad_value(where, key, "trailing characters in \"" + raw + "\"");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(where, key, "\"" + raw + "\" is not a number");
    }
}

std::int64_t to_int(const std::string& where, const std::string& key, const std::string& raw) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || ptr != raw.data() + raw.size())
        bad_value(where, key, "\"" + raw + "\" is not an integer");
    return v;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

Setter double_field(double ExperimentConfig::* member, const char* key, double lo, double hi,
                    bool lo_open = false, bool hi_open = false) {
    return [=](ExperimentConfig& c, const std::string& where, const std::string& raw) {
        const double v = to_double(where, key, raw);
        const bool below = lo_open ? v <= lo : v < lo;
        const bool above = hi_open ? v >= hi : v > hi;
        if (below || above)
            bad_value(where, key,
                      std::to_string(v) + " outside " + (lo_open ? "(" : "[") +
                          format_double(lo) + ", " + format_double(hi) + (hi_open ? ")" : "]"));
        c.*member = v;
    };
}

template <typename Int>
Setter int_field(Int ExperimentConfig::* member, const char* key, std::int64_t lo,
                 std::int64_t hi) {
    return [=](ExperimentConfig& c, const std::string& where, const std::string& raw) {
        const std::int64_t v = to_int(where, key, raw);
        if (v < lo || v > hi)
            bad_value(where, key,
                      std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
        c.*member = static_cast<Int>(v);
    };
}

Setter bool_field(bool ExperimentConfig::* member, const char* key) {
    return [=](ExperimentConfig& c, const std::string& where, const std::string& raw) {
        if (raw == "true" || raw == "1" || raw == "yes")
            c.*member = true;
        else if (raw == "false" || raw == "0" || raw == "no")
            c.*member = false;
        else
            bad_value(where, key, "\"" + raw + "\" is not a boolean");
    };
}

template <typename T>
Getter simple_get(T ExperimentConfig::* member) {
    return [=](const ExperimentConfig& c) {
        if constexpr (std::is_same_v<T, double>)
            return format_double(c.*member);
        else if constexpr (std::is_same_v<T, bool>)
            return std::string(c.*member ? "true" : "false");
        else
            return std::to_string(c.*member);
    };
}

const std::vector<Field>& schema() {
    static const std::vector<Field> fields = {
        {"run", "algorithm",
         [](ExperimentConfig& c, const std::string& where, const std::string& raw) {
             if (raw == "sqn") c.algorithm = Algorithm::SQN;
             else if (raw == "sqn_cf") c.algorithm = Algorithm::SQN_CF;
             else if (raw == "qop") c.algorithm = Algorithm::QOP;
             else bad_value(where, "algorithm", "\"" + raw + "\" (expected sqn, sqn_cf or qop)");
         },
         [](const ExperimentConfig& c) { return to_string(c.algorithm); }},
        {"run", "env",
         [](ExperimentConfig& c, const std::string& where, const std::string& raw) {
             if (raw == "gridworld") c.env = EnvKind::Gridworld;
             else if (raw == "chain") c.env = EnvKind::Chain;
             else if (raw == "random_mdp") c.env = EnvKind::RandomMdp;
             else if (raw == "grid_soccer") c.env = EnvKind::GridSoccer;
             else
                 bad_value(where, "env",
                           "\"" + raw + "\" (expected gridworld, chain, random_mdp or grid_soccer)");
         },
         [](const ExperimentConfig& c) { return to_string(c.env); }},
        {"run", "seed",
         [](ExperimentConfig& c, const std::string& where, const std::string& raw) {
             const std::int64_t v = to_int(where, "seed", raw);
             if (v < 0) bad_value(where, "seed", "must be nonnegative");
             c.seed = static_cast<std::uint64_t>(v);
         },
         [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        {"run", "total_steps", int_field(&ExperimentConfig::total_steps, "total_steps", 0, 1LL << 40),
         simple_get(&ExperimentConfig::total_steps)},

        {"env", "width", int_field(&ExperimentConfig::width, "width", 1, 1024),
         simple_get(&ExperimentConfig::width)},
        {"env", "height", int_field(&ExperimentConfig::height, "height", 1, 1024),
         simple_get(&ExperimentConfig::height)},
        {"env", "slip_prob",
         double_field(&ExperimentConfig::slip_prob, "slip_prob", 0.0, 1.0, false, true),
         simple_get(&ExperimentConfig::slip_prob)},
        {"env", "chain_length", int_field(&ExperimentConfig::chain_length, "chain_length", 1, 100000),
         simple_get(&ExperimentConfig::chain_length)},
        {"env", "mdp_states", int_field(&ExperimentConfig::mdp_states, "mdp_states", 1, 2000),
         simple_get(&ExperimentConfig::mdp_states)},
        {"env", "mdp_actions", int_field(&ExperimentConfig::mdp_actions, "mdp_actions", 1, 256),
         simple_get(&ExperimentConfig::mdp_actions)},
        {"env", "max_episode_steps",
         int_field(&ExperimentConfig::max_episode_steps, "max_episode_steps", 1, 1000000),
         simple_get(&ExperimentConfig::max_episode_steps)},
        {"env", "soccer_width", int_field(&ExperimentConfig::soccer_width, "soccer_width", 3, 1023),
         simple_get(&ExperimentConfig::soccer_width)},
        {"env", "soccer_height",
         int_field(&ExperimentConfig::soccer_height, "soccer_height", 1, 1024),
         simple_get(&ExperimentConfig::soccer_height)},
        {"env", "soccer_max_steps",
         int_field(&ExperimentConfig::soccer_max_steps, "soccer_max_steps", 1, 1000000),
         simple_get(&ExperimentConfig::soccer_max_steps)},
        {"env", "soccer_obs_length",
         int_field(&ExperimentConfig::soccer_obs_length, "soccer_obs_length", 10, 4096),
         simple_get(&ExperimentConfig::soccer_obs_length)},

        {"agent", "hidden_sizes",
         [](ExperimentConfig& c, const std::string& where, const std::string& raw) {
             std::vector<int> sizes;
             if (!raw.empty()) {
                 std::stringstream ss(raw);
                 std::string item;
                 while (std::getline(ss, item, ',')) {
                     const std::int64_t v = to_int(where, "hidden_sizes", trim(item));
                     if (v < 1 || v > 65536) bad_value(where, "hidden_sizes", "size out of range");
                     sizes.push_back(static_cast<int>(v));
                 }
             }
             c.hidden_sizes = std::move(sizes);
         },
         [](const ExperimentConfig& c) {
             std::string out;
             for (std::size_t i = 0; i < c.hidden_sizes.size(); ++i)
                 out += (i ? "," : "") + std::to_string(c.hidden_sizes[i]);
             return out;
         }},
        {"agent", "gamma", double_field(&ExperimentConfig::gamma, "gamma", 0.0, 1.0, false, true),
         simple_get(&ExperimentConfig::gamma)},
        {"agent", "tau", double_field(&ExperimentConfig::tau, "tau", 0.0, 1.0),
         simple_get(&ExperimentConfig::tau)},
        {"agent", "lr", double_field(&ExperimentConfig::lr, "lr", 0.0, 1.0, true, false),
         simple_get(&ExperimentConfig::lr)},
        {"agent", "n", int_field(&ExperimentConfig::n, "n", 1, 1024),
         simple_get(&ExperimentConfig::n)},
        {"agent", "backup_scheme",
         [](ExperimentConfig& c, const std::string& where, const std::string& raw) {
             if (raw == "expectation") c.backup_scheme = BackupScheme::Expectation;
             else if (raw == "lse") c.backup_scheme = BackupScheme::Lse;
             else if (raw == "sampled") c.backup_scheme = BackupScheme::Sampled;
             else
                 bad_value(where, "backup_scheme",
                           "\"" + raw + "\" (expected expectation, lse or sampled)");
         },
         [](const ExperimentConfig& c) { return to_string(c.backup_scheme); }},
        {"agent", "alpha_mode",
         [](ExperimentConfig& c, const std::string& where, const std::string& raw) {
             if (raw == "fixed") c.alpha_mode = AlphaMode::Fixed;
             else if (raw == "adaptive") c.alpha_mode = AlphaMode::Adaptive;
             else bad_value(where, "alpha_mode", "\"" + raw + "\" (expected fixed or adaptive)");
         },
         [](const ExperimentConfig& c) { return to_string(c.alpha_mode); }},
        {"agent", "alpha", double_field(&ExperimentConfig::alpha, "alpha", 0.0, 1e6, true, false),
         simple_get(&ExperimentConfig::alpha)},
        {"agent", "target_entropy_factor",
         double_field(&ExperimentConfig::target_entropy_factor, "target_entropy_factor", 0.0, 1.0),
         simple_get(&ExperimentConfig::target_entropy_factor)},
        {"agent", "alpha_lr",
         double_field(&ExperimentConfig::alpha_lr, "alpha_lr", 0.0, 1.0, true, false),
         simple_get(&ExperimentConfig::alpha_lr)},

        {"harness", "batch_size", int_field(&ExperimentConfig::batch_size, "batch_size", 1, 65536),
         simple_get(&ExperimentConfig::batch_size)},
        {"harness", "buffer_capacity",
         int_field(&ExperimentConfig::buffer_capacity, "buffer_capacity", 1, 1 << 24),
         simple_get(&ExperimentConfig::buffer_capacity)},
        {"harness", "reuse_ratio_target",
         double_field(&ExperimentConfig::reuse_ratio_target, "reuse_ratio_target", 0.0, 1e6, true,
                      false),
         simple_get(&ExperimentConfig::reuse_ratio_target)},
        {"harness", "publish_interval",
         int_field(&ExperimentConfig::publish_interval, "publish_interval", 1, 1 << 20),
         simple_get(&ExperimentConfig::publish_interval)},
        {"harness", "num_rollout_workers",
         int_field(&ExperimentConfig::num_rollout_workers, "num_rollout_workers", 1, 256),
         simple_get(&ExperimentConfig::num_rollout_workers)},
        {"harness", "refresh_interval",
         int_field(&ExperimentConfig::refresh_interval, "refresh_interval", 1, 1 << 20),
         simple_get(&ExperimentConfig::refresh_interval)},
        {"harness", "cache_depth", int_field(&ExperimentConfig::cache_depth, "cache_depth", 1, 1024),
         simple_get(&ExperimentConfig::cache_depth)},
        {"harness", "warmup_segments",
         int_field(&ExperimentConfig::warmup_segments, "warmup_segments", 1, 1 << 24),
         simple_get(&ExperimentConfig::warmup_segments)},
        {"harness", "meter_window",
         int_field(&ExperimentConfig::meter_window, "meter_window", 1, 1 << 24),
         simple_get(&ExperimentConfig::meter_window)},
        {"harness", "eval_interval",
         int_field(&ExperimentConfig::eval_interval, "eval_interval", 1, 1LL << 40),
         simple_get(&ExperimentConfig::eval_interval)},
        {"harness", "eval_episodes",
         int_field(&ExperimentConfig::eval_episodes, "eval_episodes", 1, 1 << 20),
         simple_get(&ExperimentConfig::eval_episodes)},

        {"selfplay", "enabled", bool_field(&ExperimentConfig::selfplay_enabled, "enabled"),
         simple_get(&ExperimentConfig::selfplay_enabled)},
        {"selfplay", "mix_prob", double_field(&ExperimentConfig::mix_prob, "mix_prob", 0.0, 1.0),
         simple_get(&ExperimentConfig::mix_prob)},
        {"selfplay", "gate_threshold",
         double_field(&ExperimentConfig::gate_threshold, "gate_threshold", 0.0, 1.0),
         simple_get(&ExperimentConfig::gate_threshold)},
        {"selfplay", "min_games", int_field(&ExperimentConfig::min_games, "min_games", 1, 1 << 20),
         simple_get(&ExperimentConfig::min_games)},
        {"selfplay", "gate_window",
         int_field(&ExperimentConfig::gate_window, "gate_window", 1, 1 << 20),
         simple_get(&ExperimentConfig::gate_window)},
        {"selfplay", "history_bound",
         int_field(&ExperimentConfig::history_bound, "history_bound", 1, 1 << 16),
         simple_get(&ExperimentConfig::history_bound)},
        {"selfplay", "gate_games", int_field(&ExperimentConfig::gate_games, "gate_games", 1, 1 << 20),
         simple_get(&ExperimentConfig::gate_games)},
    };
    return fields;
}

const Field* find_field(const std::string& section, const std::string& key) {
    for (const Field& f : schema())
        if (section == f.section && key == f.key) return &f;
    return nullptr;
}

std::string nearest_key(const std::string& section, const std::string& key) {
    std::string best;
    std::size_t best_dist = std::string::npos;
    for (const Field& f : schema()) {
        const std::string candidate = std::string(f.section) + "." + f.key;
        const std::size_t d = edit_distance(section + "." + key, candidate);
        if (d < best_dist) {
            best_dist = d;
            best = candidate;
        }
    }
    return best;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (algorithm != Algorithm::QOP && n != 1)
        throw ConfigError("config: n > 1 requires algorithm = qop (sqn and sqn_cf train on "
                          "single transitions)");
    if (env == EnvKind::GridSoccer) {
        GridSoccerConfig probe{soccer_width, soccer_height, soccer_max_steps, soccer_obs_length};
        try {
            probe.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    if (gate_window < min_games)
        throw ConfigError("config: gate_window must be at least min_games");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line, section;
    std::vector<std::string> seen;
    int line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        std::string content = line;
        const std::size_t comment = content.find('#');
        if (comment != std::string::npos) content.erase(comment);
        content = trim(content);
        if (content.empty()) continue;

        if (content.front() == '[') {
            if (content.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(content.substr(1, content.size() - 2));
            continue;
        }

        const std::size_t eq = content.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value, got \"" + content + "\"");
        const std::string key = trim(content.substr(0, eq));
        const std::string value = trim(content.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (section.empty())
            throw ConfigError(where + ": key \"" + key + "\" appears before any [section]");

        const Field* field = find_field(section, key);
        if (!field)
            throw ConfigError(where + ": unknown key \"" + section + "." + key +
                              "\" (did you mean \"" + nearest_key(section, key) + "\"?)");
        const std::string full = section + "." + key;
        if (std::find(seen.begin(), seen.end(), full) != seen.end())
            throw ConfigError(where + ": duplicate key \"" + full + "\"");
        seen.push_back(full);
        field->set(config, where, value);
    }

    config.validate();
    return config;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

std::string serialize_config(const ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const Field& f : schema()) {
        if (section != f.section) {
            if (!out.empty()) out += "\n";
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += std::string(f.key) + " = " + f.get(config) + "\n";
    }
    return out;
}

}  // namespace softq
