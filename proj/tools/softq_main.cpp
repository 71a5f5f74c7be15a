#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "softq/checkpoint.hpp"
#include "softq/driver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerification = 3;

std::string resolve_out_dir(const std::string& cli_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("SOFTQ_OUT_DIR"); env && *env) return env;
    return "softq_out";
}

std::vector<double> parse_ratios(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw softq::ConfigError("reuse-sweep: \"" + item + "\" is not a number");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace softq;
    install_interrupt_handler();

    CLI::App app{"softq: maximum-entropy Q-learning toolkit (SQN / SQN-CF / QOP)"};
    app.require_subcommand(1);

    std::string config_path, out_cli, checkpoint, opponent = "random", kind_str = "grad_equiv";
    std::string ratios_csv = "0.5,1.0,4.0", stop_file;
    std::int64_t seed_override = -1;
    int episodes = 1000;
    bool quiet = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config file");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed_override, "override the config seed");
        cmd->add_option("--out", out_cli, "output directory (default $SOFTQ_OUT_DIR or softq_out)");
        cmd->add_flag("--quiet", quiet, "suppress progress output");
    };

    CLI::App* train = app.add_subcommand("train", "run one training experiment");
    add_common(train, true);
    train->add_option("--stop-file", stop_file, "stop cleanly once this file exists");

    CLI::App* eval = app.add_subcommand("eval", "greedy match report for a checkpoint");
    add_common(eval, true);
    eval->add_option("--checkpoint", checkpoint, "agent checkpoint")->required();
    eval->add_option("--opponent", opponent, "opponent checkpoint or \"random\"");
    eval->add_option("--episodes", episodes, "number of evaluation games");

    CLI::App* verify = app.add_subcommand("verify", "run a verification property suite");
    add_common(verify, false);
    verify->add_option("--kind", kind_str, "grad_equiv | tabular_suite | gradcheck");

    CLI::App* sweep = app.add_subcommand("reuse-sweep", "train once per reuse ratio, report speed");
    add_common(sweep, true);
    sweep->add_option("--ratios", ratios_csv, "comma-separated reuse ratio targets");

    CLI::App* solve = app.add_subcommand("solve-tabular", "dump exact Q*/pi* tables as CSV");
    add_common(solve, true);

    CLI11_PARSE(app, argc, argv);
    const std::string out_dir = resolve_out_dir(out_cli);

    // Phase 1: configuration and inputs; failures exit 1.
    ExperimentConfig config;
    try {
        if (!config_path.empty()) {
            config = parse_config(config_path);
            if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (train->parsed()) {
            RunOptions options;
            options.out_dir = out_dir;
            options.quiet = quiet;
            options.stop_file = stop_file;
            const RunOutcome outcome = run_train(config, options);
            if (!outcome.ok) {
                std::cerr << "error: " << outcome.error << "\n";
                return kExitRuntime;
            }
            return kExitOk;
        }

        if (eval->parsed()) {
            nlohmann::json report;
            try {
                report = run_eval(config, checkpoint, opponent, episodes,
                                  seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                                     : config.seed);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitValidation;
            }
            std::cout << report.dump(2) << "\n";
            return kExitOk;
        }

        if (verify->parsed()) {
            VerifyKind kind;
            if (kind_str == "grad_equiv") kind = VerifyKind::GradEquiv;
            else if (kind_str == "tabular_suite") kind = VerifyKind::TabularSuite;
            else if (kind_str == "gradcheck") kind = VerifyKind::GradCheck;
            else {
                std::cerr << "error: unknown verify kind \"" << kind_str << "\"\n";
                return kExitValidation;
            }
            const std::uint64_t seed =
                seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : 1;
            const nlohmann::json report = run_verify(kind, seed);
            std::cout << report.dump(2) << "\n";
            std::filesystem::create_directories(out_dir);
            std::ofstream out(out_dir + "/verify_" + kind_str + ".json");
            out << report.dump(2) << "\n";
            return report["pass"].get<bool>() ? kExitOk : kExitVerification;
        }

        if (sweep->parsed()) {
            const std::vector<double> ratios = parse_ratios(ratios_csv);
            const nlohmann::json report = run_reuse_sweep(config, ratios, out_dir, quiet);
            std::cout << report.dump(2) << "\n";
            return kExitOk;
        }

        if (solve->parsed()) {
            const nlohmann::json report = solve_tabular(config, out_dir);
            std::cout << report.dump(2) << "\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
