#include <cmath>

#include "softq/driver.hpp"
#include "softq/spg.hpp"
#include "softq/tabular.hpp"

namespace softq {

namespace {

const std::vector<std::vector<int>> kNetShapes = {
    {8, 16, 4}, {6, 12, 12, 3}, {10, 32, 5}, {12, 8, 8, 6}, {5, 24, 2}};
const std::vector<double> kAlphas = {0.7, 0.01, 1000.0, 1.0, 0.13};

nlohmann::json grad_equiv_suite(std::uint64_t seed) {
    nlohmann::json checks = nlohmann::json::array();
    double worst_equiv = 0.0, worst_fd = 0.0;
    bool pass = true;

    for (int i = 0; i < 50; ++i) {
        const std::vector<int>& shape = kNetShapes[i % kNetShapes.size()];
        const double alpha = kAlphas[i % kAlphas.size()];
        const std::uint64_t draw_seed = seed + static_cast<std::uint64_t>(i);

        MlpParams params;
        GradBatch batch;
        draw_verification_case(draw_seed, shape, 16, alpha, params, batch);
        const MlpGrads sql = sql_gradient(params, batch);
        const SpgGradients spg = spg_gradient(params, batch, alpha);
        const GradientReport rep = compare_gradients(sql, spg.total, "draw " + std::to_string(i), 1e-6);

        const auto loss = [&batch](const MlpParams& p) {
            double total = 0.0;
            for (std::size_t k = 0; k < batch.size(); ++k) {
                const std::vector<double> q = forward_values(p, batch.states[k]);
                const double r = q[batch.actions[k]] - batch.targets[k];
                total += 0.5 * r * r;
            }
            return total / static_cast<double>(batch.size());
        };
        const MlpGrads fd = finite_diff_grad(loss, params, 1e-5);
        const double fd_dev_sql = max_rel_deviation(sql, fd, 1e-6);
        const double fd_dev_spg = max_rel_deviation(spg.total, fd, 1e-6);
        const double fd_dev = std::max(fd_dev_sql, fd_dev_spg);

        worst_equiv = std::max(worst_equiv, rep.max_rel_deviation);
        worst_fd = std::max(worst_fd, fd_dev);
        const bool ok = rep.pass && fd_dev < 1e-4;
        pass = pass && ok;

        nlohmann::json check;
        check["name"] = rep.batch_descriptor;
        check["max_rel_deviation"] = rep.max_rel_deviation;
        check["fd_rel_deviation"] = fd_dev;
        check["pass"] = ok;
        checks.push_back(check);
    }

    nlohmann::json report;
    report["kind"] = "GRAD_EQUIV";
    report["draws"] = 50;
    report["max_rel_deviation"] = worst_equiv;
    report["max_fd_rel_deviation"] = worst_fd;
    report["equivalence_tolerance"] = 1e-6;
    report["fd_tolerance"] = 1e-4;
    report["checks"] = checks;
    report["pass"] = pass;
    return report;
}

nlohmann::json tabular_suite(std::uint64_t seed) {
    const std::vector<double> alphas = {0.05, 0.3, 1.0};
    nlohmann::json failures = nlohmann::json::array();
    double worst_violation = 0.0;
    int checked = 0;

    std::mt19937_64 rng(seed);
    for (int i = 0; i < 100; ++i) {
        const int states = 2 + static_cast<int>(rng() % 5);   // 2..6
        const int actions = 1 + static_cast<int>(rng() % 4);  // 1..4
        const double gamma = 0.5 + 0.09 * static_cast<double>(rng() % 5);
        const TabularMdp mdp = build_random_mdp(rng(), states, actions, gamma);
        const double alpha = alphas[i % alphas.size()];

        const PolicyIterationTrace trace = soft_policy_iteration(mdp, alpha, 12);
        for (std::size_t k = 1; k < trace.q_values.size(); ++k) {
            for (std::size_t j = 0; j < trace.q_values[k].values.size(); ++j) {
                const double drop =
                    trace.q_values[k - 1].values[j] - trace.q_values[k].values[j];
                worst_violation = std::max(worst_violation, drop);
                if (drop > 1e-9) {
                    nlohmann::json f;
                    f["mdp"] = i;
                    f["iteration"] = k;
                    f["drop"] = drop;
                    failures.push_back(f);
                }
            }
        }
        ++checked;
    }

    nlohmann::json report;
    report["kind"] = "TABULAR_SUITE";
    report["mdps_checked"] = checked;
    report["worst_monotonicity_violation"] = worst_violation;
    report["tolerance"] = 1e-9;
    report["failures"] = failures;
    report["pass"] = failures.empty();
    return report;
}

nlohmann::json gradcheck_suite(std::uint64_t seed) {
    nlohmann::json checks = nlohmann::json::array();
    double worst = 0.0;
    bool pass = true;

    for (int i = 0; i < 10; ++i) {
        const std::vector<int>& shape = kNetShapes[i % kNetShapes.size()];
        MlpParams params;
        GradBatch batch;
        draw_verification_case(seed + 100 + static_cast<std::uint64_t>(i), shape, 8, 0.5, params,
                               batch);

        const MlpGrads analytic = sql_gradient(params, batch);
        const auto loss = [&batch](const MlpParams& p) {
            double total = 0.0;
            for (std::size_t k = 0; k < batch.size(); ++k) {
                const std::vector<double> q = forward_values(p, batch.states[k]);
                const double r = q[batch.actions[k]] - batch.targets[k];
                total += 0.5 * r * r;
            }
            return total / static_cast<double>(batch.size());
        };
        const MlpGrads fd = finite_diff_grad(loss, params, 1e-5);
        const double dev = max_rel_deviation(analytic, fd, 1e-6);
        worst = std::max(worst, dev);
        pass = pass && dev < 1e-4;

        nlohmann::json check;
        check["draw"] = i;
        check["rel_deviation"] = dev;
        check["pass"] = dev < 1e-4;
        checks.push_back(check);
    }

    nlohmann::json report;
    report["kind"] = "GRADCHECK";
    report["max_rel_deviation"] = worst;
    report["tolerance"] = 1e-4;
    report["checks"] = checks;
    report["pass"] = pass;
    return report;
}

}  // namespace

nlohmann::json run_verify(VerifyKind kind, std::uint64_t seed) {
    switch (kind) {
        case VerifyKind::GradEquiv: return grad_equiv_suite(seed);
        case VerifyKind::TabularSuite: return tabular_suite(seed);
        case VerifyKind::GradCheck: return gradcheck_suite(seed);
    }
    throw std::invalid_argument("run_verify: unknown kind");
}

}  // namespace softq
