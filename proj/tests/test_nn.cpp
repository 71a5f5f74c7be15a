#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "softq/checkpoint.hpp"
#include "softq/nn.hpp"

using namespace softq;

namespace {

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("init is deterministic in the seed with zero biases") {
    const MlpParams a = mlp_init({8, 16, 4}, 77);
    const MlpParams b = mlp_init({8, 16, 4}, 77);
    const MlpParams c = mlp_init({8, 16, 4}, 78);
    for (int l = 0; l < a.layer_count(); ++l) {
        CHECK(a.weights[l] == b.weights[l]);
        CHECK(a.biases[l].isZero(0.0));
    }
    CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("init weight variance tracks 2 / fan_in") {
    const int fan_in = 128;
    const MlpParams params = mlp_init({fan_in, 256}, 3);
    const Eigen::MatrixXd& w = params.weights[0];
    const double mean = w.mean();
    const double var = (w.array() - mean).square().sum() / (w.size() - 1);
    const double expected = 2.0 / fan_in;
    CHECK(var > 0.8 * expected);
    CHECK(var < 1.2 * expected);
}

TEST_CASE("init rejects degenerate layer lists") {
    CHECK_THROWS_AS(mlp_init({4}, 1), std::invalid_argument);
    CHECK_THROWS_AS(mlp_init({4, 0, 2}, 1), std::invalid_argument);
}

TEST_CASE("forward of the zero network is zero") {
    MlpParams params = mlp_init({3, 5, 2}, 1);
    for (auto& w : params.weights) w.setZero();
    std::mt19937_64 rng(2);
    const Eigen::VectorXd out = forward(params, random_vector(3, rng));
    CHECK(out.isZero(0.0));
}

TEST_CASE("identity single layer reproduces its input") {
    MlpParams params = mlp_init({4, 4}, 1);
    params.weights[0] = Eigen::MatrixXd::Identity(4, 4);
    params.biases[0].setZero();
    std::mt19937_64 rng(3);
    const Eigen::VectorXd x = random_vector(4, rng);
    CHECK(forward(params, x) == x);
}

TEST_CASE("forward rejects inputs of the wrong length") {
    const MlpParams params = mlp_init({4, 4}, 1);
    CHECK_THROWS_AS(forward(params, Eigen::VectorXd::Zero(5)), std::invalid_argument);
}

TEST_CASE("forward is bit-identical after a checkpoint round trip") {
    const MlpParams params = mlp_init({6, 12, 3}, 11);
    const std::string path = temp_path("softq_nn_roundtrip.net");
    save_network(params, path);
    const MlpParams loaded = load_network(path);
    std::remove(path.c_str());
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd x = random_vector(6, rng);
        CHECK(forward(params, x) == forward(loaded, x));
    }
}

TEST_CASE("backward with a zero output gradient is zero") {
    const MlpParams params = mlp_init({5, 7, 3}, 5);
    ForwardCache cache;
    std::mt19937_64 rng(6);
    forward(params, random_vector(5, rng), &cache);
    MlpGrads grads = MlpGrads::zeros_like(params);
    backward(params, cache, Eigen::VectorXd::Zero(3), grads);
    CHECK(grads.max_abs() == 0.0);
}

TEST_CASE("single linear layer: weight gradient is the outer product") {
    const MlpParams params = mlp_init({3, 2}, 7);
    ForwardCache cache;
    std::mt19937_64 rng(8);
    const Eigen::VectorXd x = random_vector(3, rng);
    forward(params, x, &cache);
    const Eigen::VectorXd g = random_vector(2, rng);
    MlpGrads grads = MlpGrads::zeros_like(params);
    backward(params, cache, g, grads);
    const Eigen::MatrixXd outer = g * x.transpose();
    CHECK((grads.weights[0] - outer).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((grads.biases[0] - g).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("backward matches central differences on a random network") {
    const MlpParams params = mlp_init({6, 10, 4}, 19);
    std::mt19937_64 rng(20);
    Eigen::VectorXd x = random_vector(6, rng);
    Eigen::VectorXd g = random_vector(4, rng);

    ForwardCache cache;
    forward(params, x, &cache);
    MlpGrads analytic = MlpGrads::zeros_like(params);
    backward(params, cache, g, analytic);

    const auto loss = [&](const MlpParams& p) { return forward(p, x).dot(g); };
    const MlpGrads fd = finite_diff_grad(loss, params, 1e-5);
    CHECK(max_rel_deviation(analytic, fd, 1e-6) < 1e-4);
}

TEST_CASE("backward rejects a cache from a different architecture") {
    const MlpParams a = mlp_init({4, 6, 2}, 1);
    const MlpParams b = mlp_init({4, 2}, 1);
    ForwardCache cache;
    forward(b, Eigen::VectorXd::Zero(4), &cache);
    MlpGrads grads = MlpGrads::zeros_like(a);
    CHECK_THROWS_AS(backward(a, cache, Eigen::VectorXd::Zero(2), grads), std::invalid_argument);
}

TEST_CASE("adam with zero gradients only advances the step counter") {
    MlpParams params = mlp_init({3, 4, 2}, 9);
    const MlpParams before = params;
    AdamState state = AdamState::for_params(params);
    adam_step(params, MlpGrads::zeros_like(params), state, 1e-3);
    CHECK(state.step == 1);
    for (int l = 0; l < params.layer_count(); ++l) CHECK(params.weights[l] == before.weights[l]);
}

TEST_CASE("first adam step moves each coordinate by about lr * sign(gradient)") {
    MlpParams params = mlp_init({2, 2}, 13);
    const MlpParams before = params;
    AdamState state = AdamState::for_params(params);
    MlpGrads grads = MlpGrads::zeros_like(params);
    std::mt19937_64 rng(14);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& w : grads.weights)
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng) + (w(i) >= 0 ? 0.5 : -0.5);
    const double lr = 1e-3;
    adam_step(params, grads, state, lr);
    for (int l = 0; l < params.layer_count(); ++l)
        for (Eigen::Index i = 0; i < params.weights[l].size(); ++i) {
            const double delta = params.weights[l](i) - before.weights[l](i);
            const double g = grads.weights[l](i);
            if (std::abs(g) > 1e-6) CHECK(std::abs(delta + lr * (g > 0 ? 1.0 : -1.0)) < 1e-5);
        }
}

TEST_CASE("adam is deterministic from identical state") {
    MlpParams a = mlp_init({3, 5, 2}, 15);
    MlpParams b = a;
    AdamState sa = AdamState::for_params(a);
    AdamState sb = AdamState::for_params(b);
    MlpGrads grads = MlpGrads::zeros_like(a);
    std::mt19937_64 rng(16);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& w : grads.weights)
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
    adam_step(a, grads, sa, 1e-3);
    adam_step(b, grads, sb, 1e-3);
    for (int l = 0; l < a.layer_count(); ++l) CHECK(a.weights[l] == b.weights[l]);
}

TEST_CASE("adam rejects non-finite gradients and shape mismatches") {
    MlpParams params = mlp_init({3, 2}, 17);
    AdamState state = AdamState::for_params(params);
    MlpGrads bad = MlpGrads::zeros_like(params);
    bad.weights[0](0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(adam_step(params, bad, state, 1e-3), std::runtime_error);
    const MlpGrads wrong = MlpGrads::zeros_like(mlp_init({3, 4, 2}, 1));
    CHECK_THROWS_AS(adam_step(params, wrong, state, 1e-3), std::invalid_argument);
}

TEST_CASE("polyak endpoints and midpoint") {
    const MlpParams main = mlp_init({3, 4, 2}, 19);
    MlpParams target = mlp_init({3, 4, 2}, 20);

    MlpParams full = target;
    polyak_update(full, main, 1.0);
    for (int l = 0; l < main.layer_count(); ++l) CHECK(full.weights[l] == main.weights[l]);

    MlpParams frozen = target;
    polyak_update(frozen, main, 0.0);
    for (int l = 0; l < main.layer_count(); ++l) CHECK(frozen.weights[l] == target.weights[l]);

    MlpParams zero = main;
    for (auto& w : zero.weights) w.setZero();
    MlpParams two = main;
    for (auto& w : two.weights) w.setConstant(2.0);
    polyak_update(zero, two, 0.5);
    for (int l = 0; l < zero.layer_count(); ++l)
        CHECK((zero.weights[l].array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("polyak stays a convex combination coordinatewise") {
    const MlpParams main = mlp_init({4, 6, 3}, 21);
    const MlpParams original = mlp_init({4, 6, 3}, 22);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> tau_draw(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        MlpParams target = original;
        polyak_update(target, main, tau_draw(rng));
        for (int l = 0; l < target.layer_count(); ++l)
            for (Eigen::Index i = 0; i < target.weights[l].size(); ++i) {
                const double lo = std::min(original.weights[l](i), main.weights[l](i));
                const double hi = std::max(original.weights[l](i), main.weights[l](i));
                CHECK(target.weights[l](i) >= lo - 1e-15);
                CHECK(target.weights[l](i) <= hi + 1e-15);
            }
    }
    MlpParams target = original;
    CHECK_THROWS_AS(polyak_update(target, mlp_init({4, 3}, 1), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(polyak_update(target, main, 1.5), std::invalid_argument);
}

TEST_CASE("finite differences recover the gradient of a quadratic") {
    const MlpParams params = mlp_init({3, 4, 2}, 25);
    const auto loss = [](const MlpParams& p) {
        double total = 0.0;
        for (const auto& w : p.weights) total += 0.5 * w.squaredNorm();
        for (const auto& b : p.biases) total += 0.5 * b.squaredNorm();
        return total;
    };
    const MlpGrads fd = finite_diff_grad(loss, params, 1e-5);
    for (int l = 0; l < params.layer_count(); ++l) {
        CHECK((fd.weights[l] - params.weights[l]).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((fd.biases[l] - params.biases[l]).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("finite differences recover a linear loss exactly up to rounding") {
    const MlpParams params = mlp_init({2, 3}, 26);
    const double c = 1.75;
    const auto loss = [&](const MlpParams& p) {
        double total = 0.0;
        for (const auto& w : p.weights) total += c * w.sum();
        return total;
    };
    const MlpGrads fd = finite_diff_grad(loss, params, 1e-5);
    CHECK((fd.weights[0].array() - c).abs().maxCoeff() < 1e-9);
    CHECK(fd.biases[0].cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("finite differences reject non-finite losses") {
    const MlpParams params = mlp_init({2, 2}, 27);
    const auto loss = [](const MlpParams&) { return std::nan(""); };
    CHECK_THROWS_AS(finite_diff_grad(loss, params, 1e-5), std::runtime_error);
}
