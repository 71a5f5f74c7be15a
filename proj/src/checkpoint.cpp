#include "softq/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts need byte swaps");

namespace softq {

namespace {

constexpr char kNetMagic[8] = {'S', 'Q', 'N', 'N', 'E', 'T', '0', '1'};
constexpr char kAgentMagic[8] = {'S', 'Q', 'A', 'G', 'N', 'T', '0', '1'};
constexpr char kTableMagic[8] = {'S', 'Q', 'T', 'A', 'B', 'L', 'E', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void write_raw(std::ostream& out, const void* data, std::size_t len) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

template <typename T>
void write_value(std::ostream& out, T value) {
    write_raw(out, &value, sizeof(value));
}

void read_raw(std::istream& in, void* data, std::size_t len, const std::string& path) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("checkpoint \"" + path + "\": truncated file");
}

template <typename T>
T read_value(std::istream& in, const std::string& path) {
    T value{};
    read_raw(in, &value, sizeof(value), path);
    return value;
}

void expect_magic(std::istream& in, const char (&magic)[8], const std::string& path,
                  const char* kind) {
    char got[8];
    read_raw(in, got, 8, path);
    if (std::memcmp(got, magic, 8) != 0)
        throw std::runtime_error("checkpoint \"" + path + "\": not a " + kind + " file");
}

void write_network_body(std::ostream& out, const MlpParams& params) {
    write_raw(out, kNetMagic, 8);
    write_value(out, kFormatVersion);
    write_value(out, static_cast<std::uint32_t>(params.layer_sizes.size()));
    for (int size : params.layer_sizes) write_value(out, static_cast<std::uint32_t>(size));
    for (int l = 0; l < params.layer_count(); ++l) {
        const Eigen::MatrixXd& w = params.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) write_value(out, w(r, c));
        write_raw(out, params.biases[l].data(), sizeof(double) * params.biases[l].size());
    }
}

MlpParams read_network_body(std::istream& in, const std::string& path) {
    expect_magic(in, kNetMagic, path, "network");
    const auto version = read_value<std::uint32_t>(in, path);
    if (version != kFormatVersion)
        throw std::runtime_error("checkpoint \"" + path + "\": unsupported network format version " +
                                 std::to_string(version));
    const auto count = read_value<std::uint32_t>(in, path);
    if (count < 2 || count > 64)
        throw std::runtime_error("checkpoint \"" + path + "\": implausible layer count " +
                                 std::to_string(count));
    MlpParams params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto size = read_value<std::uint32_t>(in, path);
        if (size < 1 || size > (1u << 20))
            throw std::runtime_error("checkpoint \"" + path + "\": implausible layer size");
        params.layer_sizes.push_back(static_cast<int>(size));
    }
    for (std::size_t l = 0; l + 1 < params.layer_sizes.size(); ++l) {
        const int rows = params.layer_sizes[l + 1];
        const int cols = params.layer_sizes[l];
        Eigen::MatrixXd w(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w(r, c) = read_value<double>(in, path);
        Eigen::VectorXd b(rows);
        read_raw(in, b.data(), sizeof(double) * rows, path);
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    return params;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write \"" + path + "\"");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open \"" + path + "\"");
    return in;
}

}  // namespace

void save_network(const MlpParams& params, const std::string& path) {
    std::ofstream out = open_out(path);
    write_network_body(out, params);
    if (!out) throw std::runtime_error("checkpoint: write failed for \"" + path + "\"");
}

MlpParams load_network(const std::string& path) {
    std::ifstream in = open_in(path);
    return read_network_body(in, path);
}

void save_agent(const AgentState& agent, const std::string& path) {
    std::ofstream out = open_out(path);
    write_raw(out, kAgentMagic, 8);
    write_value(out, kFormatVersion);
    write_value(out, static_cast<std::uint8_t>(agent.algorithm));
    write_value(out, static_cast<std::uint8_t>(agent.scheme));
    write_value(out, static_cast<std::uint8_t>(agent.temperature.mode));
    write_value(out, static_cast<std::uint8_t>(0));
    write_value(out, static_cast<std::uint32_t>(agent.n));
    write_value(out, agent.gamma);
    write_value(out, agent.tau);
    write_value(out, agent.lr);
    write_value(out, agent.temperature.log_alpha);
    write_value(out, agent.temperature.target_entropy);
    write_value(out, agent.temperature.alpha_lr);
    write_network_body(out, agent.q1);
    write_network_body(out, agent.q2);
    write_network_body(out, agent.q1_target);
    write_network_body(out, agent.q2_target);
    if (!out) throw std::runtime_error("checkpoint: write failed for \"" + path + "\"");
}

AgentState load_agent(const std::string& path) {
    std::ifstream in = open_in(path);
    expect_magic(in, kAgentMagic, path, "agent");
    const auto version = read_value<std::uint32_t>(in, path);
    if (version != kFormatVersion)
        throw std::runtime_error("checkpoint \"" + path + "\": unsupported agent format version " +
                                 std::to_string(version));

    AgentState agent;
    const auto algorithm = read_value<std::uint8_t>(in, path);
    const auto scheme = read_value<std::uint8_t>(in, path);
    const auto alpha_mode = read_value<std::uint8_t>(in, path);
    (void)read_value<std::uint8_t>(in, path);
    if (algorithm > 2)
        throw std::runtime_error("checkpoint \"" + path + "\": unknown algorithm tag");
    if (scheme > 2) throw std::runtime_error("checkpoint \"" + path + "\": unknown scheme tag");
    if (alpha_mode > 1)
        throw std::runtime_error("checkpoint \"" + path + "\": unknown alpha mode tag");
    agent.algorithm = static_cast<Algorithm>(algorithm);
    agent.scheme = static_cast<BackupScheme>(scheme);
    agent.temperature.mode = static_cast<AlphaMode>(alpha_mode);
    agent.n = static_cast<int>(read_value<std::uint32_t>(in, path));
    agent.gamma = read_value<double>(in, path);
    agent.tau = read_value<double>(in, path);
    agent.lr = read_value<double>(in, path);
    agent.temperature.log_alpha = read_value<double>(in, path);
    agent.temperature.target_entropy = read_value<double>(in, path);
    agent.temperature.alpha_lr = read_value<double>(in, path);
    agent.q1 = read_network_body(in, path);
    agent.q2 = read_network_body(in, path);
    agent.q1_target = read_network_body(in, path);
    agent.q2_target = read_network_body(in, path);
    if (!agent.q1.same_shape(agent.q2) || !agent.q1.same_shape(agent.q1_target) ||
        !agent.q1.same_shape(agent.q2_target))
        throw std::runtime_error("checkpoint \"" + path +
                                 "\": the four networks disagree on layer sizes");
    agent.opt1 = AdamState::for_params(agent.q1);
    agent.opt2 = AdamState::for_params(agent.q2);
    return agent;
}

void save_qtable(const QTable& q, const std::string& path) {
    std::ofstream out = open_out(path);
    write_raw(out, kTableMagic, 8);
    write_value(out, static_cast<std::uint32_t>(q.num_states));
    write_value(out, static_cast<std::uint32_t>(q.num_actions));
    write_value(out, q.alpha);
    write_raw(out, q.values.data(), sizeof(double) * q.values.size());
    if (!out) throw std::runtime_error("checkpoint: write failed for \"" + path + "\"");
}

QTable load_qtable(const std::string& path) {
    std::ifstream in = open_in(path);
    expect_magic(in, kTableMagic, path, "Q table");
    QTable q;
    q.num_states = static_cast<int>(read_value<std::uint32_t>(in, path));
    q.num_actions = static_cast<int>(read_value<std::uint32_t>(in, path));
    if (q.num_states < 1 || q.num_actions < 1 ||
        static_cast<std::int64_t>(q.num_states) * q.num_actions > (1LL << 30))
        throw std::runtime_error("checkpoint \"" + path + "\": implausible table shape");
    q.alpha = read_value<double>(in, path);
    q.values.resize(static_cast<std::size_t>(q.num_states) * q.num_actions);
    read_raw(in, q.values.data(), sizeof(double) * q.values.size(), path);
    return q;
}

}  // namespace softq
