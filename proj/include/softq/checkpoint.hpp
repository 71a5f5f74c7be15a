#pragma once

#include <string>

#include "softq/agent.hpp"
#include "softq/nn.hpp"
#include "softq/tabular.hpp"

namespace softq {

/// Binary network format: magic "SQNNET01", u32 format version, u32 layer
/// count, u32 sizes, then per layer the row-major weight matrix followed by
/// the bias vector, all little-endian 64-bit floats.
void save_network(const MlpParams& params, const std::string& path);
MlpParams load_network(const std::string& path);

/// Agent checkpoint: magic "SQAGNT01", a small header (algorithm, backup
/// scheme, temperature state, n, gamma, tau, lr), then the four networks in
/// order q1, q2, q1_target, q2_target. Optimizer moments are not persisted.
void save_agent(const AgentState& agent, const std::string& path);
AgentState load_agent(const std::string& path);

/// Q table / policy fixture format: magic "SQTABLE1", u32 rows, u32 cols,
/// f64 alpha, then the flat row-major values.
void save_qtable(const QTable& q, const std::string& path);
QTable load_qtable(const std::string& path);

}  // namespace softq
