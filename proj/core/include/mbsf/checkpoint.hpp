#pragma once

// Versioned JSON serialization of a full AgentState, the unit of transfer.

#include <string>
#include <string_view>

#include "mbsf/agent.hpp"

namespace mbsf {

inline constexpr int kCheckpointFormatVersion = 1;

/// Deterministic text: the same state always yields the same bytes, and
/// parse(dump(x)) reproduces every double exactly.
std::string dump_checkpoint(const AgentState& agent);
/// Throws ParseError on malformed or truncated text, ConfigError on a version
/// or shape problem.
AgentState parse_checkpoint(std::string_view text);

void save_checkpoint(const AgentState& agent, const std::string& path);
AgentState load_checkpoint(const std::string& path);

/// Throws ConfigError when the checkpoint cannot drive `task`: action count,
/// featurized state coordinates, or an expected feature size that differs.
void check_transfer_compatible(const AgentState& agent, const TaskSpec& task,
                               std::size_t expected_features = 0);

}  // namespace mbsf
