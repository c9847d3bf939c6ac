#pragma once

// Shared surface of the toolchain wire protocol: client interface, error
// taxonomy, and goal-state wire form. See lean_bridge.hpp for the request
// and response schemas.

#include <string>
#include <vector>

#include <json.hpp>

#include "forge/lean_types.hpp"
#include "forge/util.hpp"

namespace forge {

class ToolchainError : public ForgeError {
 public:
  explicit ToolchainError(const std::string& msg) : ForgeError(msg) {}
};

class ToolchainTimeout : public ToolchainError {
 public:
  explicit ToolchainTimeout(const std::string& msg) : ToolchainError(msg) {}
};

class ToolchainClient {
 public:
  virtual ~ToolchainClient() = default;
  virtual nlohmann::json request(const nlohmann::json& req) = 0;
  // Deterministic clients report elapsed_ms = 0 so manifests stay
  // byte-identical across runs.
  virtual bool deterministic() const = 0;
};

inline nlohmann::json goal_state_to_wire(const GoalState& s) {
  return nlohmann::json{{"hyps", s.hypothesis_lines}, {"goal", s.goal}};
}

inline GoalState goal_state_from_wire(const nlohmann::json& j) {
  GoalState s;
  s.hypothesis_lines = j.at("hyps").get<std::vector<std::string>>();
  s.goal = j.at("goal").get<std::string>();
  return s;
}

inline constexpr const char* kImportHeader = "import Mathlib\n\n";

}  // namespace forge
