#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/util.hpp"

namespace forge {

enum class Severity { error, warning, info };

inline std::string to_string(Severity s) {
  switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "error";
}

inline Severity severity_from_string(const std::string& s) {
  if (s == "error") return Severity::error;
  if (s == "warning") return Severity::warning;
  if (s == "info") return Severity::info;
  throw ParseError("unknown severity: " + s);
}

struct Diagnostic {
  int line = 1;       // 1-based
  int column = 0;     // 0-based
  Severity severity = Severity::error;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct CompileReport {
  bool success = false;
  std::vector<Diagnostic> diagnostics;
  long elapsed_ms = 0;

  bool operator==(const CompileReport&) const = default;

  // Equality that ignores wall-clock time; compile() is idempotent up to it.
  bool same_outcome(const CompileReport& o) const {
    return success == o.success && diagnostics == o.diagnostics;
  }
};

enum class BinderKind { explicit_, implicit, instance, strict_implicit };

inline std::string to_string(BinderKind k) {
  switch (k) {
    case BinderKind::explicit_: return "explicit";
    case BinderKind::implicit: return "implicit";
    case BinderKind::instance: return "instance";
    case BinderKind::strict_implicit: return "strict_implicit";
  }
  return "explicit";
}

inline BinderKind binder_kind_from_string(const std::string& s) {
  if (s == "explicit") return BinderKind::explicit_;
  if (s == "implicit") return BinderKind::implicit;
  if (s == "instance") return BinderKind::instance;
  if (s == "strict_implicit") return BinderKind::strict_implicit;
  throw ParseError("unknown binder kind: " + s);
}

struct Binder {
  std::string name;  // empty allowed for anonymous instance binders only
  BinderKind kind = BinderKind::explicit_;
  std::string type_text;
  bool is_prop = false;

  bool operator==(const Binder&) const = default;
};

struct ParsedTheorem {
  std::string name;
  std::vector<Binder> variables;   // is_prop = false, source order
  std::vector<Binder> hypotheses;  // is_prop = true, source order
  std::string conclusion;

  bool operator==(const ParsedTheorem&) const = default;
};

struct GoalState {
  std::vector<std::string> hypothesis_lines;  // "name : type", variables included
  std::string goal;

  bool operator==(const GoalState&) const = default;
};

struct ProofTrace {
  std::vector<std::string> tactics;
  // One state per successfully applied tactic while goals remained open; a
  // closing tactic contributes no state.
  std::vector<GoalState> states;
  bool completed = false;
  std::optional<int> failed_index;

  bool operator==(const ProofTrace&) const = default;
};

inline void to_json(nlohmann::json& j, const Diagnostic& d) {
  j = nlohmann::json{{"line", d.line},
                     {"column", d.column},
                     {"severity", to_string(d.severity)},
                     {"message", d.message}};
}

inline void from_json(const nlohmann::json& j, Diagnostic& d) {
  d.line = j.at("line").get<int>();
  d.column = j.at("column").get<int>();
  d.severity = severity_from_string(j.at("severity").get<std::string>());
  d.message = j.at("message").get<std::string>();
}

inline void to_json(nlohmann::json& j, const CompileReport& r) {
  j = nlohmann::json{{"success", r.success},
                     {"diagnostics", r.diagnostics},
                     {"elapsed_ms", r.elapsed_ms}};
}

inline void from_json(const nlohmann::json& j, CompileReport& r) {
  r.success = j.at("success").get<bool>();
  r.diagnostics = j.at("diagnostics").get<std::vector<Diagnostic>>();
  r.elapsed_ms = j.at("elapsed_ms").get<long>();
}

inline void to_json(nlohmann::json& j, const Binder& b) {
  j = nlohmann::json{{"name", b.name},
                     {"kind", to_string(b.kind)},
                     {"type_text", b.type_text},
                     {"is_prop", b.is_prop}};
}

inline void from_json(const nlohmann::json& j, Binder& b) {
  b.name = j.at("name").get<std::string>();
  b.kind = binder_kind_from_string(j.at("kind").get<std::string>());
  b.type_text = j.at("type_text").get<std::string>();
  b.is_prop = j.at("is_prop").get<bool>();
}

inline void to_json(nlohmann::json& j, const ParsedTheorem& p) {
  j = nlohmann::json{{"name", p.name},
                     {"variables", p.variables},
                     {"hypotheses", p.hypotheses},
                     {"conclusion", p.conclusion}};
}

inline void from_json(const nlohmann::json& j, ParsedTheorem& p) {
  p.name = j.at("name").get<std::string>();
  p.variables = j.at("variables").get<std::vector<Binder>>();
  p.hypotheses = j.at("hypotheses").get<std::vector<Binder>>();
  p.conclusion = j.at("conclusion").get<std::string>();
}

inline void to_json(nlohmann::json& j, const GoalState& s) {
  j = nlohmann::json{{"hypothesis_lines", s.hypothesis_lines}, {"goal", s.goal}};
}

inline void from_json(const nlohmann::json& j, GoalState& s) {
  s.hypothesis_lines = j.at("hypothesis_lines").get<std::vector<std::string>>();
  s.goal = j.at("goal").get<std::string>();
}

}  // namespace forge
