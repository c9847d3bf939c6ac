#pragma once

// Toolchain access behind one JSON-per-line protocol with two
// implementations: a persistent child-process client for a real toolchain
// wrapper, and a scriptable mock that computes deterministic responses (plus
// optional canned rules for frozen fixtures). Requests:
//   {"cmd":"compile","code":...}
//   {"cmd":"parse","code":...}
//   {"cmd":"run_tactic","code":...,"tactics":[...]}
//   {"cmd":"contrapose","code":...,"hyp":...}
// Responses carry {"ok":bool}, an "error" text when ok=false, and per-command
// payloads: "messages":[{line,col,severity,text}], "parsed", "steps", or
// "goal_state". Goal states serialize as {"hyps":[...],"goal":...}.

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/audit.hpp"
#include "forge/jsonl.hpp"
#include "forge/lean_parser.hpp"
#include "forge/lean_types.hpp"
#include "forge/pool.hpp"
#include "forge/process_client.hpp"
#include "forge/sha256.hpp"
#include "forge/toolchain_protocol.hpp"
#include "forge/util.hpp"

namespace forge {

// ---------------------------------------------------------------------------
// Mock toolchain

struct ScriptRule {
  std::string cmd;         // compile | parse | run_tactic | contrapose
  std::string match;       // "exact_sha256" | "contains"
  std::string needle;      // matched against the request's code field
  std::string hyp;         // optional, contrapose only
  std::string tactics;     // optional, run_tactic only: tactics joined by \n
  nlohmann::json response;
};

inline void from_json(const nlohmann::json& j, ScriptRule& r) {
  r.cmd = j.at("cmd").get<std::string>();
  r.match = j.at("match").get<std::string>();
  r.needle = j.at("needle").get<std::string>();
  r.hyp = j.value("hyp", "");
  r.tactics = j.value("tactics", "");
  r.response = j.at("response");
}

// Pure function of (script, request). Behavioral fallbacks when no rule
// matches: structural compile checking with a marker-identifier lexicon, a
// miniature tactic engine (intro / norm_simp / mock_close / mock_fail), and
// table-driven contraposition.
class MockToolchain : public ToolchainClient {
 public:
  MockToolchain() = default;

  static std::shared_ptr<MockToolchain> from_script_file(const std::filesystem::path& path) {
    auto mock = std::make_shared<MockToolchain>();
    nlohmann::json j = nlohmann::json::parse(fsio::read_file(path));
    if (j.contains("rules")) {
      for (const auto& rj : j.at("rules")) mock->rules_.push_back(rj.get<ScriptRule>());
    }
    if (j.contains("unknown_identifiers")) {
      for (const auto& id : j.at("unknown_identifiers")) {
        mock->unknown_identifiers_.push_back(id.get<std::string>());
      }
    }
    return mock;
  }

  void add_rule(ScriptRule rule) { rules_.push_back(std::move(rule)); }
  void add_unknown_identifier(std::string ident) {
    unknown_identifiers_.push_back(std::move(ident));
  }

  bool deterministic() const override { return true; }

  nlohmann::json request(const nlohmann::json& req) override {
    if (!req.contains("cmd")) throw ToolchainError("request missing cmd");
    std::string cmd = req.at("cmd").get<std::string>();
    std::string code = req.value("code", "");
    for (const auto& rule : rules_) {
      if (rule.cmd != cmd) continue;
      bool hit = rule.match == "exact_sha256" ? sha256_hex(code) == rule.needle
                                              : str::contains(code, rule.needle);
      if (!hit) continue;
      if (cmd == "contrapose" && !rule.hyp.empty() && rule.hyp != req.value("hyp", "")) continue;
      if (cmd == "run_tactic" && !rule.tactics.empty()) {
        auto tactics = req.value("tactics", std::vector<std::string>{});
        if (str::join(tactics, "\n") != rule.tactics) continue;
      }
      return rule.response;
    }
    if (cmd == "compile") return behavioral_compile(code);
    if (cmd == "parse") return behavioral_parse(code);
    if (cmd == "run_tactic")
      return behavioral_run(code, req.value("tactics", std::vector<std::string>{}));
    if (cmd == "contrapose") return behavioral_contrapose(code, req.value("hyp", ""));
    throw ToolchainError("unknown cmd: " + cmd);
  }

 private:
  static size_t codepoint_column(std::string_view line, size_t byte_col) {
    return utf8::decode(line.substr(0, byte_col)).size();
  }

  nlohmann::json diagnostic_response(int line, int col, const std::string& text) const {
    return nlohmann::json{
        {"ok", true},
        {"messages", nlohmann::json::array({nlohmann::json{
                         {"line", line}, {"col", col}, {"severity", "error"}, {"text", text}}})}};
  }

  nlohmann::json behavioral_compile(const std::string& code) const {
    if (!str::starts_with(code, kImportHeader)) {
      return diagnostic_response(1, 0, "expected 'import Mathlib' header");
    }
    std::string body = code.substr(std::string(kImportHeader).size());
    try {
      parse_statement(body);
    } catch (const ParseError& e) {
      return diagnostic_response(3, 0, e.what());
    }
    // Marker lexicon: identifiers beginning with bad_ident (plus any ids a
    // script declares) fail as unresolved names, with line/col pointing at
    // the first occurrence in the submission.
    auto lines = str::split_lines(code);
    for (size_t ln = 0; ln < lines.size(); ++ln) {
      const std::string& line = lines[ln];
      auto flag = [&](size_t byte_col, const std::string& ident) {
        return diagnostic_response(static_cast<int>(ln + 1),
                                   static_cast<int>(codepoint_column(line, byte_col)),
                                   "unknown identifier '" + ident + "'");
      };
      size_t pos = line.find("bad_ident");
      if (pos != std::string::npos) {
        size_t end = pos;
        while (end < line.size() && (isalnum(static_cast<unsigned char>(line[end])) ||
                                     line[end] == '_')) {
          ++end;
        }
        return flag(pos, line.substr(pos, end - pos));
      }
      for (const auto& ident : unknown_identifiers_) {
        pos = line.find(ident);
        if (pos != std::string::npos) return flag(pos, ident);
      }
    }
    return nlohmann::json{{"ok", true}, {"messages", nlohmann::json::array()}};
  }

  nlohmann::json behavioral_parse(const std::string& code) const {
    try {
      ParsedTheorem p = parse_statement(code);
      return nlohmann::json{{"ok", true}, {"parsed", p}};
    } catch (const ParseError& e) {
      return nlohmann::json{{"ok", false}, {"error", e.what()}};
    }
  }

  static GoalState initial_state(const ParsedTheorem& p) {
    GoalState s;
    auto add = [&](const Binder& b) {
      std::string name = b.name;
      if (b.kind == BinderKind::instance && name.empty()) name = "inst✝";
      s.hypothesis_lines.push_back(name + " : " + b.type_text);
    };
    for (const auto& b : p.variables) add(b);
    for (const auto& b : p.hypotheses) add(b);
    s.goal = p.conclusion;
    return s;
  }

  // intro on `∀ x ... : T, rest` or a top-level implication.
  static bool apply_intro(GoalState& s, const std::string& name) {
    std::string_view goal = s.goal;
    if (str::starts_with(goal, "∀ ")) {
      std::string_view rest = goal.substr(4);
      size_t colon = detail::find_top_level_colon(rest);
      if (colon == std::string_view::npos) return false;
      auto names = str::split_ws(rest.substr(0, colon));
      if (names.empty()) return false;
      std::string_view after = rest.substr(colon + 1);
      detail::DelimScanner scan;
      size_t comma = std::string_view::npos;
      for (size_t i = 0; i < after.size();) {
        if (scan.depth == 0 && after[i] == ',') {
          comma = i;
          break;
        }
        i += scan.step(after, i);
      }
      if (comma == std::string_view::npos) return false;
      std::string type(str::strip(after.substr(0, comma)));
      std::string body(str::strip(after.substr(comma + 1)));
      s.hypothesis_lines.push_back(name + " : " + type);
      if (names.size() == 1) {
        s.goal = body;
      } else {
        std::vector<std::string> remaining(names.begin() + 1, names.end());
        s.goal = "∀ " + str::join(remaining, " ") + " : " + type + ", " + body;
      }
      return true;
    }
    static const std::string arrow = " → ";
    detail::DelimScanner scan;
    for (size_t i = 0; i < goal.size();) {
      if (scan.depth == 0 && detail::token_at(goal, i, arrow)) {
        s.hypothesis_lines.push_back(name + " : " + std::string(str::strip(goal.substr(0, i))));
        s.goal = std::string(str::strip(goal.substr(i + arrow.size())));
        return true;
      }
      i += scan.step(goal, i);
    }
    return false;
  }

  nlohmann::json behavioral_run(const std::string& code,
                                const std::vector<std::string>& tactics) const {
    ParsedTheorem parsed;
    try {
      parsed = parse_statement(code);
    } catch (const ParseError& e) {
      return nlohmann::json{{"ok", false}, {"error", std::string("statement does not parse: ") +
                                                         e.what()}};
    }
    GoalState state = initial_state(parsed);
    nlohmann::json steps = nlohmann::json::array();
    bool completed = false;
    nlohmann::json failed_index;
    for (size_t i = 0; i < tactics.size(); ++i) {
      const std::string& t = tactics[i];
      bool ok = false;
      bool closed = false;
      if (t == "mock_close") {
        ok = true;
        closed = true;
      } else if (t == "mock_fail") {
        ok = false;
      } else if (t == "norm_simp") {
        state.goal = str::replace_all(state.goal, " + 0", "");
        ok = true;
      } else if (str::starts_with(t, "intro ")) {
        ok = apply_intro(state, std::string(str::strip(std::string_view(t).substr(6))));
      }
      if (!ok) {
        failed_index = static_cast<int>(i);
        break;
      }
      if (closed) {
        completed = true;
        steps.push_back(nlohmann::json{{"goals", nlohmann::json::array()}});
        break;
      }
      steps.push_back(
          nlohmann::json{{"goals", nlohmann::json::array({goal_state_to_wire(state)})}});
    }
    return nlohmann::json{
        {"ok", true}, {"completed", completed}, {"failed_index", failed_index}, {"steps", steps}};
  }

  nlohmann::json behavioral_contrapose(const std::string& code, const std::string& hyp) const {
    ParsedTheorem parsed;
    try {
      parsed = parse_statement(code);
    } catch (const ParseError& e) {
      return nlohmann::json{{"ok", false}, {"error", std::string("statement does not parse: ") +
                                                         e.what()}};
    }
    const Binder* target = nullptr;
    for (const auto& b : parsed.hypotheses) {
      if (b.name == hyp) {
        target = &b;
        break;
      }
    }
    if (!target) {
      return nlohmann::json{{"ok", false}, {"error", "unknown hypothesis '" + hyp + "'"}};
    }
    GoalState state;
    auto add = [&](const Binder& b, const std::string& type) {
      std::string name = b.name;
      if (b.kind == BinderKind::instance && name.empty()) name = "inst✝";
      state.hypothesis_lines.push_back(name + " : " + type);
    };
    for (const auto& b : parsed.variables) add(b, b.type_text);
    for (const auto& b : parsed.hypotheses) {
      add(b, b.name == hyp ? negate_prop(parsed.conclusion) : b.type_text);
    }
    state.goal = negate_prop(target->type_text);
    return nlohmann::json{{"ok", true}, {"goal_state", goal_state_to_wire(state)}};
  }

  std::vector<ScriptRule> rules_;
  std::vector<std::string> unknown_identifiers_;
};

// ---------------------------------------------------------------------------
// Facade

class LeanBridge {
 public:
  LeanBridge(std::shared_ptr<ToolchainClient> client, AuditLog* audit = nullptr,
             size_t max_inflight = 4, long timeout_ms = 120000)
      : client_(std::move(client)), audit_(audit), gate_(max_inflight), timeout_ms_(timeout_ms) {}

  // Prepends the standard header exactly once and submits. Timeouts come
  // back as a failing report with a synthetic diagnostic.
  CompileReport compile(const std::string& code, const std::string& tag = "") {
    std::string normalized = normalize_fl_code(code);
    std::string submission = std::string(kImportHeader) + normalized;
    auto t0 = std::chrono::steady_clock::now();
    nlohmann::json resp;
    try {
      resp = roundtrip({{"cmd", "compile"}, {"code", submission}});
    } catch (const ToolchainTimeout& e) {
      CompileReport report;
      report.success = false;
      report.diagnostics.push_back(Diagnostic{1, 0, Severity::error,
                                              std::string("compile timeout: ") + e.what()});
      report.elapsed_ms = elapsed_since(t0);
      audit_event("compile", submission, tag, false, report.elapsed_ms, "timeout");
      return report;
    }
    if (!resp.value("ok", false)) {
      throw ToolchainError("compile failed: " + resp.value("error", "unknown toolchain error"));
    }
    CompileReport report;
    for (const auto& m : resp.at("messages")) {
      Diagnostic d;
      d.line = m.at("line").get<int>();
      d.column = m.at("col").get<int>();
      d.severity = severity_from_string(m.at("severity").get<std::string>());
      d.message = m.at("text").get<std::string>();
      report.diagnostics.push_back(std::move(d));
    }
    report.success = true;
    for (const auto& d : report.diagnostics) {
      if (d.severity == Severity::error) report.success = false;
    }
    report.elapsed_ms = client_->deterministic() ? 0 : elapsed_since(t0);
    audit_event("compile", submission, tag, report.success, report.elapsed_ms,
                "diagnostics=" + std::to_string(report.diagnostics.size()));
    return report;
  }

  // Decomposition is a pure local computation in mock mode; a live toolchain
  // can refine binder classification through the parse command.
  ParsedTheorem parse(const std::string& code) { return parse_statement(code); }

  ProofTrace run_tactics(const std::string& code, const std::vector<std::string>& tactics,
                         const std::string& tag = "") {
    nlohmann::json resp =
        roundtrip({{"cmd", "run_tactic"}, {"code", normalize_fl_code(code)}, {"tactics", tactics}});
    audit_event("run_tactic", code, tag, resp.value("ok", false),
                0, "tactics=" + std::to_string(tactics.size()));
    if (!resp.value("ok", false)) {
      throw ToolchainError("run_tactic failed: " + resp.value("error", "unknown toolchain error"));
    }
    ProofTrace trace;
    trace.tactics = tactics;
    trace.completed = resp.value("completed", false);
    if (resp.contains("failed_index") && !resp.at("failed_index").is_null()) {
      trace.failed_index = resp.at("failed_index").get<int>();
    }
    for (const auto& step : resp.at("steps")) {
      const auto& goals = step.at("goals");
      if (goals.empty()) continue;  // closing step leaves no state to record
      trace.states.push_back(goal_state_from_wire(goals.at(0)));
    }
    return trace;
  }

  GoalState contrapose(const std::string& code, const std::string& hyp_name,
                       const std::string& tag = "") {
    nlohmann::json resp =
        roundtrip({{"cmd", "contrapose"}, {"code", normalize_fl_code(code)}, {"hyp", hyp_name}});
    audit_event("contrapose", code, tag, resp.value("ok", false), 0, "hyp=" + hyp_name);
    if (!resp.value("ok", false)) {
      throw ToolchainError("contrapose failed: " + resp.value("error", "unknown toolchain error"));
    }
    return goal_state_from_wire(resp.at("goal_state"));
  }

  long timeout_ms() const { return timeout_ms_; }

 private:
  static long elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 t0)
        .count();
  }

  nlohmann::json roundtrip(const nlohmann::json& req) {
    GateHold hold(gate_);
    return client_->request(req);
  }

  void audit_event(const std::string& op, const std::string& code, const std::string& tag, bool ok,
                   long latency_ms, const std::string& detail) {
    if (!audit_) return;
    audit_->append(AuditEvent{"lean", op, sha256_hex(code), tag, ok, latency_ms, detail});
  }

  std::shared_ptr<ToolchainClient> client_;
  AuditLog* audit_;
  Gate gate_;
  long timeout_ms_;
};

}  // namespace forge
