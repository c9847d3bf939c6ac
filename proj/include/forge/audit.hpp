#pragma once

// Append-only audit trail for every model completion and toolchain request.
// The gate-ordering guarantees (no NLI call without a successful compile,
// at most one revision per statement per round) are asserted from this log.

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace forge {

struct AuditEvent {
  std::string kind;      // "llm" or "lean"
  std::string op;        // role name for llm events, command for lean events
  std::string key_hash;  // sha256 of the prompt or submitted code
  std::string tag;       // pipeline context, e.g. an NL id or item:seed:index
  bool ok = false;
  long latency_ms = 0;
  std::string detail;    // params summary or error text
};

inline void to_json(nlohmann::json& j, const AuditEvent& e) {
  j = nlohmann::json{{"kind", e.kind},   {"op", e.op},
                     {"key_hash", e.key_hash}, {"tag", e.tag},
                     {"ok", e.ok},       {"latency_ms", e.latency_ms},
                     {"detail", e.detail}};
}

class AuditLog {
 public:
  AuditLog() = default;

  void set_sink(std::filesystem::path path) {
    std::lock_guard<std::mutex> lock(mutex_);
    sink_path_ = std::move(path);
  }

  void append(AuditEvent e) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!sink_path_.empty()) {
      std::ofstream out(sink_path_, std::ios::app);
      nlohmann::json j = e;
      out << j.dump() << '\n';
    }
    events_.push_back(std::move(e));
  }

  std::vector<AuditEvent> snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return events_;
  }

  template <typename Pred>
  size_t count_if(Pred pred) const {
    std::lock_guard<std::mutex> lock(mutex_);
    size_t n = 0;
    for (const auto& e : events_) {
      if (pred(e)) ++n;
    }
    return n;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    events_.clear();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<AuditEvent> events_;
  std::filesystem::path sink_path_;
};

}  // namespace forge
