#pragma once

// Role-based access to model backends: prompt rendering, completion with
// sampling parameters, bounded concurrency, retry with backoff, audit
// logging, and answer extraction. The mock backend makes the whole gateway a
// pure function of (role, prompt, fixture directory).

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "forge/audit.hpp"
#include "forge/pool.hpp"
#include "forge/prompts.hpp"
#include "forge/sha256.hpp"
#include "forge/statement_model.hpp"
#include "forge/util.hpp"

namespace forge {

class BackendTimeout : public ForgeError {
 public:
  explicit BackendTimeout(const std::string& msg) : ForgeError(msg) {}
};

class BackendRateLimited : public ForgeError {
 public:
  explicit BackendRateLimited(const std::string& msg) : ForgeError(msg) {}
};

class MalformedResponse : public ForgeError {
 public:
  explicit MalformedResponse(const std::string& msg) : ForgeError(msg) {}
};

class FixtureMissing : public ForgeError {
 public:
  explicit FixtureMissing(const std::string& msg) : ForgeError(msg) {}
};

class ExtractionError : public ForgeError {
 public:
  explicit ExtractionError(const std::string& msg) : ForgeError(msg) {}
};

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 2048;
  std::optional<long> seed;

  void validate() const {
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  }

  std::string summary() const {
    std::string s = "temp=" + std::to_string(temperature) + " top_p=" + std::to_string(top_p) +
                    " max_tokens=" + std::to_string(max_tokens);
    if (seed) s += " seed=" + std::to_string(*seed);
    return s;
  }
};

// Student translation follows the published setting; deterministic roles
// (alignment, NLI, back-translation) run at temperature 0; the remaining
// teacher-side roles use the teacher comparison temperature.
inline SamplingParams default_params(Role role) {
  SamplingParams p;
  switch (role) {
    case Role::translator:
      p.temperature = 0.6;
      p.top_p = 0.9;
      break;
    case Role::fl_align:
    case Role::nli_check:
    case Role::back_translate:
      p.temperature = 0.0;
      p.top_p = 1.0;
      break;
    default:
      p.temperature = 0.7;
      p.top_p = 0.9;
      break;
  }
  return p;
}

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(Role role, const std::string& prompt,
                               const SamplingParams& params) = 0;
};

// Fixture-directory backend: completion for a prompt lives in
// <sha256(role ‖ prompt)>.txt. A missing key is a hard error so fixture sets
// stay complete instead of silently degrading.
class MockBackend : public ModelBackend {
 public:
  explicit MockBackend(std::filesystem::path fixture_dir) : dir_(std::move(fixture_dir)) {}

  static std::string fixture_key(Role role, std::string_view prompt) {
    return sha256_hex(to_string(role) + std::string(prompt));
  }

  std::string name() const override { return "mock:" + dir_.string(); }

  std::string complete(Role role, const std::string& prompt, const SamplingParams&) override {
    std::string key = fixture_key(role, prompt);
    std::filesystem::path path = dir_ / (key + ".txt");
    if (!std::filesystem::exists(path)) {
      throw FixtureMissing("no fixture for role " + to_string(role) + ", key " + key +
                           ", prompt head: " + prompt.substr(0, 160));
    }
    return fsio::read_file(path);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// Canned single-response backend for unit tests.
class StaticBackend : public ModelBackend {
 public:
  explicit StaticBackend(std::string response) : response_(std::move(response)) {}
  std::string name() const override { return "static"; }
  std::string complete(Role, const std::string&, const SamplingParams&) override {
    return response_;
  }

 private:
  std::string response_;
};

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(AuditLog* audit = nullptr, size_t max_inflight = 8)
      : audit_(audit), gate_(max_inflight) {}

  void bind_default(std::shared_ptr<ModelBackend> backend) { default_backend_ = std::move(backend); }

  void bind(Role role, std::shared_ptr<ModelBackend> backend) {
    bindings_[role] = std::move(backend);
  }

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
  void set_max_attempts(int attempts) { max_attempts_ = attempts < 1 ? 1 : attempts; }

  bool has_backend(Role role) const {
    return bindings_.count(role) > 0 || default_backend_ != nullptr;
  }

  // tag carries pipeline context (an NL id, an eval candidate key) into the
  // audit log so gate-ordering properties can be checked after the fact.
  std::string complete(Role role, const std::string& prompt, const SamplingParams& params,
                       const std::string& tag = "") {
    params.validate();
    ModelBackend* backend = backend_for(role);
    GateHold hold(gate_);
    std::string prompt_hash = sha256_hex(prompt);
    for (int attempt = 0;; ++attempt) {
      auto t0 = std::chrono::steady_clock::now();
      auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
      };
      try {
        std::string completion = backend->complete(role, prompt, params);
        if (completion.empty()) {
          throw MalformedResponse("empty completion from backend " + backend->name());
        }
        audit(role, prompt_hash, tag, true, elapsed(),
              "backend=" + backend->name() + " attempt=" + std::to_string(attempt) + " " +
                  params.summary());
        return completion;
      } catch (const BackendTimeout& e) {
        audit(role, prompt_hash, tag, false, elapsed(), std::string("timeout: ") + e.what());
        if (attempt + 1 >= max_attempts_) throw;
        backoff(attempt, prompt_hash);
      } catch (const BackendRateLimited& e) {
        audit(role, prompt_hash, tag, false, elapsed(), std::string("rate_limited: ") + e.what());
        if (attempt + 1 >= max_attempts_) throw;
        backoff(attempt, prompt_hash);
      } catch (const ForgeError& e) {
        audit(role, prompt_hash, tag, false, elapsed(), std::string("error: ") + e.what());
        throw;
      }
    }
  }

  std::string complete_role(Role role, const Bindings& bindings, const std::string& tag = "") {
    return complete(role, render_prompt(role, bindings), default_params(role), tag);
  }

 private:
  ModelBackend* backend_for(Role role) const {
    auto it = bindings_.find(role);
    if (it != bindings_.end()) return it->second.get();
    if (default_backend_) return default_backend_.get();
    throw ConfigError("no backend configured for role " + to_string(role));
  }

  void backoff(int attempt, const std::string& prompt_hash) {
    // 1 s, 4 s, 16 s with deterministic ±20% jitter derived from the prompt.
    long base_ms = 1000;
    for (int i = 0; i < attempt; ++i) base_ms *= 4;
    unsigned char h = static_cast<unsigned char>(prompt_hash[attempt % prompt_hash.size()]);
    double factor = 0.8 + 0.4 * (static_cast<double>(h) / 255.0);
    auto delay = std::chrono::milliseconds(static_cast<long>(static_cast<double>(base_ms) * factor));
    if (sleeper_) {
      sleeper_(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }

  void audit(Role role, const std::string& prompt_hash, const std::string& tag, bool ok,
             long latency_ms, const std::string& detail) {
    if (!audit_) return;
    audit_->append(AuditEvent{"llm", to_string(role), prompt_hash, tag, ok, latency_ms, detail});
  }

  AuditLog* audit_;
  Gate gate_;
  std::shared_ptr<ModelBackend> default_backend_;
  std::map<Role, std::shared_ptr<ModelBackend>> bindings_;
  Sleeper sleeper_;
  int max_attempts_ = 3;
};

// First `||...||` span, trimmed.
inline std::string extract_delimited(std::string_view completion) {
  size_t open = completion.find("||");
  if (open == std::string_view::npos) throw ExtractionError("no ||...|| span in completion");
  size_t close = completion.find("||", open + 2);
  if (close == std::string_view::npos) throw ExtractionError("unterminated ||...|| span");
  return std::string(str::strip(completion.substr(open + 2, close - open - 2)));
}

// NL statements arrive as `||Theorem: ...||`; the label is format, not
// content, so it is stripped when present.
inline std::string extract_theorem_text(std::string_view completion) {
  std::string inner = extract_delimited(completion);
  std::string_view v = inner;
  if (str::starts_with(v, "Theorem:")) v = str::lstrip(v.substr(8));
  if (v.empty()) throw ExtractionError("empty theorem text in ||...|| span");
  return std::string(v);
}

// Substring from the first `theorem` token through the first `:= by sorry`
// (or end of text when the model kept going), code fences stripped,
// normalized. Raises when no theorem token exists.
inline std::string extract_theorem_block(std::string_view completion) {
  std::string text(completion);
  for (std::string_view fence : {"```lean4", "```lean", "```"}) {
    text = str::replace_all(text, fence, "\n");
  }
  auto ident_char = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '\'';
  };
  size_t pos = 0;
  size_t start = std::string::npos;
  while ((pos = text.find("theorem", pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !ident_char(text[pos - 1]);
    bool right_ok = pos + 7 >= text.size() || !ident_char(text[pos + 7]);
    if (left_ok && right_ok) {
      start = pos;
      break;
    }
    pos += 7;
  }
  if (start == std::string::npos) throw ExtractionError("no theorem declaration in completion");
  size_t term = text.find(":= by sorry", start);
  std::string block = term == std::string::npos ? text.substr(start)
                                                : text.substr(start, term + 11 - start);
  try {
    return normalize_fl_code(block);
  } catch (const ParseError& e) {
    throw ExtractionError(std::string("extracted block does not normalize: ") + e.what());
  }
}

}  // namespace forge
