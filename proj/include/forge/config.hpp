#pragma once

// Run configuration: mode, fixture locations, toolchain launch settings, and
// per-role backend bindings, read from a small TOML subset (sections,
// key = value, strings/ints/bools, # comments).  Also provides the
// OpenAI-style HTTP backend used in live mode and factories that assemble
// the gateway and toolchain from a loaded config.

#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "forge/lean_bridge.hpp"
#include "forge/llm_gateway.hpp"
#include "forge/process_client.hpp"
#include "forge/util.hpp"

namespace forge {

namespace toml {

// Flat section.key -> raw value view of a TOML-subset document.
inline std::map<std::string, std::string> parse(const std::string& text, const std::string& where) {
    std::map<std::string, std::string> out;
    std::string section;
    int lineno = 0;
    for (const auto& raw : str::split_lines(text)) {
        ++lineno;
        std::string line(str::strip(raw));
        if (line.empty() || line[0] == '#') continue;
        const std::string at = where + ":" + std::to_string(lineno);

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(at + ": unterminated section header");
            section = std::string(str::strip(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ParseError(at + ": empty section name");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(at + ": expected key = value");
        std::string key(str::strip(line.substr(0, eq)));
        std::string value(str::strip(line.substr(eq + 1)));
        if (key.empty()) throw ParseError(at + ": empty key");
        if (value.empty()) throw ParseError(at + ": empty value for " + key);

        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"')
                throw ParseError(at + ": unterminated string for " + key);
            std::string unescaped;
            for (std::size_t i = 1; i + 1 < value.size(); ++i) {
                if (value[i] == '\\' && i + 2 < value.size()) {
                    ++i;
                    switch (value[i]) {
                        case 'n': unescaped += '\n'; break;
                        case 't': unescaped += '\t'; break;
                        case '"': unescaped += '"'; break;
                        case '\\': unescaped += '\\'; break;
                        default:
                            throw ParseError(at + ": unsupported escape in " + key);
                    }
                } else {
                    unescaped += value[i];
                }
            }
            value = unescaped;
        } else {
            // Bare values may carry a trailing comment.
            const std::size_t hash = value.find('#');
            if (hash != std::string::npos) value = std::string(str::strip(value.substr(0, hash)));
        }

        const std::string full_key = section.empty() ? key : section + "." + key;
        if (!out.emplace(full_key, value).second)
            throw ParseError(at + ": duplicate key " + full_key);
    }
    return out;
}

} // namespace toml

enum class RunMode { mock, live };

inline std::string to_string(RunMode m) { return m == RunMode::mock ? "mock" : "live"; }

struct BackendConfig {
    std::string base_url;
    std::string model;
    std::string auth_env;  // name of the env var holding the credential
};

struct ForgeConfig {
    RunMode mode = RunMode::mock;
    std::string run_dir = "runs";
    std::string fixture_dir = "fixtures/llm";

    std::string toolchain_command;
    std::string toolchain_version;
    std::string toolchain_script;  // mock scripted-rule file, optional
    int toolchain_workers = 4;
    long toolchain_timeout_ms = 120000;

    int llm_inflight = 8;
    int pipeline_workers = 8;

    std::optional<BackendConfig> default_backend;
    std::map<Role, BackendConfig> backends;

    static ForgeConfig load(const std::string& path);
    void validate(const std::string& where) const;
};

inline void ForgeConfig::validate(const std::string& where) const {
    if (llm_inflight < 1) throw ConfigError(where + ": pools.llm must be >= 1");
    if (pipeline_workers < 1) throw ConfigError(where + ": pools.workers must be >= 1");
    if (toolchain_workers < 1) throw ConfigError(where + ": toolchain.workers must be >= 1");
    if (toolchain_timeout_ms < 1) throw ConfigError(where + ": toolchain.timeout_ms must be >= 1");

    if (mode == RunMode::mock) {
        if (fixture_dir.empty()) throw ConfigError(where + ": mock mode needs fixture_dir");
        if (default_backend || !backends.empty())
            throw ConfigError(where + ": mock mode forbids network backends (field backends)");
    } else {
        if (toolchain_command.empty())
            throw ConfigError(where + ": live mode needs toolchain.command");
        if (!default_backend && backends.empty())
            throw ConfigError(where + ": live mode needs at least one backend (field backends)");
        auto check = [&](const std::string& label, const BackendConfig& b) {
            if (b.base_url.empty())
                throw ConfigError(where + ": backend " + label + " missing base_url");
            if (b.model.empty()) throw ConfigError(where + ": backend " + label + " missing model");
            if (!b.auth_env.empty() && std::getenv(b.auth_env.c_str()) == nullptr)
                throw ConfigError(where + ": backend " + label + " credential env var " +
                                  b.auth_env + " is not set");
        };
        if (default_backend) check("default", *default_backend);
        for (const auto& [role, b] : backends) check(to_string(role), b);
    }
}

inline ForgeConfig ForgeConfig::load(const std::string& path) {
    const auto kv = toml::parse(fsio::read_file(path), path);
    ForgeConfig cfg;

    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    auto get_int = [&](const std::string& key, auto fallback) -> decltype(fallback) {
        auto v = get(key);
        if (!v) return fallback;
        try {
            return static_cast<decltype(fallback)>(std::stol(*v));
        } catch (const std::exception&) {
            throw ConfigError(path + ": field " + key + " is not an integer: " + *v);
        }
    };

    if (auto v = get("mode")) {
        if (*v == "mock") cfg.mode = RunMode::mock;
        else if (*v == "live") cfg.mode = RunMode::live;
        else throw ConfigError(path + ": field mode must be \"mock\" or \"live\", got " + *v);
    }
    if (auto v = get("run_dir")) cfg.run_dir = *v;
    if (auto v = get("fixture_dir")) cfg.fixture_dir = *v;

    if (auto v = get("toolchain.command")) cfg.toolchain_command = *v;
    if (auto v = get("toolchain.version")) cfg.toolchain_version = *v;
    if (auto v = get("toolchain.script")) cfg.toolchain_script = *v;
    cfg.toolchain_workers = get_int("toolchain.workers", cfg.toolchain_workers);
    cfg.toolchain_timeout_ms = get_int("toolchain.timeout_ms", cfg.toolchain_timeout_ms);

    cfg.llm_inflight = get_int("pools.llm", cfg.llm_inflight);
    cfg.pipeline_workers = get_int("pools.workers", cfg.pipeline_workers);

    // Backend sections: [backends.default] or [backends.<role>].
    std::map<std::string, BackendConfig> raw_backends;
    for (const auto& [key, value] : kv) {
        if (!str::starts_with(key, "backends.")) continue;
        const std::string rest = key.substr(9);
        const std::size_t dot = rest.find('.');
        if (dot == std::string::npos)
            throw ConfigError(path + ": malformed backend key " + key);
        const std::string label = rest.substr(0, dot);
        const std::string field = rest.substr(dot + 1);
        BackendConfig& b = raw_backends[label];
        if (field == "base_url") b.base_url = value;
        else if (field == "model") b.model = value;
        else if (field == "auth_env") b.auth_env = value;
        else throw ConfigError(path + ": unknown backend field " + key);
    }
    for (auto& [label, b] : raw_backends) {
        if (label == "default") cfg.default_backend = b;
        else cfg.backends[role_from_string(label)] = b;
    }

    cfg.validate(path);
    return cfg;
}

// Chat-completions client for OpenAI-style endpoints.  Rate limiting and
// transport failures map onto the gateway's retryable exceptions; anything
// with an unexpected shape is malformed and surfaces immediately.
class HttpBackend : public ModelBackend {
  public:
    explicit HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
        const std::size_t scheme = cfg_.base_url.find("://");
        if (scheme == std::string::npos)
            throw ConfigError("backend base_url needs a scheme: " + cfg_.base_url);
        const std::size_t path = cfg_.base_url.find('/', scheme + 3);
        if (path == std::string::npos) {
            origin_ = cfg_.base_url;
        } else {
            origin_ = cfg_.base_url.substr(0, path);
            prefix_ = cfg_.base_url.substr(path);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
    }

    std::string name() const override { return "http:" + cfg_.model; }

    std::string complete(Role role, const std::string& prompt,
                         const SamplingParams& params) override {
        (void)role;
        nlohmann::json body{{"model", cfg_.model},
                            {"messages", nlohmann::json::array({nlohmann::json{
                                             {"role", "user"}, {"content", prompt}}})},
                            {"temperature", params.temperature},
                            {"top_p", params.top_p},
                            {"max_tokens", params.max_tokens}};
        if (params.seed) body["seed"] = *params.seed;

        httplib::Client client(origin_);
        client.set_connection_timeout(30);
        client.set_read_timeout(300);
        httplib::Headers headers;
        if (!cfg_.auth_env.empty()) {
            const char* token = std::getenv(cfg_.auth_env.c_str());
            if (token == nullptr)
                throw ConfigError("credential env var " + cfg_.auth_env + " is not set");
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }

        auto res = client.Post(prefix_ + "/chat/completions", headers, body.dump(),
                               "application/json");
        if (!res) throw BackendTimeout("no response from " + origin_);
        if (res->status == 429) throw BackendRateLimited("429 from " + origin_);
        if (res->status != 200)
            throw MalformedResponse("http status " + std::to_string(res->status) + " from " +
                                    origin_);
        try {
            const nlohmann::json j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw MalformedResponse(std::string("unexpected completion shape: ") + e.what());
        }
    }

  private:
    BackendConfig cfg_;
    std::string origin_;
    std::string prefix_;
};

// Assembles the gateway for a config: one shared mock backend in mock mode,
// per-role HTTP backends (with a default fallback) in live mode.
inline std::unique_ptr<Gateway> make_gateway(const ForgeConfig& cfg, AuditLog* audit) {
    auto gateway = std::make_unique<Gateway>(audit, cfg.llm_inflight);
    if (cfg.mode == RunMode::mock) {
        gateway->bind_default(std::make_shared<MockBackend>(cfg.fixture_dir));
        return gateway;
    }
    if (cfg.default_backend)
        gateway->bind_default(std::make_shared<HttpBackend>(*cfg.default_backend));
    for (const auto& [role, backend] : cfg.backends)
        gateway->bind(role, std::make_shared<HttpBackend>(backend));
    return gateway;
}

inline std::shared_ptr<ToolchainClient> make_toolchain(const ForgeConfig& cfg) {
    if (cfg.mode == RunMode::mock) {
        if (!cfg.toolchain_script.empty())
            return MockToolchain::from_script_file(cfg.toolchain_script);
        return std::make_shared<MockToolchain>();
    }
    return std::make_shared<ProcessToolchain>(cfg.toolchain_command, cfg.toolchain_workers,
                                              cfg.toolchain_timeout_ms);
}

inline std::unique_ptr<LeanBridge> make_bridge(const ForgeConfig& cfg,
                                               std::shared_ptr<ToolchainClient> client,
                                               AuditLog* audit) {
    return std::make_unique<LeanBridge>(std::move(client), audit, cfg.toolchain_workers,
                                        cfg.toolchain_timeout_ms);
}

} // namespace forge
