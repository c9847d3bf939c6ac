#pragma once

// Benchmark evaluation: translate each item, compile the candidates, filter
// with a back-translation + NLI check, and report pass@k across seeds.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/jsonl.hpp"
#include "forge/lean_bridge.hpp"
#include "forge/llm_gateway.hpp"
#include "forge/pool.hpp"
#include "forge/prompts.hpp"
#include "forge/stats_math.hpp"
#include "forge/util.hpp"

namespace forge {

enum class BenchSource { proofnet, putnambench, mathqual, custom };

inline std::string to_string(BenchSource s) {
    switch (s) {
        case BenchSource::proofnet: return "proofnet";
        case BenchSource::putnambench: return "putnambench";
        case BenchSource::mathqual: return "mathqual";
        case BenchSource::custom: return "custom";
    }
    throw ForgeError("invalid BenchSource");
}

inline BenchSource bench_source_from_string(const std::string& s) {
    if (s == "proofnet") return BenchSource::proofnet;
    if (s == "putnambench") return BenchSource::putnambench;
    if (s == "mathqual") return BenchSource::mathqual;
    if (s == "custom") return BenchSource::custom;
    throw ParseError("unknown benchmark source: " + s);
}

struct BenchmarkItem {
    std::string id;
    std::string nl_text;
    BenchSource source = BenchSource::custom;
    std::optional<std::string> msc_class;

    bool operator==(const BenchmarkItem&) const = default;
};

inline void to_json(nlohmann::json& j, const BenchmarkItem& b) {
    j = nlohmann::json{{"id", b.id}, {"nl_text", b.nl_text}, {"source", to_string(b.source)}};
    if (b.msc_class) j["msc_class"] = *b.msc_class;
}

inline void from_json(const nlohmann::json& j, BenchmarkItem& b) {
    b.id = j.at("id").get<std::string>();
    b.nl_text = j.at("nl_text").get<std::string>();
    b.source = bench_source_from_string(j.at("source").get<std::string>());
    if (j.contains("msc_class") && !j.at("msc_class").is_null())
        b.msc_class = j.at("msc_class").get<std::string>();
    else
        b.msc_class.reset();
}

// Thin converter for ProofNet-style records ({"id", "nl_statement", ...}).
inline BenchmarkItem from_proofnet_record(const nlohmann::json& rec) {
    BenchmarkItem item;
    item.id = rec.at("id").get<std::string>();
    item.nl_text = rec.at("nl_statement").get<std::string>();
    item.source = BenchSource::proofnet;
    return item;
}

inline std::vector<BenchmarkItem> load_benchmark(const std::string& path) {
    auto items = read_jsonl<BenchmarkItem>(path);
    if (items.empty()) throw ParseError(path + ": empty benchmark");
    std::set<std::string> seen;
    for (const auto& item : items) {
        if (item.id.empty()) throw ParseError(path + ": benchmark item with empty id");
        if (item.nl_text.empty()) throw ParseError(path + ": empty nl_text for item " + item.id);
        if (!seen.insert(item.id).second) throw ParseError(path + ": duplicate benchmark id " + item.id);
    }
    return items;
}

struct AttemptRecord {
    std::string item_id;
    std::uint64_t seed = 0;
    int candidate_index = 0;
    std::string fl_code;
    bool compiled = false;
    std::optional<bool> nli_passed;
    bool success = false;

    bool operator==(const AttemptRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const AttemptRecord& a) {
    j = nlohmann::json{{"item_id", a.item_id},     {"seed", a.seed},
                       {"candidate_index", a.candidate_index}, {"fl_code", a.fl_code},
                       {"compiled", a.compiled},   {"success", a.success}};
    if (a.nli_passed) j["nli_passed"] = *a.nli_passed;
}

inline void from_json(const nlohmann::json& j, AttemptRecord& a) {
    a.item_id = j.at("item_id").get<std::string>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.candidate_index = j.at("candidate_index").get<int>();
    a.fl_code = j.at("fl_code").get<std::string>();
    a.compiled = j.at("compiled").get<bool>();
    a.success = j.at("success").get<bool>();
    if (j.contains("nli_passed") && !j.at("nli_passed").is_null())
        a.nli_passed = j.at("nli_passed").get<bool>();
    else
        a.nli_passed.reset();
}

// Unbiased estimator 1 - C(n-c, k)/C(n, k), evaluated as a running product so
// large n never overflows.
inline double pass_at_k(long n, long c, long k) {
    if (n < 0 || c < 0 || c > n) throw ForgeError("pass_at_k: need 0 <= c <= n");
    if (k < 1 || k > n) throw ForgeError("pass_at_k: need 1 <= k <= n");
    if (n - c < k) return 1.0;
    double q = 1.0;
    for (long i = 0; i < k; ++i)
        q *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - q;
}

struct CandidateOutcome {
    std::string fl_code;
    bool compiled = false;
    std::optional<bool> nli_passed;
    bool success = false;
};

// Runs the compile / back-translate / NLI tail of the validation pipeline for
// one already-generated candidate.  The NLI stage only runs for compiling
// code; an unreadable NLI verdict counts as a failure rather than a pass.
inline CandidateOutcome validate_candidate(Gateway& gateway, LeanBridge& bridge,
                                           const BenchmarkItem& item, const std::string& fl_code,
                                           const std::string& tag = "") {
    CandidateOutcome out;
    out.fl_code = fl_code;
    out.compiled = bridge.compile(fl_code, tag).success;
    if (!out.compiled) return out;

    try {
        const std::string back_translation = std::string(
            str::strip(gateway.complete_role(Role::back_translate, {{"formal_statement", fl_code}}, tag)));
        const std::string verdict = gateway.complete_role(
            Role::nli_check,
            {{"informal_statement", item.nl_text}, {"back_translation", back_translation}}, tag);
        out.nli_passed = (str::strip(extract_delimited(verdict)) == "same");
    } catch (const ExtractionError&) {
        out.nli_passed = false;
    } catch (const BackendTimeout&) {
        out.nli_passed = false;
    } catch (const BackendRateLimited&) {
        out.nli_passed = false;
    } catch (const MalformedResponse&) {
        out.nli_passed = false;
    }

    out.success = out.compiled && out.nli_passed.value_or(false);
    return out;
}

struct SeedRates {
    std::uint64_t seed = 0;
    std::map<int, double> pass_at;

    bool operator==(const SeedRates&) const = default;
};

inline void to_json(nlohmann::json& j, const SeedRates& s) {
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& [k, v] : s.pass_at) rates[std::to_string(k)] = v;
    j = nlohmann::json{{"seed", s.seed}, {"pass_at", rates}};
}

inline void from_json(const nlohmann::json& j, SeedRates& s) {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.pass_at.clear();
    for (const auto& [key, value] : j.at("pass_at").items())
        s.pass_at[std::stoi(key)] = value.get<double>();
}

struct EvalResult {
    std::vector<int> k_values;
    std::vector<std::uint64_t> seeds;
    std::string estimator = "unbiased";
    std::size_t item_count = 0;
    std::vector<SeedRates> per_seed;
    std::map<int, double> mean_pass_at;
    std::vector<AttemptRecord> attempts;

    bool operator==(const EvalResult&) const = default;
};

inline void to_json(nlohmann::json& j, const EvalResult& r) {
    nlohmann::json mean = nlohmann::json::object();
    for (const auto& [k, v] : r.mean_pass_at) mean[std::to_string(k)] = v;
    j = nlohmann::json{{"k_values", r.k_values},   {"seeds", r.seeds},
                       {"estimator", r.estimator}, {"item_count", r.item_count},
                       {"per_seed", r.per_seed},   {"mean", mean},
                       {"attempts", r.attempts}};
}

inline void from_json(const nlohmann::json& j, EvalResult& r) {
    r.k_values = j.at("k_values").get<std::vector<int>>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.estimator = j.at("estimator").get<std::string>();
    r.item_count = j.at("item_count").get<std::size_t>();
    r.per_seed = j.at("per_seed").get<std::vector<SeedRates>>();
    r.mean_pass_at.clear();
    for (const auto& [key, value] : j.at("mean").items())
        r.mean_pass_at[std::stoi(key)] = value.get<double>();
    r.attempts = j.at("attempts").get<std::vector<AttemptRecord>>();
}

struct EvalOptions {
    std::vector<int> k_values{1, 8, 32};
    std::vector<std::uint64_t> seeds{42, 43, 44, 45, 46};
    // When set, pass@k is the empirical any-success rate over the first k
    // candidates instead of the unbiased estimator.
    bool empirical_subsets = false;
    int workers = 8;
};

inline EvalResult evaluate(Gateway& gateway, LeanBridge& bridge,
                           const std::vector<BenchmarkItem>& items, const EvalOptions& opts = {}) {
    if (items.empty()) throw ForgeError("evaluate: empty benchmark");
    if (opts.k_values.empty()) throw ForgeError("evaluate: no k values");
    if (opts.seeds.empty()) throw ForgeError("evaluate: no seeds");
    for (int k : opts.k_values)
        if (k < 1) throw ForgeError("evaluate: k values must be >= 1");

    const int n = *std::max_element(opts.k_values.begin(), opts.k_values.end());
    const std::size_t n_items = items.size();
    const std::size_t n_seeds = opts.seeds.size();

    EvalResult result;
    result.k_values = opts.k_values;
    std::sort(result.k_values.begin(), result.k_values.end());
    result.k_values.erase(std::unique(result.k_values.begin(), result.k_values.end()),
                          result.k_values.end());
    result.seeds = opts.seeds;
    result.estimator = opts.empirical_subsets ? "empirical" : "unbiased";
    result.item_count = n_items;
    result.attempts.resize(n_items * n_seeds * static_cast<std::size_t>(n));

    // Flat task grid ordered by (item, seed, candidate); writing results by
    // index keeps aggregation independent of scheduling.
    parallel_for(result.attempts.size(), static_cast<std::size_t>(std::max(1, opts.workers)),
                 [&](std::size_t flat) {
        const std::size_t ii = flat / (n_seeds * n);
        const std::size_t si = (flat / n) % n_seeds;
        const int ci = static_cast<int>(flat % n);
        const BenchmarkItem& item = items[ii];
        const std::uint64_t seed = opts.seeds[si];

        AttemptRecord rec;
        rec.item_id = item.id;
        rec.seed = seed;
        rec.candidate_index = ci;

        const std::string tag = item.id + ":" + std::to_string(seed) + ":" + std::to_string(ci);
        try {
            const std::string prompt =
                render_prompt(Role::translator, {{"informal_statement", item.nl_text}});
            SamplingParams params = default_params(Role::translator);
            params.seed = seed;
            const std::string completion = gateway.complete(Role::translator, prompt, params, tag);
            const std::string code = extract_theorem_block(completion);
            const CandidateOutcome outcome = validate_candidate(gateway, bridge, item, code, tag);
            rec.fl_code = outcome.fl_code;
            rec.compiled = outcome.compiled;
            rec.nli_passed = outcome.nli_passed;
            rec.success = outcome.success;
        } catch (const ExtractionError&) {
        } catch (const BackendTimeout&) {
        } catch (const BackendRateLimited&) {
        } catch (const MalformedResponse&) {
        }
        result.attempts[flat] = std::move(rec);
    });

    for (std::size_t si = 0; si < n_seeds; ++si) {
        SeedRates rates;
        rates.seed = opts.seeds[si];
        for (int k : result.k_values) {
            double total = 0.0;
            for (std::size_t ii = 0; ii < n_items; ++ii) {
                const std::size_t base = (ii * n_seeds + si) * static_cast<std::size_t>(n);
                long c = 0;
                bool prefix_hit = false;
                for (int ci = 0; ci < n; ++ci) {
                    if (!result.attempts[base + ci].success) continue;
                    ++c;
                    if (ci < k) prefix_hit = true;
                }
                total += opts.empirical_subsets ? (prefix_hit ? 1.0 : 0.0) : pass_at_k(n, c, k);
            }
            rates.pass_at[k] = total / static_cast<double>(n_items);
        }
        result.per_seed.push_back(std::move(rates));
    }

    for (int k : result.k_values) {
        double total = 0.0;
        for (const auto& rates : result.per_seed) total += rates.pass_at.at(k);
        result.mean_pass_at[k] = total / static_cast<double>(n_seeds);
    }
    return result;
}

inline void save_eval_result(const EvalResult& result, const std::string& path) {
    fsio::write_file(path, nlohmann::json(result).dump(2) + "\n");
}

inline EvalResult load_eval_result(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(fsio::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j.get<EvalResult>();
}

// Per-k Welch p-values between the per-seed rate samples of two reports.
inline std::map<int, double> compare_eval_results(const EvalResult& a, const EvalResult& b) {
    if (a.k_values != b.k_values)
        throw ForgeError("compare_eval_results: reports use different k values");
    std::map<int, double> out;
    for (int k : a.k_values) {
        std::vector<double> xs, ys;
        for (const auto& rates : a.per_seed) xs.push_back(rates.pass_at.at(k));
        for (const auto& rates : b.per_seed) ys.push_back(rates.pass_at.at(k));
        out[k] = stats::welch_p(xs, ys);
    }
    return out;
}

} // namespace forge
