#pragma once

// Dataset expansion from accepted pairs: harvest the last intermediate proof
// state of a prover attempt, and contrapose each hypothesis, keeping the most
// dissimilar compiling variant.  New FL statements get their NL side filled
// in by translation, and BLEU against the source measures novelty.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/lean_bridge.hpp"
#include "forge/lean_parser.hpp"
#include "forge/llm_gateway.hpp"
#include "forge/pool.hpp"
#include "forge/statement_model.hpp"
#include "forge/text_metrics.hpp"

namespace forge {

enum class AugMethod { proof, contraposition };

inline std::string to_string(AugMethod m) {
    return m == AugMethod::proof ? "proof" : "contraposition";
}

inline AugMethod aug_method_from_string(const std::string& s) {
    if (s == "proof") return AugMethod::proof;
    if (s == "contraposition") return AugMethod::contraposition;
    throw ParseError("unknown augmentation method: " + s);
}

struct AugmentationRecord {
    std::string source_fl_id;
    AugMethod method = AugMethod::proof;
    std::string new_code;
    long distance = 0;  // Levenshtein to the source, single-line forms
    bool selected = false;

    bool operator==(const AugmentationRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const AugmentationRecord& r) {
    j = nlohmann::json{{"source_fl_id", r.source_fl_id},
                       {"method", to_string(r.method)},
                       {"new_code", r.new_code},
                       {"distance", r.distance},
                       {"selected", r.selected}};
}

inline void from_json(const nlohmann::json& j, AugmentationRecord& r) {
    r.source_fl_id = j.at("source_fl_id").get<std::string>();
    r.method = aug_method_from_string(j.at("method").get<std::string>());
    r.new_code = j.at("new_code").get<std::string>();
    r.distance = j.at("distance").get<long>();
    r.selected = j.at("selected").get<bool>();
}

struct AugmentOptions {
    // The source phrasing covers completed proofs only; by default the last
    // successful state of a stalled proof is still harvested.
    bool proof_requires_completion = false;
    int workers = 8;
};

namespace detail {

// Tactic block of a prover completion: everything after the first ":= by"
// (or the whole text when the stub is not echoed), minus fences and blanks.
inline std::vector<std::string> extract_tactics(std::string_view completion) {
    std::string text(completion);
    for (std::string_view fence : {"```lean4", "```lean", "```"})
        text = str::replace_all(text, fence, "\n");
    const std::size_t stub = text.find(":= by");
    if (stub != std::string::npos) text = text.substr(stub + 5);

    std::vector<std::string> tactics;
    for (const auto& line : str::split_lines(text)) {
        std::string t(str::strip(line));
        if (t.empty()) continue;
        if (tactics.empty() && t == "by") continue;
        tactics.push_back(std::move(t));
    }
    return tactics;
}

inline std::string single_line_form(const FLStatement& fl) {
    if (fl.parsed) return reassemble_single_line(*fl.parsed);
    try {
        return reassemble_single_line(parse_statement(fl.code));
    } catch (const ParseError&) {
        return fl.code;
    }
}

inline std::string source_theorem_name(const FLStatement& fl) {
    if (fl.parsed) return fl.parsed->name;
    try {
        return parse_statement(fl.code).name;
    } catch (const ParseError&) {
        return "tm_name";
    }
}

} // namespace detail

// Asks the prover for one proof attempt, replays the tactics, and rebuilds a
// statement from the last recorded intermediate state.  At most one record
// per source; a variant identical to its source (distance 0) is never
// selected, and only compiling variants can be.
inline std::vector<AugmentationRecord> augment_via_proof(Gateway& gateway, LeanBridge& bridge,
                                                         const ParallelStatement& ps,
                                                         const AugmentOptions& opts = {},
                                                         const std::string& tag = "") {
    if (ps.fl.compile && !ps.fl.compile->success) return {};

    std::string stub(str::rstrip(ps.fl.code));
    if (str::ends_with(stub, "sorry")) stub = str::rstrip(stub.substr(0, stub.size() - 5));

    std::vector<std::string> tactics;
    try {
        const std::string completion =
            gateway.complete_role(Role::prover, {{"formal_statement", std::string(stub)}}, tag);
        tactics = detail::extract_tactics(completion);
    } catch (const ExtractionError&) {
        return {};
    } catch (const BackendTimeout&) {
        return {};
    } catch (const BackendRateLimited&) {
        return {};
    } catch (const MalformedResponse&) {
        return {};
    }
    if (tactics.empty()) return {};

    ProofTrace trace = bridge.run_tactics(ps.fl.code, tactics, tag);
    if (trace.states.empty()) return {};
    if (opts.proof_requires_completion && !trace.completed) return {};

    AugmentationRecord rec;
    rec.source_fl_id = ps.fl.id;
    rec.method = AugMethod::proof;
    try {
        rec.new_code = state_to_statement(trace.states.back(), detail::source_theorem_name(ps.fl));
    } catch (const ParseError&) {
        return {};
    }
    rec.distance = levenshtein(rec.new_code, detail::single_line_form(ps.fl));
    const bool compiled = bridge.compile(rec.new_code, tag).success;
    rec.selected = compiled && rec.distance > 0;
    return {rec};
}

// Contraposes the statement once per hypothesis and marks as selected the
// compiling variant with maximal edit distance; ties go to the hypothesis
// appearing first in the source.
inline std::vector<AugmentationRecord> augment_via_contraposition(LeanBridge& bridge,
                                                                  const ParallelStatement& ps,
                                                                  const std::string& tag = "") {
    ParsedTheorem parsed;
    if (ps.fl.parsed) {
        parsed = *ps.fl.parsed;
    } else {
        try {
            parsed = parse_statement(ps.fl.code);
        } catch (const ParseError&) {
            return {};
        }
    }
    if (parsed.hypotheses.empty()) return {};

    const std::string source_line = detail::single_line_form(ps.fl);
    std::vector<AugmentationRecord> records;
    std::vector<bool> compiled_flags;
    for (const auto& hyp : parsed.hypotheses) {
        if (hyp.name.empty()) continue;
        AugmentationRecord rec;
        rec.source_fl_id = ps.fl.id;
        rec.method = AugMethod::contraposition;
        try {
            const GoalState state = bridge.contrapose(ps.fl.code, hyp.name, tag);
            rec.new_code = state_to_statement(state, parsed.name);
        } catch (const ToolchainError&) {
            continue;
        } catch (const ParseError&) {
            continue;
        }
        rec.distance = levenshtein(rec.new_code, source_line);
        records.push_back(std::move(rec));
        compiled_flags.push_back(bridge.compile(records.back().new_code, tag).success);
    }

    long best = -1;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!compiled_flags[i] || records[i].distance == 0) continue;
        if (records[i].distance > best) {
            best = records[i].distance;
            best_idx = i;
        }
    }
    if (best > 0) records[best_idx].selected = true;
    return records;
}

// Translates an augmented FL statement back into NL and assembles the pair.
// Throws ExtractionError when the completion has no ||Theorem: ...|| span;
// callers drop the record and count the failure.
inline ParallelStatement backfill_nl(Gateway& gateway, LeanBridge& bridge,
                                     const AugmentationRecord& record,
                                     const ParallelStatement& source, int round,
                                     const std::string& tag = "") {
    if (!record.selected) throw ForgeError("backfill_nl: record not selected");

    const std::string completion =
        gateway.complete_role(Role::fl_to_nl, {{"formal_statement", record.new_code}}, tag);
    const std::string text = extract_theorem_text(completion);

    ParallelStatement pair;
    pair.nl.text = text;
    pair.nl.id = make_nl_id(text, round);
    pair.nl.concepts = source.nl.concepts;
    pair.nl.round_created = round;
    pair.nl.status = NLStatus::accepted;

    pair.fl.code = record.new_code;
    pair.fl.nl_id = pair.nl.id;
    // The generator enum distinguishes student from teacher output; derived
    // statements keep the student attribution of the pipeline that owns them.
    pair.fl.generator = Generator::student;
    pair.fl.id = make_fl_id(pair.nl.id, pair.fl.code, pair.fl.generator);
    try {
        pair.fl.parsed = parse_statement(pair.fl.code);
    } catch (const ParseError&) {
        pair.fl.parsed.reset();
    }
    pair.fl.compile = bridge.compile(record.new_code, tag);
    if (!pair.fl.compile->success)
        throw ForgeError("backfill_nl: selected record no longer compiles: " + record.source_fl_id);

    pair.origin = record.method == AugMethod::proof ? Origin::proof_aug : Origin::contra_aug;
    pair.rating.reset();
    pair.round = round;
    return pair;
}

// Mean BLEU of new_code against the source code, grouped by method.  Methods
// with no records are absent from the result.
inline std::map<std::string, double> diversity_report(
    const std::vector<AugmentationRecord>& records,
    const std::map<std::string, FLStatement>& sources) {
    std::map<std::string, double> sums;
    std::map<std::string, int> counts;
    for (const auto& rec : records) {
        auto it = sources.find(rec.source_fl_id);
        if (it == sources.end())
            throw ForgeError("diversity_report: unknown source id " + rec.source_fl_id);
        const std::string key = to_string(rec.method);
        sums[key] += bleu(rec.new_code, it->second.code);
        counts[key] += 1;
    }
    std::map<std::string, double> out;
    for (const auto& [key, total] : sums) out[key] = total / counts.at(key);
    return out;
}

// A backfilled pair together with its lineage, as persisted in
// augmented.jsonl.
struct AugmentedPair {
    std::string source_fl_id;
    AugMethod method = AugMethod::proof;
    ParallelStatement pair;

    bool operator==(const AugmentedPair&) const = default;
};

inline void to_json(nlohmann::json& j, const AugmentedPair& a) {
    j = nlohmann::json{{"source_fl_id", a.source_fl_id},
                       {"method", to_string(a.method)},
                       {"pair", a.pair}};
}

inline void from_json(const nlohmann::json& j, AugmentedPair& a) {
    a.source_fl_id = j.at("source_fl_id").get<std::string>();
    a.method = aug_method_from_string(j.at("method").get<std::string>());
    a.pair = j.at("pair").get<ParallelStatement>();
}

struct AugmentationResult {
    std::vector<AugmentationRecord> records;  // every candidate, both methods
    std::vector<AugmentedPair> pairs;         // backfilled pairs for selected records
    int backfill_failures = 0;
    std::map<std::string, double> diversity;  // over selected records only
};

// Runs both augmentation methods over a round's accepted pairs and backfills
// NL text for the selected variants.  Record and pair order follows the
// input order (sources are already canonical), so output is deterministic.
inline AugmentationResult augment_accepted(Gateway& gateway, LeanBridge& bridge,
                                           const std::vector<ParallelStatement>& accepted,
                                           int round, const AugmentOptions& opts = {}) {
    struct PerSource {
        std::vector<AugmentationRecord> records;
        std::vector<AugmentedPair> pairs;
        int backfill_failures = 0;
    };
    std::vector<PerSource> partial(accepted.size());

    parallel_for(accepted.size(), static_cast<std::size_t>(std::max(1, opts.workers)),
                 [&](std::size_t i) {
        const ParallelStatement& ps = accepted[i];
        if (ps.origin != Origin::synthetic) return;
        PerSource& out = partial[i];
        const std::string tag = "aug:r" + std::to_string(round) + ":" + ps.fl.id;

        auto proof_recs = augment_via_proof(gateway, bridge, ps, opts, tag);
        auto contra_recs = augment_via_contraposition(bridge, ps, tag);
        out.records.reserve(proof_recs.size() + contra_recs.size());
        for (auto& rec : proof_recs) out.records.push_back(std::move(rec));
        for (auto& rec : contra_recs) out.records.push_back(std::move(rec));

        for (const auto& rec : out.records) {
            if (!rec.selected) continue;
            try {
                out.pairs.push_back(AugmentedPair{
                    rec.source_fl_id, rec.method,
                    backfill_nl(gateway, bridge, rec, ps, round, tag)});
            } catch (const ExtractionError&) {
                ++out.backfill_failures;
            } catch (const BackendTimeout&) {
                ++out.backfill_failures;
            } catch (const BackendRateLimited&) {
                ++out.backfill_failures;
            } catch (const MalformedResponse&) {
                ++out.backfill_failures;
            }
        }
    });

    AugmentationResult result;
    std::map<std::string, FLStatement> sources;
    for (const auto& ps : accepted) sources[ps.fl.id] = ps.fl;

    std::vector<AugmentationRecord> selected;
    for (auto& per : partial) {
        for (auto& rec : per.records) {
            if (rec.selected) selected.push_back(rec);
            result.records.push_back(std::move(rec));
        }
        for (auto& pair : per.pairs) result.pairs.push_back(std::move(pair));
        result.backfill_failures += per.backfill_failures;
    }
    result.diversity = diversity_report(selected, sources);
    return result;
}

} // namespace forge
