#pragma once

// Per-round statement synthesis: sample concept pairs, generate NL statements,
// translate them, compile with one revision retry, and rate the survivors.
// Accepted pairs and carryover NL statements partition the round's inputs.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/concept_repo.hpp"
#include "forge/lean_bridge.hpp"
#include "forge/lean_parser.hpp"
#include "forge/llm_gateway.hpp"
#include "forge/pool.hpp"
#include "forge/prompts.hpp"
#include "forge/rng.hpp"
#include "forge/statement_model.hpp"

namespace forge {

inline const std::vector<std::string>& synthesis_stage_keys() {
    static const std::vector<std::string> keys{
        "generated",       "translated",   "parsed",
        "compiled_first",  "revised",      "compiled_second",
        "aligned_good",    "aligned_average", "aligned_poor"};
    return keys;
}

struct SynthesisOutcome {
    std::vector<ParallelStatement> accepted;  // origin=synthetic, sorted by NL id
    std::vector<NLStatement> carryover;       // sorted by id
    int rejected_count = 0;                   // generation slots lost after retries
    std::map<std::string, int> stage_counts;

    SynthesisOutcome() {
        for (const auto& key : synthesis_stage_keys()) stage_counts[key] = 0;
    }
};

inline void to_json(nlohmann::json& j, const SynthesisOutcome& o) {
    j = nlohmann::json{{"accepted", o.accepted},
                       {"carryover", o.carryover},
                       {"rejected_count", o.rejected_count},
                       {"stage_counts", o.stage_counts}};
}

struct SynthesisOptions {
    int workers = 8;
    int generation_attempts = 3;  // sampling passes per NL slot before dropping it
};

struct GenerationBatch {
    std::vector<NLStatement> statements;
    int failed_slots = 0;
};

// Samples fresh concept pairs and turns them into NL statements.  Pair
// sampling stays sequential so the RNG stream is reproducible; only the
// completions run on the pool.  A slot whose completion cannot be parsed
// (or whose text collides with an already-taken id) is resampled up to the
// attempt cap, then dropped.
inline GenerationBatch generate_nl_batch(Gateway& gateway, const ConceptRepository& repo, int n,
                                         int round, SeededRng& rng,
                                         const SynthesisOptions& opts = {}) {
    if (n < 0) throw ForgeError("generate_nl_batch: negative count");
    GenerationBatch batch;
    if (n == 0) return batch;

    std::set<std::string> taken_ids;
    int pending = n;
    for (int attempt = 0; attempt < opts.generation_attempts && pending > 0; ++attempt) {
        std::vector<std::pair<Concept, Concept>> pairs;
        pairs.reserve(pending);
        for (int i = 0; i < pending; ++i) pairs.push_back(repo.sample_pair(rng));

        std::vector<std::optional<std::string>> texts(pairs.size());
        parallel_for(pairs.size(), static_cast<std::size_t>(std::max(1, opts.workers)),
                     [&](std::size_t i) {
            const auto& [a, b] = pairs[i];
            const std::string tag =
                "gen:r" + std::to_string(round) + ":" + std::to_string(attempt) + ":" + std::to_string(i);
            try {
                const std::string completion = gateway.complete_role(Role::nl_gen,
                                                                     {{"concept1", a.name},
                                                                      {"domain1", a.domain},
                                                                      {"concept2", b.name},
                                                                      {"domain2", b.domain}},
                                                                     tag);
                texts[i] = extract_theorem_text(completion);
            } catch (const ExtractionError&) {
            } catch (const BackendTimeout&) {
            } catch (const BackendRateLimited&) {
            } catch (const MalformedResponse&) {
            }
        });

        int still_pending = 0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (!texts[i]) {
                ++still_pending;
                continue;
            }
            NLStatement nl;
            nl.text = *texts[i];
            nl.id = make_nl_id(nl.text, round);
            nl.concepts = {pairs[i].first.id, pairs[i].second.id};
            nl.round_created = round;
            nl.status = NLStatus::pending;
            if (!taken_ids.insert(nl.id).second) {
                ++still_pending;  // same text sampled twice; try a fresh pair
                continue;
            }
            batch.statements.push_back(std::move(nl));
        }
        pending = still_pending;
    }
    batch.failed_slots = pending;
    return batch;
}

inline std::string render_diagnostics(const CompileReport& report) {
    if (report.diagnostics.empty()) return "(no diagnostics)";
    std::vector<std::string> lines;
    for (const auto& d : report.diagnostics)
        lines.push_back(to_string(d.severity) + ": line " + std::to_string(d.line) + ", column " +
                        std::to_string(d.column) + ": " + d.message);
    return str::join(lines, "\n");
}

// Student translation of one NL statement.  Throws ExtractionError when the
// completion contains no theorem; callers route that to carryover.
inline FLStatement translate(Gateway& gateway, const NLStatement& nl, const std::string& tag = "") {
    const std::string completion =
        gateway.complete_role(Role::translator, {{"informal_statement", nl.text}}, tag);
    FLStatement fl;
    fl.code = extract_theorem_block(completion);
    fl.nl_id = nl.id;
    fl.generator = Generator::student;
    fl.id = make_fl_id(nl.id, fl.code, fl.generator);
    return fl;
}

// One teacher revision, given the failed code and its compiler diagnostics.
inline FLStatement revise(Gateway& gateway, const FLStatement& fl, const NLStatement& nl,
                          const CompileReport& report, const std::string& tag = "") {
    const std::string completion =
        gateway.complete_role(Role::fl_rev,
                              {{"formal_statement", fl.code},
                               {"compiler_error_messages", render_diagnostics(report)},
                               {"informal_statement", nl.text}},
                              tag);
    FLStatement revised;
    revised.code = extract_theorem_block(completion);
    revised.nl_id = nl.id;
    revised.generator = Generator::teacher_revised;
    revised.id = make_fl_id(nl.id, revised.code, revised.generator);
    return revised;
}

namespace detail {

struct ChainResult {
    bool accepted = false;
    ParallelStatement pair;  // set when accepted
    bool translated = false, parsed = false, compiled_first = false;
    bool revised = false, compiled_second = false;
    std::optional<Rating> rating;
};

// Parse if possible and switch the statement to its formatted multiline form;
// unparseable code is left as-is so the compiler (not this parser) reports it.
inline void attach_parse(FLStatement& fl) {
    try {
        ParsedTheorem parsed = parse_statement(fl.code);
        fl.code = format_multiline(parsed);
        fl.parsed = std::move(parsed);
        fl.id = make_fl_id(fl.nl_id, fl.code, fl.generator);
    } catch (const ParseError&) {
        fl.parsed.reset();
    }
}

} // namespace detail

// Runs the full per-statement chain for each NL input.  Inputs must have
// distinct ids; outputs are canonicalized by id so worker scheduling never
// changes the manifest.
inline SynthesisOutcome run_round(Gateway& gateway, LeanBridge& bridge,
                                  const std::vector<NLStatement>& nl_inputs, int round,
                                  const SynthesisOptions& opts = {}) {
    {
        std::set<std::string> ids;
        for (const auto& nl : nl_inputs)
            if (!ids.insert(nl.id).second)
                throw ForgeError("run_round: duplicate NL id in inputs: " + nl.id);
    }

    std::vector<detail::ChainResult> results(nl_inputs.size());
    parallel_for(nl_inputs.size(), static_cast<std::size_t>(std::max(1, opts.workers)),
                 [&](std::size_t i) {
        const NLStatement& nl = nl_inputs[i];
        const std::string tag = "r" + std::to_string(round) + ":" + nl.id;
        detail::ChainResult& res = results[i];

        std::optional<FLStatement> candidate;
        try {
            FLStatement fl = translate(gateway, nl, tag);
            res.translated = true;
            detail::attach_parse(fl);
            res.parsed = fl.parsed.has_value();

            CompileReport first = bridge.compile(fl.code, tag);
            fl.compile = first;
            if (first.success) {
                res.compiled_first = true;
                candidate = std::move(fl);
            } else {
                FLStatement fixed = revise(gateway, fl, nl, first, tag);
                res.revised = true;
                detail::attach_parse(fixed);
                CompileReport second = bridge.compile(fixed.code, tag);
                fixed.compile = second;
                if (second.success) {
                    res.compiled_second = true;
                    candidate = std::move(fixed);
                }
            }
        } catch (const ExtractionError&) {
        } catch (const BackendTimeout&) {
        } catch (const BackendRateLimited&) {
        } catch (const MalformedResponse&) {
        }

        if (!candidate) return;  // double compile failure or no FL at all

        try {
            const std::string verdict = gateway.complete_role(
                Role::fl_align,
                {{"formal_statement", candidate->code}, {"informal_statement", nl.text}}, tag);
            res.rating = rating_from_answer(extract_delimited(verdict));
        } catch (const ExtractionError&) {
        } catch (const BackendTimeout&) {
        } catch (const BackendRateLimited&) {
        } catch (const MalformedResponse&) {
        }
        if (!res.rating) return;  // unreadable rating: keep the NL for next round

        if (accept_rating({*res.rating})) {
            res.accepted = true;
            res.pair.nl = nl;
            res.pair.nl.status = NLStatus::accepted;
            res.pair.fl = std::move(*candidate);
            res.pair.origin = Origin::synthetic;
            res.pair.rating = res.rating;
            res.pair.round = round;
        }
    });

    SynthesisOutcome outcome;
    for (std::size_t i = 0; i < nl_inputs.size(); ++i) {
        const detail::ChainResult& res = results[i];
        outcome.stage_counts["translated"] += res.translated ? 1 : 0;
        outcome.stage_counts["parsed"] += res.parsed ? 1 : 0;
        outcome.stage_counts["compiled_first"] += res.compiled_first ? 1 : 0;
        outcome.stage_counts["revised"] += res.revised ? 1 : 0;
        outcome.stage_counts["compiled_second"] += res.compiled_second ? 1 : 0;
        if (res.rating) {
            if (*res.rating == Rating::good) outcome.stage_counts["aligned_good"] += 1;
            else if (*res.rating == Rating::average) outcome.stage_counts["aligned_average"] += 1;
            else outcome.stage_counts["aligned_poor"] += 1;
        }
        if (res.accepted) {
            outcome.accepted.push_back(res.pair);
        } else {
            NLStatement nl = nl_inputs[i];
            nl.status = NLStatus::carryover;
            outcome.carryover.push_back(std::move(nl));
        }
    }

    std::sort(outcome.accepted.begin(), outcome.accepted.end(),
              [](const ParallelStatement& a, const ParallelStatement& b) { return a.nl.id < b.nl.id; });
    std::sort(outcome.carryover.begin(), outcome.carryover.end(),
              [](const NLStatement& a, const NLStatement& b) { return a.id < b.id; });

    if (outcome.accepted.size() + outcome.carryover.size() != nl_inputs.size())
        throw ForgeError("run_round: outcome does not partition the inputs");
    return outcome;
}

struct SynthesisRun {
    SynthesisOutcome outcome;
    int requested_new = 0;  // quota attempted this round
    int generated = 0;      // NL statements actually created
    int carryover_in = 0;
};

// Convenience wrapper for one full synthesis pass: generate the fresh quota,
// prepend the carryover from the previous round, and run the chain.  Slots
// whose generation failed outright count as rejected.
inline SynthesisRun synthesize(Gateway& gateway, LeanBridge& bridge, const ConceptRepository& repo,
                               int n_new, const std::vector<NLStatement>& carryover_in, int round,
                               SeededRng& rng, const SynthesisOptions& opts = {}) {
    SynthesisRun run;
    run.requested_new = n_new;
    run.carryover_in = static_cast<int>(carryover_in.size());

    GenerationBatch batch = generate_nl_batch(gateway, repo, n_new, round, rng, opts);
    run.generated = static_cast<int>(batch.statements.size());

    std::vector<NLStatement> inputs;
    inputs.reserve(carryover_in.size() + batch.statements.size());
    for (NLStatement nl : carryover_in) {
        nl.status = NLStatus::pending;
        inputs.push_back(std::move(nl));
    }
    for (auto& nl : batch.statements) inputs.push_back(std::move(nl));

    run.outcome = run_round(gateway, bridge, inputs, round, opts);
    run.outcome.stage_counts["generated"] = run.generated;
    run.outcome.rejected_count += batch.failed_slots;
    return run;
}

} // namespace forge
