#pragma once

// Round orchestration: drive synthesis and augmentation for round after
// round, persist the per-round artifacts under runs/<run-id>/round-<R>/, and
// aggregate manifest statistics across a run.  Student fine-tuning happens
// outside this process; between rounds the operator rebinds the student
// backend and the loop merely offers a checkpoint hook.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/augmentation.hpp"
#include "forge/jsonl.hpp"
#include "forge/rng.hpp"
#include "forge/sha256.hpp"
#include "forge/synthesis.hpp"

namespace forge {

struct RoundConfig {
    int round = 1;
    int new_nl_quota = 10000;
    std::uint64_t seed = 42;
    SynthesisOptions synthesis;
    AugmentOptions augment;
};

struct RoundManifest {
    int round = 1;
    int inputs_new = 0;        // fresh NL slots attempted this round
    int inputs_carryover = 0;  // NL statements carried in from the previous round
    std::string carryover_hash;
    int accepted_synthetic = 0;
    int proof_aug = 0;
    int contra_aug = 0;
    int carryover_out = 0;
    int rejected = 0;
    double student_ratio = 0.0;

    bool operator==(const RoundManifest&) const = default;
};

inline void to_json(nlohmann::json& j, const RoundManifest& m) {
    j = nlohmann::json{{"round", m.round},
                       {"inputs", nlohmann::json{{"new", m.inputs_new},
                                                 {"carryover", m.inputs_carryover},
                                                 {"carryover_hash", m.carryover_hash}}},
                       {"accepted_synthetic", m.accepted_synthetic},
                       {"proof_aug", m.proof_aug},
                       {"contra_aug", m.contra_aug},
                       {"carryover_out", m.carryover_out},
                       {"rejected", m.rejected},
                       {"student_ratio", m.student_ratio}};
}

inline void from_json(const nlohmann::json& j, RoundManifest& m) {
    m.round = j.at("round").get<int>();
    m.inputs_new = j.at("inputs").at("new").get<int>();
    m.inputs_carryover = j.at("inputs").at("carryover").get<int>();
    m.carryover_hash = j.at("inputs").at("carryover_hash").get<std::string>();
    m.accepted_synthetic = j.at("accepted_synthetic").get<int>();
    m.proof_aug = j.at("proof_aug").get<int>();
    m.contra_aug = j.at("contra_aug").get<int>();
    m.carryover_out = j.at("carryover_out").get<int>();
    m.rejected = j.at("rejected").get<int>();
    m.student_ratio = j.at("student_ratio").get<double>();
}

struct RoundStats {
    long synthetic = 0;
    long proof_aug = 0;
    long contra_aug = 0;
    long total = 0;

    bool operator==(const RoundStats&) const = default;
};

inline void to_json(nlohmann::json& j, const RoundStats& s) {
    j = nlohmann::json{{"synthetic", s.synthetic},
                       {"proof_aug", s.proof_aug},
                       {"contra_aug", s.contra_aug},
                       {"total", s.total}};
}

inline std::string default_run_id(std::uint64_t seed) {
    return "run-s" + std::to_string(seed);
}

inline std::filesystem::path round_dir(const std::filesystem::path& run_dir, int round) {
    return run_dir / ("round-" + std::to_string(round));
}

namespace detail {

inline std::string carryover_fingerprint(const std::vector<NLStatement>& carryover) {
    std::string joined;
    for (const auto& nl : carryover) {
        joined += nl.id;
        joined += '\n';
    }
    return sha256_hex(joined).substr(0, 16);
}

} // namespace detail

// Executes one round end to end and persists its artifacts.  Re-running with
// identical inputs must reproduce the manifest byte for byte; divergence
// against an existing manifest is an error rather than a silent overwrite.
inline RoundManifest run_iteration(Gateway& gateway, LeanBridge& bridge,
                                   const ConceptRepository& repo, const RoundConfig& cfg,
                                   const std::vector<NLStatement>& prev_carryover,
                                   const std::filesystem::path& run_dir) {
    if (cfg.round < 1) throw ConfigError("round must be >= 1");
    if (cfg.new_nl_quota < 0) throw ConfigError("new_nl_quota must be >= 0");

    SeededRng rng(derive_seed(cfg.seed, "round-" + std::to_string(cfg.round)));
    SynthesisRun synth = synthesize(gateway, bridge, repo, cfg.new_nl_quota, prev_carryover,
                                    cfg.round, rng, cfg.synthesis);

    AugmentationResult aug;
    if (!synth.outcome.accepted.empty())
        aug = augment_accepted(gateway, bridge, synth.outcome.accepted, cfg.round, cfg.augment);

    RoundManifest manifest;
    manifest.round = cfg.round;
    manifest.inputs_new = synth.requested_new;
    manifest.inputs_carryover = synth.carryover_in;
    manifest.carryover_hash = detail::carryover_fingerprint(prev_carryover);
    manifest.accepted_synthetic = static_cast<int>(synth.outcome.accepted.size());
    manifest.carryover_out = static_cast<int>(synth.outcome.carryover.size());
    manifest.rejected = synth.outcome.rejected_count;

    int student_accepted = 0;
    for (const auto& ps : synth.outcome.accepted)
        if (ps.fl.generator == Generator::student) ++student_accepted;
    manifest.student_ratio = synth.outcome.accepted.empty()
                                 ? 0.0
                                 : static_cast<double>(student_accepted) /
                                       static_cast<double>(synth.outcome.accepted.size());

    for (const auto& row : aug.pairs) {
        if (row.method == AugMethod::proof) ++manifest.proof_aug;
        else ++manifest.contra_aug;
    }

    const std::filesystem::path dir = round_dir(run_dir, cfg.round);
    const std::string manifest_bytes = nlohmann::json(manifest).dump() + "\n";
    const std::filesystem::path manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        const std::string existing = fsio::read_file(manifest_path.string());
        if (existing != manifest_bytes)
            throw ForgeError("round output diverged from existing manifest: " +
                             manifest_path.string());
    }

    write_jsonl((dir / "accepted.jsonl").string(), synth.outcome.accepted);
    write_jsonl((dir / "carryover.jsonl").string(), synth.outcome.carryover);
    write_jsonl((dir / "augmented.jsonl").string(), aug.pairs);
    fsio::write_file((dir / "stats.json").string(),
                     nlohmann::json(synth.outcome.stage_counts).dump() + "\n");
    fsio::write_file((dir / "diversity.json").string(),
                     nlohmann::json(aug.diversity).dump() + "\n");
    fsio::write_file(manifest_path.string(), manifest_bytes);
    return manifest;
}

// Runs rounds first..last, threading carryover between them.  The checkpoint
// hook fires before every round after the first; returning false stops the
// loop (used by the CLI to pause for an external fine-tune step).
inline std::vector<RoundManifest> run_loop(Gateway& gateway, LeanBridge& bridge,
                                           const ConceptRepository& repo, RoundConfig cfg,
                                           int rounds, const std::filesystem::path& run_dir,
                                           const std::function<bool(int)>& checkpoint = {}) {
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    std::vector<RoundManifest> manifests;
    std::vector<NLStatement> carryover;
    for (int r = 0; r < rounds; ++r) {
        cfg.round = r + 1;
        if (r > 0 && checkpoint && !checkpoint(cfg.round)) break;
        manifests.push_back(run_iteration(gateway, bridge, repo, cfg, carryover, run_dir));
        carryover = read_jsonl<NLStatement>(
            (round_dir(run_dir, cfg.round) / "carryover.jsonl").string());
    }
    return manifests;
}

inline std::vector<RoundManifest> load_manifests(const std::filesystem::path& run_dir) {
    std::vector<RoundManifest> manifests;
    if (!std::filesystem::is_directory(run_dir))
        throw IoError("no such run directory: " + run_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
        if (!entry.is_directory()) continue;
        const std::filesystem::path mpath = entry.path() / "manifest.json";
        if (!std::filesystem::exists(mpath)) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(fsio::read_file(mpath.string()));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(mpath.string() + ": " + e.what());
        }
        manifests.push_back(j.get<RoundManifest>());
    }
    std::sort(manifests.begin(), manifests.end(),
              [](const RoundManifest& a, const RoundManifest& b) { return a.round < b.round; });
    if (manifests.empty()) throw IoError("no round manifests under " + run_dir.string());
    return manifests;
}

inline RoundStats aggregate_stats(const std::vector<RoundManifest>& manifests) {
    std::set<int> rounds;
    RoundStats stats;
    for (const auto& m : manifests) {
        if (!rounds.insert(m.round).second)
            throw ForgeError("duplicate round in manifests: " + std::to_string(m.round));
        stats.synthetic += m.accepted_synthetic;
        stats.proof_aug += m.proof_aug;
        stats.contra_aug += m.contra_aug;
    }
    stats.total = stats.synthetic + stats.proof_aug + stats.contra_aug;
    return stats;
}

// Writes {instruction, output} JSONL rows for every accepted and augmented
// pair of the requested rounds; the instruction is the rendered translation
// prompt for the pair's NL side.
inline long export_training_data(const std::filesystem::path& run_dir, int first_round,
                                 int last_round, const std::string& out_path) {
    if (first_round < 1 || last_round < first_round)
        throw ConfigError("invalid round range for export");

    std::vector<nlohmann::json> rows;
    for (int r = first_round; r <= last_round; ++r) {
        const std::filesystem::path dir = round_dir(run_dir, r);
        if (!std::filesystem::exists(dir / "manifest.json"))
            throw IoError("missing round data for round " + std::to_string(r) + " under " +
                          run_dir.string());
        auto accepted = read_jsonl<ParallelStatement>((dir / "accepted.jsonl").string());
        auto aug_rows = read_jsonl<AugmentedPair>((dir / "augmented.jsonl").string());
        for (const auto& ps : accepted) {
            rows.push_back(nlohmann::json{
                {"instruction",
                 render_prompt(Role::translator, {{"informal_statement", ps.nl.text}})},
                {"output", ps.fl.code}});
        }
        for (const auto& row : aug_rows) {
            rows.push_back(nlohmann::json{
                {"instruction",
                 render_prompt(Role::translator, {{"informal_statement", row.pair.nl.text}})},
                {"output", row.pair.fl.code}});
        }
    }

    std::string text;
    for (const auto& row : rows) text += row.dump() + "\n";
    fsio::write_file(out_path, text);
    return static_cast<long>(rows.size());
}

} // namespace forge
