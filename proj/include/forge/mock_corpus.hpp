#pragma once

// Fixture planning for offline runs.  The planning backend answers any
// prompt with a deterministic invented completion (a pure function of role
// and prompt) and writes it to the fixture directory under the same key the
// replaying mock backend will look up.  Driving a full pipeline pass through
// it therefore produces exactly the fixture set that pass needs, with
// failure modes injected at configurable rates.

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "forge/augmentation.hpp"
#include "forge/eval.hpp"
#include "forge/llm_gateway.hpp"
#include "forge/synthesis.hpp"

namespace forge {

// Percentages are applied per completion via the prompt hash, so each
// decision is independent and stable across runs and scheduling orders.
struct MockScenario {
    int gen_fail_pct = 4;            // NL generation without a ||...|| span
    int translate_fail_pct = 5;      // translation without a theorem block
    int unparseable_pct = 6;         // code with unbalanced delimiters
    int first_compile_fail_pct = 30; // code with an unknown identifier
    int revise_fail_pct = 25;        // revision that still fails to compile
    int poor_pct = 12;               // FL-Align poor
    int average_pct = 25;            // FL-Align average (remainder is good)
    int nli_different_pct = 10;
    int prover_close_pct = 20;       // proof closes immediately, nothing to harvest
    int prover_stall_pct = 15;       // first tactic fails
    int backfill_fail_pct = 5;       // FL -> NL translation without a span
};

namespace detail {

inline int hash_draw(const std::string& hash, std::size_t byte_index) {
    const std::string hex = hash.substr(2 * byte_index, 2);
    return std::stoi(hex, nullptr, 16) % 100;
}

inline std::string mock_statement_shape(int pick, const std::string& t) {
    switch (pick % 4) {
        case 0:
            return "theorem tm_name (n : ℕ) (h" + t + " : n > 0) : n + 0 ≥ 0 := by sorry";
        case 1:
            return "theorem tm_name (x : ℝ) (hx" + t + " : x ≠ 0) (hy" + t +
                   " : x ≤ 1) : x < 2 := by sorry";
        case 2:
            return "theorem tm_name {G : Type u_1} [Group G] (a : G) (hg" + t +
                   " : a = 1) : a * a = 1 := by sorry";
        default:
            return "theorem tm_name (m" + t + " : ℕ) : m" + t + " = m" + t + " + 0 := by sorry";
    }
}

} // namespace detail

class PlanningBackend : public ModelBackend {
  public:
    explicit PlanningBackend(std::filesystem::path fixture_dir, MockScenario scenario = {})
        : dir_(std::move(fixture_dir)), scenario_(scenario) {
        std::filesystem::create_directories(dir_);
    }

    std::string name() const override { return "planner:" + dir_.string(); }

    std::string complete(Role role, const std::string& prompt, const SamplingParams&) override {
        const std::string key = MockBackend::fixture_key(role, prompt);
        const std::string completion = invent(role, key);
        const std::filesystem::path path = dir_ / (key + ".txt");
        std::lock_guard<std::mutex> lock(write_mutex_);
        if (!std::filesystem::exists(path)) fsio::write_file(path.string(), completion);
        return completion;
    }

    // Invented completion for a fixture key; pure in (role, key).
    std::string invent(Role role, const std::string& key) const {
        const std::string tag = key.substr(0, 8);
        const int draw = detail::hash_draw(key, 4);
        const int shape = detail::hash_draw(key, 6);
        const MockScenario& sc = scenario_;

        switch (role) {
            case Role::nl_gen: {
                if (draw < sc.gen_fail_pct)
                    return "I could not combine those concepts into a theorem.";
                return "Here is a suitable exercise.\n||Theorem: Prove that the quantity q_" +
                       tag + " associated with the sampled configuration satisfies the bound b_" +
                       tag + ".||";
            }
            case Role::translator: {
                int cut = sc.translate_fail_pct;
                if (draw < cut) return "The statement cannot be translated into Lean.";
                cut += sc.unparseable_pct;
                if (draw < cut)
                    return "```lean4\ntheorem tm_name (n : ℕ (h" + tag +
                           " : n > 0) : n = n := by sorry\n```";
                cut += sc.first_compile_fail_pct;
                if (draw < cut)
                    return "```lean4\ntheorem tm_name (n : ℕ) (h" + tag + " : n > 0) : bad_ident_" +
                           tag + " n = n := by sorry\n```";
                return "```lean4\n" + detail::mock_statement_shape(shape, tag) + "\n```";
            }
            case Role::fl_rev: {
                if (draw < sc.revise_fail_pct)
                    return "# Analysis\nThe identifier is still unresolved.\n```lean4\ntheorem "
                           "tm_name (n : ℕ) (h" + tag + " : n > 0) : bad_ident_" + tag +
                           " n = n := by sorry\n```";
                return "# Analysis\nRewrote the broken reference.\n```lean4\n" +
                       detail::mock_statement_shape(shape, tag) + "\n```";
            }
            case Role::fl_align: {
                std::string verdict = "good";
                if (draw < sc.poor_pct) verdict = "poor";
                else if (draw < sc.poor_pct + sc.average_pct) verdict = "average";
                return "# Analysis:\nThe formalization mirrors the informal statement.\n# "
                       "Answer:\n||" + verdict + "||";
            }
            case Role::fl_to_nl: {
                if (draw < sc.backfill_fail_pct) return "No concise phrasing exists.";
                return "||Theorem: Show that the derived statement d_" + tag +
                       " obtained from the proof state holds as stated.||";
            }
            case Role::back_translate:
                return "Prove that the reconstructed property p_" + tag + " holds.";
            case Role::nli_check: {
                const std::string verdict = draw < sc.nli_different_pct ? "different" : "same";
                return "The two statements were compared.\n||" + verdict + "||";
            }
            case Role::prover: {
                if (draw < sc.prover_close_pct) return "```lean4\nmock_close\n```";
                if (draw < sc.prover_close_pct + sc.prover_stall_pct)
                    return "```lean4\nmock_fail\nmock_close\n```";
                return "```lean4\nnorm_simp\nmock_close\n```";
            }
        }
        throw ForgeError("invent: unhandled role");
    }

  private:
    std::filesystem::path dir_;
    MockScenario scenario_;
    mutable std::mutex write_mutex_;
};

// Drives `rounds` full synthesis+augmentation passes against the planning
// backend, leaving a complete fixture set behind.  Mirrors the round loop's
// seeding so a subsequent replay issues the same prompts.
inline void plan_synthesis_fixtures(const std::filesystem::path& fixture_dir,
                                    const ConceptRepository& repo, int rounds, int quota,
                                    std::uint64_t seed, const MockScenario& scenario = {},
                                    const SynthesisOptions& opts = {}) {
    Gateway gateway(nullptr);
    gateway.bind_default(std::make_shared<PlanningBackend>(fixture_dir, scenario));
    LeanBridge bridge(std::make_shared<MockToolchain>());

    std::vector<NLStatement> carryover;
    for (int r = 1; r <= rounds; ++r) {
        SeededRng rng(derive_seed(seed, "round-" + std::to_string(r)));
        SynthesisRun run = synthesize(gateway, bridge, repo, quota, carryover, r, rng, opts);
        if (!run.outcome.accepted.empty()) {
            AugmentOptions aug_opts;
            aug_opts.workers = opts.workers;
            augment_accepted(gateway, bridge, run.outcome.accepted, r, aug_opts);
        }
        carryover = std::move(run.outcome.carryover);
    }
}

// Same idea for the evaluation harness: one planning pass over the benchmark
// generates every translator/back-translation/NLI fixture evaluate() needs.
inline void plan_eval_fixtures(const std::filesystem::path& fixture_dir,
                               const std::vector<BenchmarkItem>& items,
                               const EvalOptions& opts = {}, const MockScenario& scenario = {}) {
    Gateway gateway(nullptr);
    gateway.bind_default(std::make_shared<PlanningBackend>(fixture_dir, scenario));
    LeanBridge bridge(std::make_shared<MockToolchain>());
    evaluate(gateway, bridge, items, opts);
}

} // namespace forge
