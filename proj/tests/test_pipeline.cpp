#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forge/augmentation.hpp"
#include "forge/concept_repo.hpp"
#include "forge/mock_corpus.hpp"
#include "forge/synthesis.hpp"
#include "forge/text_metrics.hpp"

#include "test_support.hpp"

using namespace forge;

namespace {

// Substring-keyed canned responses, per role. Rules are checked in insertion
// order; a miss falls back to the role default, and a missing default is a
// hard error so forgotten wiring fails loudly.
class ScriptedBackend : public ModelBackend {
 public:
  std::string name() const override { return "scripted"; }

  void on(Role role, std::string needle, std::string response) {
    rules_[role].emplace_back(std::move(needle), std::move(response));
  }
  void fallback(Role role, std::string response) { defaults_[role] = std::move(response); }

  std::string complete(Role role, const std::string& prompt, const SamplingParams&) override {
    auto it = rules_.find(role);
    if (it != rules_.end()) {
      for (const auto& [needle, response] : it->second) {
        if (prompt.find(needle) != std::string::npos) return response;
      }
    }
    auto def = defaults_.find(role);
    if (def != defaults_.end()) return def->second;
    throw FixtureMissing("scripted backend has no response for role " + to_string(role));
  }

 private:
  std::map<Role, std::vector<std::pair<std::string, std::string>>> rules_;
  std::map<Role, std::string> defaults_;
};

// Deterministic per-prompt NL text so generated ids never collide.
class EchoNlBackend : public ModelBackend {
 public:
  std::string name() const override { return "echo-nl"; }
  std::string complete(Role, const std::string& prompt, const SamplingParams&) override {
    return "||Theorem: Statement " + sha256_hex(prompt).substr(0, 12) + " holds.||";
  }
};

NLStatement mk_nl(const std::string& text, int round) {
  NLStatement nl;
  nl.text = text;
  nl.id = make_nl_id(text, round);
  nl.concepts = {"c-000000000000000a", "c-000000000000000b"};
  nl.round_created = round;
  return nl;
}

ParallelStatement mk_pair(const std::string& code, int round = 1,
                          Origin origin = Origin::synthetic) {
  ParallelStatement ps;
  ps.nl = mk_nl("source statement for " + code.substr(0, 24), round);
  ps.nl.status = NLStatus::accepted;
  ps.fl.code = code;
  ps.fl.nl_id = ps.nl.id;
  ps.fl.generator = Generator::student;
  ps.fl.id = make_fl_id(ps.nl.id, code, Generator::student);
  ps.origin = origin;
  ps.round = round;
  return ps;
}

// Criterion fixture: contraposing each hypothesis yields edit distances
// {12, 40, 40}; the tie between the two 40s must resolve to the earlier
// hypothesis (ha). Verified against an independent DP implementation.
const std::string kTieSource =
    "theorem tm_name (x : ℝ) (h : x ≠ 0000000000000111111) "
    "(ha : x = 2222222222222222222) (hb : x = 3333333333333333) "
    ": x = 0000000000000000000 := by sorry";

}  // namespace

TEST_CASE("generation resamples duplicate statements and drops dead slots") {
  ConceptRepository repo =
      ConceptRepository::load(testsupport::fixtures_path() / "undergrad.repo.yaml");

  // A backend that always answers the same text can fill exactly one slot;
  // every other slot exhausts its attempts.
  Gateway same;
  same.bind_default(std::make_shared<StaticBackend>("||Theorem: Always the same.||"));
  SeededRng rng(7);
  GenerationBatch batch = generate_nl_batch(same, repo, 5, 1, rng);
  CHECK(batch.statements.size() == 1);
  CHECK(batch.failed_slots == 4);
  CHECK(batch.statements[0].text == "Always the same.");
  CHECK(batch.statements[0].id == make_nl_id("Always the same.", 1));

  // Unusable completions fail every slot.
  Gateway junk;
  junk.bind_default(std::make_shared<StaticBackend>("no delimiters at all"));
  SeededRng rng2(7);
  GenerationBatch empty = generate_nl_batch(junk, repo, 3, 1, rng2);
  CHECK(empty.statements.empty());
  CHECK(empty.failed_slots == 3);

  CHECK_THROWS_AS(generate_nl_batch(junk, repo, -1, 1, rng2), ForgeError);
}

TEST_CASE("generation is a pure function of seed and round") {
  ConceptRepository repo =
      ConceptRepository::load(testsupport::fixtures_path() / "undergrad.repo.yaml");

  auto run = [&](std::uint64_t seed, int round) {
    Gateway gw;
    gw.bind_default(std::make_shared<EchoNlBackend>());
    SeededRng rng(seed);
    GenerationBatch batch = generate_nl_batch(gw, repo, 12, round, rng);
    std::vector<std::string> ids;
    for (const auto& nl : batch.statements) ids.push_back(nl.id);
    return std::make_pair(ids, batch.failed_slots);
  };

  auto [ids_a, failed_a] = run(42, 1);
  auto [ids_b, failed_b] = run(42, 1);
  CHECK(ids_a == ids_b);
  CHECK(failed_a == failed_b);
  CHECK(ids_a.size() == 12);
  CHECK(std::set<std::string>(ids_a.begin(), ids_a.end()).size() == ids_a.size());

  auto [ids_c, failed_c] = run(43, 1);
  CHECK(ids_a != ids_c);

  // Slot provenance: concepts come from the sampled pair, round is stamped.
  Gateway gw;
  gw.bind_default(std::make_shared<EchoNlBackend>());
  SeededRng rng(42);
  GenerationBatch batch = generate_nl_batch(gw, repo, 3, 4, rng);
  for (const auto& nl : batch.statements) {
    CHECK(nl.round_created == 4);
    CHECK(nl.status == NLStatus::pending);
    CHECK(nl.concepts[0] != nl.concepts[1]);
    CHECK_FALSE(repo.by_id(nl.concepts[0]).name.empty());
    CHECK_FALSE(repo.by_id(nl.concepts[1]).name.empty());
  }
}

TEST_CASE("translation and revision attach lineage and generator") {
  Gateway gw;
  gw.bind_default(std::make_shared<StaticBackend>(
      "```lean4\ntheorem tm_name (n : ℕ) : n = n := by sorry\n```"));

  NLStatement nl = mk_nl("Every natural number equals itself.", 2);
  FLStatement fl = translate(gw, nl);
  CHECK(fl.code == "theorem tm_name (n : ℕ) : n = n := by sorry");
  CHECK(fl.nl_id == nl.id);
  CHECK(fl.generator == Generator::student);
  CHECK(fl.id == make_fl_id(nl.id, fl.code, Generator::student));

  CompileReport failed;
  failed.success = false;
  failed.diagnostics.push_back({3, 2, Severity::error, "unknown identifier 'foo'"});
  FLStatement revised = revise(gw, fl, nl, failed);
  CHECK(revised.generator == Generator::teacher_revised);
  CHECK(revised.nl_id == nl.id);
  CHECK(revised.id != fl.id);

  CHECK(render_diagnostics(failed) == "error: line 3, column 2: unknown identifier 'foo'");
  CHECK(render_diagnostics(CompileReport{}) == "(no diagnostics)");
}

TEST_CASE("a synthesis round routes statements through every gate") {
  auto backend = std::make_shared<ScriptedBackend>();

  NLStatement a = mk_nl("A first-try statement.", 1);
  NLStatement b = mk_nl("A statement the teacher can fix.", 1);
  NLStatement c = mk_nl("A statement nobody can fix.", 1);
  NLStatement d = mk_nl("A statement rated poor.", 1);
  NLStatement e = mk_nl("A statement with an unreadable rating.", 1);
  NLStatement f = mk_nl("A statement the student cannot translate.", 1);

  backend->on(Role::translator, a.text,
              "theorem tm_name (n : ℕ) : n = n := by sorry");
  backend->on(Role::translator, b.text,
              "theorem tm_name : bad_ident_b = 1 := by sorry");
  backend->on(Role::translator, c.text,
              "theorem tm_name : bad_ident_c1 = 1 := by sorry");
  backend->on(Role::translator, d.text,
              "theorem tm_name (m : ℕ) : m = m + 0 := by sorry");
  backend->on(Role::translator, e.text,
              "theorem tm_name (j : ℕ) (h : j > 0) : j ≥ 1 := by sorry");
  backend->on(Role::translator, f.text, "I do not know how to state this.");

  backend->on(Role::fl_rev, b.text, "theorem tm_name (k : ℕ) : k ≥ k := by sorry");
  backend->on(Role::fl_rev, c.text, "theorem tm_name : bad_ident_c2 = 1 := by sorry");

  backend->on(Role::fl_align, a.text, "||good||");
  backend->on(Role::fl_align, b.text, "||average||");
  backend->on(Role::fl_align, d.text, "||poor||");
  backend->on(Role::fl_align, e.text, "I would say it is probably fine.");

  AuditLog audit;
  Gateway gw(&audit);
  gw.bind_default(backend);
  LeanBridge bridge(std::make_shared<MockToolchain>(), &audit);

  SynthesisOutcome out = run_round(gw, bridge, {a, b, c, d, e, f}, 1);

  REQUIRE(out.accepted.size() == 2);
  REQUIRE(out.carryover.size() == 4);

  // Accepted set is {a, b}, sorted by NL id.
  std::map<std::string, ParallelStatement> accepted;
  for (const auto& ps : out.accepted) accepted[ps.nl.id] = ps;
  REQUIRE(accepted.count(a.id) == 1);
  REQUIRE(accepted.count(b.id) == 1);
  CHECK(out.accepted[0].nl.id < out.accepted[1].nl.id);

  const ParallelStatement& pa = accepted[a.id];
  CHECK(pa.rating == Rating::good);
  CHECK(pa.fl.generator == Generator::student);
  CHECK(pa.origin == Origin::synthetic);
  CHECK(pa.round == 1);
  CHECK(pa.nl.status == NLStatus::accepted);
  REQUIRE(pa.fl.parsed.has_value());
  CHECK(pa.fl.code == format_multiline(*pa.fl.parsed));
  REQUIRE(pa.fl.compile.has_value());
  CHECK(pa.fl.compile->success);

  const ParallelStatement& pb = accepted[b.id];
  CHECK(pb.rating == Rating::average);
  CHECK(pb.fl.generator == Generator::teacher_revised);
  CHECK(pb.fl.compile->success);

  std::set<std::string> carry_ids;
  for (const auto& nl : out.carryover) {
    carry_ids.insert(nl.id);
    CHECK(nl.status == NLStatus::carryover);
  }
  CHECK(carry_ids == std::set<std::string>{c.id, d.id, e.id, f.id});

  CHECK(out.stage_counts.at("translated") == 5);
  CHECK(out.stage_counts.at("parsed") == 5);
  CHECK(out.stage_counts.at("compiled_first") == 3);
  CHECK(out.stage_counts.at("revised") == 2);
  CHECK(out.stage_counts.at("compiled_second") == 1);
  CHECK(out.stage_counts.at("aligned_good") == 1);
  CHECK(out.stage_counts.at("aligned_average") == 1);
  CHECK(out.stage_counts.at("aligned_poor") == 1);

  // Budget invariants, reconstructed from the audit log: per statement at
  // most two compiles and one revision, and alignment only after a compile
  // succeeded. No entailment checks run during synthesis.
  std::map<std::string, int> compiles, revisions, alignments;
  std::set<std::string> compiled_ok;
  for (const auto& ev : audit.snapshot()) {
    if (ev.kind == "lean" && ev.op == "compile") {
      compiles[ev.tag] += 1;
      if (ev.ok) compiled_ok.insert(ev.tag);
    }
    if (ev.kind == "llm" && ev.op == "fl_rev") revisions[ev.tag] += 1;
    if (ev.kind == "llm" && ev.op == "fl_align") alignments[ev.tag] += 1;
    CHECK(ev.op != "nli_check");
  }
  for (const auto& [tag, n] : compiles) CHECK(n <= 2);
  for (const auto& [tag, n] : revisions) CHECK(n <= 1);
  for (const auto& [tag, n] : alignments) {
    CHECK(n <= 1);
    CHECK(compiled_ok.count(tag) == 1);
  }
  CHECK(compiles["r1:" + a.id] == 1);
  CHECK(compiles["r1:" + b.id] == 2);
  CHECK(compiles["r1:" + c.id] == 2);
  CHECK(revisions["r1:" + f.id] == 0);

  CHECK_THROWS_AS(run_round(gw, bridge, {a, a}, 1), ForgeError);
}

TEST_CASE("synthesize conserves statements across the funnel") {
  ConceptRepository repo =
      ConceptRepository::load(testsupport::fixtures_path() / "undergrad.repo.yaml");

  auto backend = std::make_shared<EchoNlBackend>();
  auto scripted = std::make_shared<ScriptedBackend>();
  scripted->fallback(Role::translator, "theorem tm_name (n : ℕ) : n = n := by sorry");
  scripted->fallback(Role::fl_align, "||good||");

  Gateway gw;
  gw.bind(Role::nl_gen, backend);
  gw.bind_default(scripted);
  LeanBridge bridge(std::make_shared<MockToolchain>());

  std::vector<NLStatement> carry{mk_nl("Carried from an earlier round.", 1)};
  SeededRng rng(42);
  SynthesisRun run = synthesize(gw, bridge, repo, 8, carry, 2, rng);

  CHECK(run.requested_new == 8);
  CHECK(run.carryover_in == 1);
  CHECK(run.generated + run.outcome.rejected_count == 8);
  CHECK(run.outcome.accepted.size() + run.outcome.carryover.size() ==
        static_cast<size_t>(run.generated) + carry.size());
  CHECK(run.outcome.stage_counts.at("generated") == run.generated);

  // All statements share one translation, so only one id survives dedupe at
  // the accept stage; the rest still appear, as inputs with distinct NL ids.
  for (const auto& ps : run.outcome.accepted) {
    CHECK(ps.round == 2);
    CHECK(ps.fl.compile->success);
  }
}

TEST_CASE("proof-based augmentation harvests the last intermediate state") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->fallback(Role::prover,
                    "theorem tm_name (m : ℕ) : m = m + 0 := by\n  norm_simp\n  mock_close");
  Gateway gw;
  gw.bind_default(backend);
  LeanBridge bridge(std::make_shared<MockToolchain>());

  ParallelStatement ps = mk_pair("theorem tm_name (m : ℕ) : m = m + 0 := by sorry");

  auto recs = augment_via_proof(gw, bridge, ps);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].source_fl_id == ps.fl.id);
  CHECK(recs[0].method == AugMethod::proof);
  CHECK(recs[0].new_code == "theorem tm_name (m : ℕ) : m = m := by sorry");
  CHECK(recs[0].distance == 4);
  CHECK(recs[0].selected);
}

TEST_CASE("proof-based augmentation skips proofs without harvestable states") {
  ParallelStatement ps = mk_pair("theorem tm_name (m : ℕ) : m = m + 0 := by sorry");
  LeanBridge bridge(std::make_shared<MockToolchain>());

  // Closes on the first tactic: no intermediate state to harvest.
  Gateway closes;
  auto b1 = std::make_shared<ScriptedBackend>();
  b1->fallback(Role::prover, "mock_close");
  closes.bind_default(b1);
  CHECK(augment_via_proof(closes, bridge, ps).empty());

  // Fails on the first tactic: likewise nothing recorded.
  Gateway stalls;
  auto b2 = std::make_shared<ScriptedBackend>();
  b2->fallback(Role::prover, "mock_fail");
  stalls.bind_default(b2);
  CHECK(augment_via_proof(stalls, bridge, ps).empty());

  // No tactics at all.
  Gateway silent;
  auto b3 = std::make_shared<ScriptedBackend>();
  b3->fallback(Role::prover, "by");
  silent.bind_default(b3);
  CHECK(augment_via_proof(silent, bridge, ps).empty());

  // Backend failure is not an error, just no record.
  Gateway empty;
  empty.bind_default(std::make_shared<StaticBackend>(""));
  CHECK(augment_via_proof(empty, bridge, ps).empty());

  // A source that never compiled is not augmented.
  Gateway gw;
  auto b4 = std::make_shared<ScriptedBackend>();
  b4->fallback(Role::prover, "norm_simp\nmock_close");
  gw.bind_default(b4);
  ParallelStatement failed = ps;
  failed.fl.compile = CompileReport{};
  failed.fl.compile->success = false;
  CHECK(augment_via_proof(gw, bridge, failed).empty());
}

TEST_CASE("stalled proofs are harvested by default but gated by option") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->fallback(Role::prover, "norm_simp\nmock_fail");
  Gateway gw;
  gw.bind_default(backend);
  LeanBridge bridge(std::make_shared<MockToolchain>());

  ParallelStatement ps = mk_pair("theorem tm_name (m : ℕ) : m = m + 0 := by sorry");

  auto recs = augment_via_proof(gw, bridge, ps);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].selected);
  CHECK(recs[0].new_code == "theorem tm_name (m : ℕ) : m = m := by sorry");

  AugmentOptions strict;
  strict.proof_requires_completion = true;
  CHECK(augment_via_proof(gw, bridge, ps, strict).empty());
}

TEST_CASE("a variant identical to its source is never selected") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->fallback(Role::prover, "norm_simp\nmock_fail");
  Gateway gw;
  gw.bind_default(backend);
  LeanBridge bridge(std::make_shared<MockToolchain>());

  // norm_simp leaves this goal untouched, so the harvested state rebuilds
  // the source statement verbatim.
  ParallelStatement ps = mk_pair("theorem tm_name (m : ℕ) : m = m := by sorry");
  auto recs = augment_via_proof(gw, bridge, ps);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].distance == 0);
  CHECK_FALSE(recs[0].selected);
}

TEST_CASE("contraposition emits one candidate per named hypothesis") {
  LeanBridge bridge(std::make_shared<MockToolchain>());

  ParallelStatement no_hyp = mk_pair("theorem tm_name : ∀ n : ℕ, n = n := by sorry");
  CHECK(augment_via_contraposition(bridge, no_hyp).empty());

  ParallelStatement unparseable = mk_pair("not lean at all");
  CHECK(augment_via_contraposition(bridge, unparseable).empty());

  ParallelStatement one = mk_pair("theorem tm_name (n : ℕ) (h : n > 0) : n ≠ 0 := by sorry");
  auto recs = augment_via_contraposition(bridge, one);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].method == AugMethod::contraposition);
  CHECK(recs[0].new_code ==
        "theorem tm_name (n : ℕ) (h : n = 0) : n ≤ 0 := by sorry");
  CHECK(recs[0].distance > 0);
  CHECK(recs[0].selected);
}

TEST_CASE("contraposition selects the most distant variant, first on ties") {
  LeanBridge bridge(std::make_shared<MockToolchain>());
  ParallelStatement ps = mk_pair(kTieSource);

  auto recs = augment_via_contraposition(bridge, ps);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].distance == 12);
  CHECK(recs[1].distance == 40);
  CHECK(recs[2].distance == 40);
  CHECK_FALSE(recs[0].selected);
  CHECK(recs[1].selected);
  CHECK_FALSE(recs[2].selected);

  // No compiling candidate may beat the selected one.
  for (const auto& rec : recs) CHECK(rec.distance <= recs[1].distance);

  // Shape: hypothesis i becomes the negated conclusion, the goal becomes the
  // negated hypothesis, and everything else is untouched.
  ParsedTheorem source = parse_statement(kTieSource);
  for (size_t i = 0; i < recs.size(); ++i) {
    ParsedTheorem v = parse_statement(recs[i].new_code);
    CHECK(v.name == source.name);
    CHECK(v.variables == source.variables);
    REQUIRE(v.hypotheses.size() == source.hypotheses.size());
    for (size_t j = 0; j < v.hypotheses.size(); ++j) {
      if (j == i) {
        CHECK(v.hypotheses[j].type_text == negate_prop(source.conclusion));
      } else {
        CHECK(v.hypotheses[j] == source.hypotheses[j]);
      }
    }
    CHECK(v.conclusion == negate_prop(source.hypotheses[i].type_text));
  }
}

TEST_CASE("contraposition skips hypotheses the toolchain rejects") {
  auto mock = std::make_shared<MockToolchain>();
  ScriptRule rule;
  rule.cmd = "contrapose";
  rule.match = "contains";
  rule.needle = "2222222222222222222";
  rule.hyp = "ha";
  rule.response = nlohmann::json{{"ok", false}, {"error", "simulated failure"}};
  mock->add_rule(rule);
  LeanBridge bridge(mock);

  ParallelStatement ps = mk_pair(kTieSource);
  auto recs = augment_via_contraposition(bridge, ps);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].distance == 12);
  CHECK(recs[1].distance == 40);
  CHECK_FALSE(recs[0].selected);
  CHECK(recs[1].selected);  // hb wins once ha is gone
}

TEST_CASE("backfill turns a selected record into a full pair") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->fallback(Role::fl_to_nl,
                    "||Theorem: If n equals zero then n is at most zero.||");
  Gateway gw;
  gw.bind_default(backend);
  LeanBridge bridge(std::make_shared<MockToolchain>());

  ParallelStatement source =
      mk_pair("theorem tm_name (n : ℕ) (h : n > 0) : n ≠ 0 := by sorry");
  auto recs = augment_via_contraposition(bridge, source);
  REQUIRE(recs.size() == 1);

  ParallelStatement pair = backfill_nl(gw, bridge, recs[0], source, 3);
  CHECK(pair.nl.text == "If n equals zero then n is at most zero.");
  CHECK(pair.nl.id == make_nl_id(pair.nl.text, 3));
  CHECK(pair.nl.concepts == source.nl.concepts);
  CHECK(pair.nl.round_created == 3);
  CHECK(pair.nl.status == NLStatus::accepted);
  CHECK(pair.fl.code == recs[0].new_code);
  CHECK(pair.fl.nl_id == pair.nl.id);
  CHECK(pair.fl.generator == Generator::student);
  CHECK(pair.fl.id == make_fl_id(pair.nl.id, pair.fl.code, Generator::student));
  CHECK(pair.fl.parsed.has_value());
  REQUIRE(pair.fl.compile.has_value());
  CHECK(pair.fl.compile->success);
  CHECK(pair.origin == Origin::contra_aug);
  CHECK_FALSE(pair.rating.has_value());
  CHECK(pair.round == 3);

  // Proof-method records map to the proof origin.
  AugmentationRecord proof_rec = recs[0];
  proof_rec.method = AugMethod::proof;
  CHECK(backfill_nl(gw, bridge, proof_rec, source, 3).origin == Origin::proof_aug);

  AugmentationRecord unselected = recs[0];
  unselected.selected = false;
  CHECK_THROWS_AS(backfill_nl(gw, bridge, unselected, source, 3), ForgeError);

  Gateway junk;
  junk.bind_default(std::make_shared<StaticBackend>("no span"));
  CHECK_THROWS_AS(backfill_nl(junk, bridge, recs[0], source, 3), ExtractionError);
}

TEST_CASE("diversity is mean BLEU against the source, per method") {
  FLStatement src;
  src.id = "fl-src";
  src.code = "theorem tm_name (n : ℕ) : n = n := by sorry";
  std::map<std::string, FLStatement> sources{{"fl-src", src}};

  AugmentationRecord same;
  same.source_fl_id = "fl-src";
  same.method = AugMethod::proof;
  same.new_code = src.code;

  AugmentationRecord moved;
  moved.source_fl_id = "fl-src";
  moved.method = AugMethod::contraposition;
  moved.new_code = "theorem tm_name (n : ℕ) (h : n = 0) : n ≤ 0 := by sorry";

  auto report = diversity_report({same, moved}, sources);
  REQUIRE(report.count("proof") == 1);
  REQUIRE(report.count("contraposition") == 1);
  CHECK(report.at("proof") == 1.0);
  CHECK(report.at("contraposition") ==
        Catch::Approx(bleu(moved.new_code, src.code)).margin(1e-12));
  CHECK(report.at("contraposition") < 1.0);

  CHECK(diversity_report({}, sources).empty());

  AugmentationRecord orphan = same;
  orphan.source_fl_id = "fl-unknown";
  CHECK_THROWS_AS(diversity_report({orphan}, sources), ForgeError);
}

TEST_CASE("augmentation runs both methods over accepted pairs in order") {
  auto backend = std::make_shared<ScriptedBackend>();
  // First source closes immediately (no proof record) but contraposes.
  backend->on(Role::prover, "n ≠ 0", "mock_close");
  // Second source yields a proof record and has no hypotheses to contrapose.
  backend->on(Role::prover, "m + 0", "norm_simp\nmock_close");
  backend->fallback(Role::fl_to_nl, "||Theorem: A rebuilt statement.||");

  AuditLog audit;
  Gateway gw(&audit);
  gw.bind_default(backend);
  LeanBridge bridge(std::make_shared<MockToolchain>(), &audit);

  ParallelStatement with_hyp =
      mk_pair("theorem tm_name (n : ℕ) (h : n > 0) : n ≠ 0 := by sorry");
  ParallelStatement no_hyp = mk_pair("theorem tm_name (m : ℕ) : m = m + 0 := by sorry");
  ParallelStatement foreign =
      mk_pair("theorem tm_name (k : ℕ) (h : k > 1) : k ≠ 1 := by sorry", 1, Origin::proof_aug);

  AugmentationResult result = augment_accepted(gw, bridge, {with_hyp, no_hyp, foreign}, 2);

  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].source_fl_id == with_hyp.fl.id);
  CHECK(result.records[0].method == AugMethod::contraposition);
  CHECK(result.records[1].source_fl_id == no_hyp.fl.id);
  CHECK(result.records[1].method == AugMethod::proof);

  REQUIRE(result.pairs.size() == 2);
  CHECK(result.pairs[0].source_fl_id == with_hyp.fl.id);
  CHECK(result.pairs[0].pair.origin == Origin::contra_aug);
  CHECK(result.pairs[1].pair.origin == Origin::proof_aug);
  for (const auto& p : result.pairs) {
    CHECK(p.pair.round == 2);
    CHECK(p.pair.fl.compile->success);
  }

  CHECK(result.backfill_failures == 0);
  CHECK(result.diversity.count("proof") == 1);
  CHECK(result.diversity.count("contraposition") == 1);

  // Derived statements are never re-augmented.
  for (const auto& rec : result.records) CHECK(rec.source_fl_id != foreign.fl.id);

  // Audit tags carry the source lineage.
  bool saw_aug_tag = false;
  for (const auto& ev : audit.snapshot()) {
    if (ev.tag == "aug:r2:" + with_hyp.fl.id) saw_aug_tag = true;
  }
  CHECK(saw_aug_tag);
}

TEST_CASE("failed backfills are counted, not fatal") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->on(Role::prover, "m + 0", "norm_simp\nmock_close");
  backend->fallback(Role::fl_to_nl, "nothing extractable");

  Gateway gw;
  gw.bind_default(backend);
  LeanBridge bridge(std::make_shared<MockToolchain>());

  ParallelStatement ps = mk_pair("theorem tm_name (m : ℕ) : m = m + 0 := by sorry");
  AugmentationResult result = augment_accepted(gw, bridge, {ps}, 1);

  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].selected);
  CHECK(result.pairs.empty());
  CHECK(result.backfill_failures == 1);
}

TEST_CASE("planned fixtures replay identically through the mock backend") {
  testsupport::TempDir tmp("plan");
  MockScenario scenario;
  PlanningBackend planner(tmp.path(), scenario);

  const std::string prompt = render_prompt(Role::translator, {{"informal_statement", "Squares are nonnegative."}});
  const std::string first = planner.complete(Role::translator, prompt, SamplingParams{});
  const std::string second = planner.complete(Role::translator, prompt, SamplingParams{});
  CHECK(first == second);

  const std::string key = MockBackend::fixture_key(Role::translator, prompt);
  CHECK(std::filesystem::exists(tmp.path() / (key + ".txt")));

  MockBackend replay(tmp.path());
  CHECK(replay.complete(Role::translator, prompt, SamplingParams{}) == first);

  // Purity: a fresh planner over a different directory invents the same text.
  testsupport::TempDir other("plan2");
  PlanningBackend planner2(other.path(), scenario);
  CHECK(planner2.complete(Role::translator, prompt, SamplingParams{}) == first);
}
