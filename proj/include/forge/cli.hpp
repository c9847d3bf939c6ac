#pragma once

// Subcommand front end.  Every stage of the pipeline is reachable here:
// repo inspection, single-round synthesis, augmentation, the iteration loop,
// evaluation, run statistics, training-data export, and fixture planning.
// Exit codes: 0 success, 1 operational failure, 2 usage error.

#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forge/config.hpp"
#include "forge/eval.hpp"
#include "forge/iteration.hpp"
#include "forge/mock_corpus.hpp"

namespace forge::cli {

struct Options {
    std::string config_path;
    std::string fixture_dir;
    std::string audit_path;
    std::uint64_t seed = 42;
};

inline ForgeConfig resolve_config(const Options& opts) {
    ForgeConfig cfg;
    if (!opts.config_path.empty()) cfg = ForgeConfig::load(opts.config_path);
    if (!opts.fixture_dir.empty()) cfg.fixture_dir = opts.fixture_dir;
    return cfg;
}

struct Services {
    AuditLog audit;
    std::unique_ptr<Gateway> gateway;
    std::shared_ptr<ToolchainClient> toolchain;
    std::unique_ptr<LeanBridge> bridge;
};

inline std::unique_ptr<Services> make_services(const ForgeConfig& cfg, const Options& opts) {
    auto services = std::make_unique<Services>();
    if (!opts.audit_path.empty()) services->audit.set_sink(opts.audit_path);
    services->gateway = make_gateway(cfg, &services->audit);
    services->toolchain = make_toolchain(cfg);
    services->bridge = make_bridge(cfg, services->toolchain, &services->audit);
    return services;
}

inline int run_repo_stats(const std::string& path) {
    const ConceptRepository repo = ConceptRepository::load(path);
    std::cout << repo.domain_count() << "/" << repo.topic_count() << "/" << repo.size() << "\n";
    std::cout << repo.stats().dump(2) << "\n";
    return 0;
}

inline int run_synth(const Options& opts, const std::string& repo_path, int round, int n_new,
                     const std::string& carryover_path, const std::string& out_dir) {
    const ForgeConfig cfg = resolve_config(opts);
    auto services = make_services(cfg, opts);

    std::vector<NLStatement> carryover;
    if (!carryover_path.empty()) carryover = read_jsonl<NLStatement>(carryover_path);

    ConceptRepository repo;
    if (n_new > 0) repo = ConceptRepository::load(repo_path);

    SynthesisOptions synth_opts;
    synth_opts.workers = cfg.pipeline_workers;
    SeededRng rng(derive_seed(opts.seed, "round-" + std::to_string(round)));
    SynthesisRun run = synthesize(*services->gateway, *services->bridge, repo, n_new, carryover,
                                  round, rng, synth_opts);

    const std::filesystem::path dir(out_dir);
    write_jsonl((dir / "accepted.jsonl").string(), run.outcome.accepted);
    write_jsonl((dir / "carryover.jsonl").string(), run.outcome.carryover);
    nlohmann::json stats{{"stage_counts", run.outcome.stage_counts},
                         {"rejected_count", run.outcome.rejected_count},
                         {"inputs", nlohmann::json{{"new", run.requested_new},
                                                   {"carryover", run.carryover_in}}}};
    fsio::write_file((dir / "stats.json").string(), stats.dump() + "\n");

    std::cerr << "round " << round << ": accepted=" << run.outcome.accepted.size()
              << " carryover=" << run.outcome.carryover.size()
              << " rejected=" << run.outcome.rejected_count << "\n";
    return 0;
}

inline int run_augment(const Options& opts, int round, const std::string& in_path,
                       const std::string& out_path, const std::string& report_path) {
    const ForgeConfig cfg = resolve_config(opts);
    auto services = make_services(cfg, opts);

    const auto accepted = read_jsonl<ParallelStatement>(in_path);
    const int effective_round = round > 0 ? round : (accepted.empty() ? 1 : accepted.front().round);

    AugmentOptions aug_opts;
    aug_opts.workers = cfg.pipeline_workers;
    const AugmentationResult result = augment_accepted(*services->gateway, *services->bridge,
                                                       accepted, effective_round, aug_opts);

    write_jsonl(out_path, result.pairs);
    if (!report_path.empty())
        fsio::write_file(report_path, nlohmann::json(result.diversity).dump() + "\n");

    std::cerr << "augmented " << accepted.size() << " sources into " << result.pairs.size()
              << " pairs (" << result.backfill_failures << " backfill failures)\n";
    return 0;
}

inline int run_iterate(const Options& opts, const std::string& repo_path, int rounds, int quota,
                       const std::string& run_id, bool assume_yes) {
    const ForgeConfig cfg = resolve_config(opts);
    auto services = make_services(cfg, opts);
    const ConceptRepository repo = ConceptRepository::load(repo_path);

    RoundConfig round_cfg;
    round_cfg.new_nl_quota = quota;
    round_cfg.seed = opts.seed;
    round_cfg.synthesis.workers = cfg.pipeline_workers;
    round_cfg.augment.workers = cfg.pipeline_workers;

    const std::string id = run_id.empty() ? default_run_id(opts.seed) : run_id;
    const std::filesystem::path run_dir = std::filesystem::path(cfg.run_dir) / id;

    // The student model improves only through an external fine-tune on the
    // exported data; on interactive runs, pause so the operator can rebind.
    auto checkpoint = [&](int next_round) -> bool {
        if (assume_yes || isatty(fileno(stdin)) == 0) return true;
        std::cerr << "round " << next_round
                  << ": rebind the student backend if it was re-trained, then continue? [Y/n] ";
        std::string line;
        if (!std::getline(std::cin, line)) return true;
        const auto t = str::strip(line);
        return t.empty() || t == "y" || t == "Y" || t == "yes";
    };

    const auto manifests =
        run_loop(*services->gateway, *services->bridge, repo, round_cfg, rounds, run_dir, checkpoint);
    for (const auto& m : manifests)
        std::cerr << "round " << m.round << ": accepted=" << m.accepted_synthetic
                  << " proof_aug=" << m.proof_aug << " contra_aug=" << m.contra_aug
                  << " carryover=" << m.carryover_out << " student_ratio=" << m.student_ratio
                  << "\n";
    std::cout << run_dir.string() << "\n";
    return 0;
}

inline int run_eval(const Options& opts, const std::string& bench_path, std::vector<int> k_values,
                    std::vector<std::uint64_t> seeds, bool empirical, const std::string& out_path) {
    const ForgeConfig cfg = resolve_config(opts);
    auto services = make_services(cfg, opts);

    const auto items = load_benchmark(bench_path);
    EvalOptions eval_opts;
    if (!k_values.empty()) eval_opts.k_values = std::move(k_values);
    if (!seeds.empty()) eval_opts.seeds = std::move(seeds);
    eval_opts.empirical_subsets = empirical;
    eval_opts.workers = cfg.pipeline_workers;

    const EvalResult result = evaluate(*services->gateway, *services->bridge, items, eval_opts);
    if (!out_path.empty()) save_eval_result(result, out_path);

    nlohmann::json mean = nlohmann::json::object();
    for (const auto& [k, v] : result.mean_pass_at) mean[std::to_string(k)] = v;
    std::cout << mean.dump() << "\n";
    for (const auto& [k, v] : result.mean_pass_at)
        std::cerr << "pass@" << k << " = " << v << "\n";
    return 0;
}

inline int run_eval_compare(const std::string& path_a, const std::string& path_b) {
    const EvalResult a = load_eval_result(path_a);
    const EvalResult b = load_eval_result(path_b);
    const auto p_values = compare_eval_results(a, b);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, p] : p_values) out[std::to_string(k)] = p;
    std::cout << out.dump() << "\n";
    return 0;
}

inline int run_stats(const Options& opts, const std::string& run_id, const std::string& json_path) {
    const ForgeConfig cfg = resolve_config(opts);
    const std::filesystem::path run_dir = std::filesystem::path(cfg.run_dir) / run_id;
    const auto manifests = load_manifests(run_dir);
    const RoundStats totals = aggregate_stats(manifests);

    std::cout << "round,synthetic,proof_aug,contra_aug,total,carryover_out,student_ratio\n";
    for (const auto& m : manifests) {
        const long total = static_cast<long>(m.accepted_synthetic) + m.proof_aug + m.contra_aug;
        std::cout << m.round << "," << m.accepted_synthetic << "," << m.proof_aug << ","
                  << m.contra_aug << "," << total << "," << m.carryover_out << ","
                  << m.student_ratio << "\n";
    }
    std::cout << "total," << totals.synthetic << "," << totals.proof_aug << ","
              << totals.contra_aug << "," << totals.total << ",,\n";

    if (!json_path.empty()) {
        nlohmann::json series = nlohmann::json::array();
        for (const auto& m : manifests) series.push_back(nlohmann::json(m));
        fsio::write_file(json_path,
                         nlohmann::json{{"rounds", series}, {"totals", totals}}.dump(2) + "\n");
    }
    return 0;
}

inline int run_export(const Options& opts, const std::string& run_id, int from_round, int to_round,
                      const std::string& out_path) {
    const ForgeConfig cfg = resolve_config(opts);
    const std::filesystem::path run_dir = std::filesystem::path(cfg.run_dir) / run_id;
    const long count = export_training_data(run_dir, from_round, to_round, out_path);
    std::cout << count << "\n";
    return 0;
}

inline int run_mock_gen(const Options& opts, const std::string& repo_path, int rounds, int quota,
                        const std::string& bench_path, std::vector<int> k_values,
                        std::vector<std::uint64_t> seeds) {
    if (opts.fixture_dir.empty())
        throw ConfigError("mock gen needs --fixtures to know where to write");
    const MockScenario scenario;
    if (!repo_path.empty() && rounds > 0) {
        const ConceptRepository repo = ConceptRepository::load(repo_path);
        plan_synthesis_fixtures(opts.fixture_dir, repo, rounds, quota, opts.seed, scenario);
    }
    if (!bench_path.empty()) {
        EvalOptions eval_opts;
        if (!k_values.empty()) eval_opts.k_values = std::move(k_values);
        if (!seeds.empty()) eval_opts.seeds = std::move(seeds);
        plan_eval_fixtures(opts.fixture_dir, load_benchmark(bench_path), eval_opts, scenario);
    }
    std::cerr << "fixtures written under " << opts.fixture_dir << "\n";
    return 0;
}

inline int forge_main(int argc, const char* const* argv) {
    CLI::App app{"Autoformalization corpus synthesis pipeline"};
    app.require_subcommand(1);

    Options opts;
    app.add_option("--config", opts.config_path, "Config file (TOML subset)");
    app.add_option("--fixtures", opts.fixture_dir, "Override the LLM fixture directory");
    app.add_option("--audit", opts.audit_path, "Append JSONL audit events to this file");
    app.add_option("--seed", opts.seed, "Base seed for all stochastic stages")->capture_default_str();

    // repo stats <file>
    auto* repo_cmd = app.add_subcommand("repo", "Concept repository utilities");
    repo_cmd->require_subcommand(1);
    auto* repo_stats = repo_cmd->add_subcommand("stats", "Print domain/topic/concept counts");
    std::string repo_stats_path;
    repo_stats->add_option("file", repo_stats_path, "Repository file")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Run one synthesis round");
    int synth_round = 0, synth_new = 10000;
    std::string synth_repo, synth_carryover, synth_out;
    synth->add_option("--round", synth_round, "Round number (>= 1)")->required();
    synth->add_option("--new", synth_new, "Fresh NL statement quota")->capture_default_str();
    synth->add_option("--repo", synth_repo, "Concept repository file");
    synth->add_option("--carryover", synth_carryover, "Carryover NL statements (JSONL)");
    synth->add_option("--out", synth_out, "Output directory")->required();

    // augment
    auto* augment = app.add_subcommand("augment", "Augment accepted pairs");
    int augment_round = 0;
    std::string augment_in, augment_out, augment_report;
    augment->add_option("--in", augment_in, "Accepted pairs (JSONL)")->required();
    augment->add_option("--out", augment_out, "Augmented pairs output (JSONL)")->required();
    augment->add_option("--report", augment_report, "Diversity report (JSON)");
    augment->add_option("--round", augment_round, "Round number for new statements");

    // iterate
    auto* iterate = app.add_subcommand("iterate", "Run the expert-iteration loop");
    int iterate_rounds = 10, iterate_quota = 10000;
    std::string iterate_repo, iterate_run_id;
    bool iterate_yes = false;
    iterate->add_option("--rounds", iterate_rounds, "Number of rounds")->capture_default_str();
    iterate->add_option("--quota", iterate_quota, "Fresh NL quota per round")->capture_default_str();
    iterate->add_option("--repo", iterate_repo, "Concept repository file")->required();
    iterate->add_option("--run-id", iterate_run_id, "Run directory name (default run-s<seed>)");
    iterate->add_flag("--yes", iterate_yes, "Skip the between-round checkpoint prompt");

    // eval (+ eval compare)
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a benchmark");
    std::string eval_bench, eval_out;
    std::vector<int> eval_k;
    std::vector<std::uint64_t> eval_seeds;
    bool eval_empirical = false;
    eval_cmd->add_option("--bench", eval_bench, "Benchmark file (JSONL)");
    eval_cmd->add_option("--k", eval_k, "pass@k budgets")->delimiter(',');
    eval_cmd->add_option("--seeds", eval_seeds, "Evaluation seeds")->delimiter(',');
    eval_cmd->add_option("--out", eval_out, "Report output path (JSON)");
    eval_cmd->add_flag("--empirical", eval_empirical,
                       "Use first-k empirical subsets instead of the unbiased estimator");
    auto* eval_compare = eval_cmd->add_subcommand("compare", "Per-k p-values between two reports");
    std::string cmp_a, cmp_b;
    eval_compare->add_option("report_a", cmp_a, "First report")->required();
    eval_compare->add_option("report_b", cmp_b, "Second report")->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Per-round statistics for a run");
    std::string stats_run, stats_json;
    stats_cmd->add_option("--run", stats_run, "Run id under the run directory")->required();
    stats_cmd->add_option("--json", stats_json, "Also write a plot-ready JSON series here");

    // export
    auto* export_cmd = app.add_subcommand("export", "Export training pairs");
    std::string export_run, export_out, export_format = "sft_pairs";
    int export_from = 1, export_to = 1;
    export_cmd->add_option("--run", export_run, "Run id")->required();
    export_cmd->add_option("--from", export_from, "First round")->capture_default_str();
    export_cmd->add_option("--to", export_to, "Last round")->capture_default_str();
    export_cmd->add_option("--out", export_out, "Output JSONL path")->required();
    export_cmd->add_option("--format", export_format, "Export format")
        ->check(CLI::IsMember({"sft_pairs"}));

    // mock gen
    auto* mock_cmd = app.add_subcommand("mock", "Mock fixture utilities");
    mock_cmd->require_subcommand(1);
    auto* mock_gen = mock_cmd->add_subcommand("gen", "Plan a complete fixture set");
    std::string gen_repo, gen_bench;
    int gen_rounds = 0, gen_quota = 100;
    std::vector<int> gen_k;
    std::vector<std::uint64_t> gen_seeds;
    mock_gen->add_option("--repo", gen_repo, "Concept repository file");
    mock_gen->add_option("--rounds", gen_rounds, "Synthesis rounds to plan");
    mock_gen->add_option("--quota", gen_quota, "Fresh NL quota per planned round")
        ->capture_default_str();
    mock_gen->add_option("--bench", gen_bench, "Benchmark file to plan eval fixtures for");
    mock_gen->add_option("--k", gen_k, "pass@k budgets for eval planning")->delimiter(',');
    mock_gen->add_option("--seeds", gen_seeds, "Seeds for eval planning")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (repo_stats->parsed()) return run_repo_stats(repo_stats_path);
        if (synth->parsed()) {
            if (synth_new > 0 && synth_repo.empty()) {
                std::cerr << "synth: --repo is required when --new > 0\n";
                return 2;
            }
            return run_synth(opts, synth_repo, synth_round, synth_new, synth_carryover, synth_out);
        }
        if (augment->parsed())
            return run_augment(opts, augment_round, augment_in, augment_out, augment_report);
        if (iterate->parsed())
            return run_iterate(opts, iterate_repo, iterate_rounds, iterate_quota, iterate_run_id,
                               iterate_yes);
        if (eval_compare->parsed()) return run_eval_compare(cmp_a, cmp_b);
        if (eval_cmd->parsed()) {
            if (eval_bench.empty()) {
                std::cerr << "eval: --bench is required\n";
                return 2;
            }
            return run_eval(opts, eval_bench, eval_k, eval_seeds, eval_empirical, eval_out);
        }
        if (stats_cmd->parsed()) return run_stats(opts, stats_run, stats_json);
        if (export_cmd->parsed())
            return run_export(opts, export_run, export_from, export_to, export_out);
        if (mock_gen->parsed())
            return run_mock_gen(opts, gen_repo, gen_rounds, gen_quota, gen_bench, gen_k, gen_seeds);
        std::cerr << "no subcommand dispatched\n";
        return 2;
    } catch (const ForgeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace forge::cli
