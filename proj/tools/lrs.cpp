// Command-line front end: instance generation, metric extraction, prompt
// rendering, guidance acquisition, single solves, benchmark batches,
// aggregation/statistics and convergence traces.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrs/bench.hpp"
#include "lrs/brkga.hpp"
#include "lrs/features.hpp"
#include "lrs/instance.hpp"
#include "lrs/llm.hpp"
#include "lrs/llm_http.hpp"
#include "lrs/prompt.hpp"
#include "lrs/stats.hpp"

namespace {

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw lrs::ConfigError("cannot write to " + out_path);
    out << text;
}

std::shared_ptr<lrs::Provider> make_provider(const std::string& model, bool offline,
                                             const std::string& fixtures,
                                             const std::string& endpoint, double timeout_s) {
    if (offline) {
        if (fixtures.empty())
            throw lrs::ConfigError("--offline requires --fixtures");
        return std::make_shared<lrs::MockProvider>(model, std::filesystem::path(fixtures));
    }
    lrs::HttpProviderConfig config;
    config.model = model;
    if (!endpoint.empty()) config.endpoint = endpoint;
    config.timeout_s = timeout_s;
    return std::make_shared<lrs::OpenAiHttpProvider>(config);
}

struct SolveArgs {
    std::string instance_path;
    std::string variant = "baseline";
    std::string model;
    std::string preset;
    double time_limit = -1.0;  // <0: n/5 rule
    std::uint64_t seed = 1;
    bool offline = false;
    std::string fixtures;
    std::string endpoint;
};

// Resolves the decoder mode for a single solve/trace invocation, querying
// the model when the variant needs guidance.
lrs::DecoderMode resolve_mode(const SolveArgs& args, const lrs::LrsInstance& inst,
                              std::uint64_t seed) {
    using lrs::DecoderMode;
    const lrs::VariantKind kind = lrs::variant_kind_from_string(args.variant);
    switch (kind) {
        case lrs::VariantKind::baseline:
            return DecoderMode::standard();
        case lrs::VariantKind::random_static:
            return DecoderMode::random_static(seed);
        case lrs::VariantKind::random_dynamic:
            return DecoderMode::random_dynamic(seed);
        default: {
            if (args.model.empty())
                throw lrs::ConfigError("variant " + args.variant + " requires --model");
            lrs::Variant v;
            v.kind = kind;
            v.model = args.model;
            const lrs::MetricSet set = v.metric_set();
            auto provider =
                make_provider(args.model, args.offline, args.fixtures, args.endpoint, 120.0);
            if (auto* mock = dynamic_cast<lrs::MockProvider*>(provider.get()))
                mock->set_instance(inst.name);
            auto [ab, exchanges] = lrs::obtain_guidance(*provider, inst, set);
            std::cerr << "guidance obtained after " << exchanges.size() << " exchange(s)\n";
            const lrs::FeatureMatrix matrix = lrs::build_feature_matrix(inst, set);
            return DecoderMode::biased(lrs::build_bias(matrix, ab));
        }
    }
}

std::string default_preset_for(const std::string& variant, const std::string& explicit_preset) {
    if (!explicit_preset.empty()) return explicit_preset;
    return "baseline";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Longest Run Subsequence solver and benchmark harness"};
    app.require_subcommand(1);

    // --- generate ---
    std::vector<std::size_t> gen_lengths, gen_sigmas;
    std::size_t gen_reps = 1;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "instances";
    auto* cmd_generate = app.add_subcommand("generate", "Generate a random instance corpus");
    cmd_generate->add_option("--lengths", gen_lengths, "Instance lengths")->required();
    cmd_generate->add_option("--sigmas", gen_sigmas, "Alphabet sizes")->required();
    cmd_generate->add_option("--reps", gen_reps, "Instances per (length, sigma)");
    cmd_generate->add_option("--seed", gen_seed, "Master seed");
    cmd_generate->add_option("--out", gen_out, "Output directory");

    // --- features ---
    std::string feat_instance, feat_set = "curated", feat_out;
    auto* cmd_features = app.add_subcommand("features", "Extract the per-run metric matrix");
    cmd_features->add_option("--instance", feat_instance, "Instance file")->required();
    cmd_features->add_option("--metric-set", feat_set, "curated | simple2 | random4");
    cmd_features->add_option("--out", feat_out, "Output CSV (default stdout)");

    // --- prompt ---
    std::string prompt_instance, prompt_set = "curated", prompt_out;
    bool prompt_verbatim = false;
    auto* cmd_prompt = app.add_subcommand("prompt", "Render the analysis prompt");
    cmd_prompt->add_option("--instance", prompt_instance, "Instance file")->required();
    cmd_prompt->add_option("--metric-set", prompt_set, "curated | simple2 | random4");
    cmd_prompt->add_flag("--verbatim", prompt_verbatim,
                         "Reproduce the published template exactly");
    cmd_prompt->add_option("--out", prompt_out, "Output file (default stdout)");

    // --- guide ---
    std::string guide_instance, guide_model, guide_set = "curated", guide_fixtures,
        guide_endpoint, guide_log;
    bool guide_offline = false;
    int guide_attempts = 3;
    auto* cmd_guide = app.add_subcommand("guide", "Obtain alpha-beta guidance for an instance");
    cmd_guide->add_option("--instance", guide_instance, "Instance file")->required();
    cmd_guide->add_option("--model", guide_model, "Model id")->required();
    cmd_guide->add_option("--metric-set", guide_set, "curated | simple2 | random4");
    cmd_guide->add_flag("--offline", guide_offline, "Use fixture responses instead of HTTP");
    cmd_guide->add_option("--fixtures", guide_fixtures, "Fixture file for --offline");
    cmd_guide->add_option("--endpoint", guide_endpoint, "Chat-completions base URL");
    cmd_guide->add_option("--attempts", guide_attempts, "Max attempts");
    cmd_guide->add_option("--exchange-log", guide_log, "Append exchanges to this JSONL file");

    // --- solve ---
    SolveArgs solve_args;
    auto* cmd_solve = app.add_subcommand("solve", "Solve one instance with one variant");
    cmd_solve->add_option("--instance", solve_args.instance_path, "Instance file")->required();
    cmd_solve->add_option("--variant", solve_args.variant,
                          "baseline | llm | random_static | random_dynamic | simple2 | random4");
    cmd_solve->add_option("--model", solve_args.model, "Model id for guided variants");
    cmd_solve->add_option("--preset", solve_args.preset, "Configuration preset");
    cmd_solve->add_option("--time-limit", solve_args.time_limit,
                          "Seconds (default: n/5 rule)");
    cmd_solve->add_option("--seed", solve_args.seed, "Seed");
    cmd_solve->add_flag("--offline", solve_args.offline, "Use fixture responses");
    cmd_solve->add_option("--fixtures", solve_args.fixtures, "Fixture file");
    cmd_solve->add_option("--endpoint", solve_args.endpoint, "Chat-completions base URL");

    // --- bench ---
    std::string bench_spec;
    bool bench_offline = false;
    unsigned bench_jobs = 0;
    auto* cmd_bench = app.add_subcommand("bench", "Run a benchmark experiment spec");
    cmd_bench->add_option("--spec", bench_spec, "Experiment spec JSON")->required();
    cmd_bench->add_flag("--offline", bench_offline, "Force fixture providers");
    cmd_bench->add_option("--jobs", bench_jobs, "Parallel rows (overrides spec)");

    // --- stats ---
    std::string stats_results, stats_wilcoxon_a, stats_wilcoxon_b;
    bool stats_runtime = false, stats_friedman = false;
    auto* cmd_stats = app.add_subcommand("stats", "Aggregate results and run tests");
    cmd_stats->add_option("--results", stats_results, "results.csv from bench")->required();
    cmd_stats->add_flag("--runtime", stats_runtime,
                        "Aggregate total runtime instead of time-to-best");
    cmd_stats->add_option("--wilcoxon-a", stats_wilcoxon_a, "Variant A for the one-sided test");
    cmd_stats->add_option("--wilcoxon-b", stats_wilcoxon_b, "Variant B for the one-sided test");
    cmd_stats->add_flag("--friedman", stats_friedman, "Friedman test across all variants");

    // --- trace ---
    SolveArgs trace_args;
    std::string trace_out = "trace.csv";
    auto* cmd_trace = app.add_subcommand("trace", "Export a convergence trace CSV");
    cmd_trace->add_option("--instance", trace_args.instance_path, "Instance file")->required();
    cmd_trace->add_option("--variant", trace_args.variant, "Variant");
    cmd_trace->add_option("--model", trace_args.model, "Model id for guided variants");
    cmd_trace->add_option("--preset", trace_args.preset, "Configuration preset");
    cmd_trace->add_option("--time-limit", trace_args.time_limit, "Seconds (default: n/5)");
    cmd_trace->add_option("--seed", trace_args.seed, "Seed");
    cmd_trace->add_flag("--offline", trace_args.offline, "Use fixture responses");
    cmd_trace->add_option("--fixtures", trace_args.fixtures, "Fixture file");
    cmd_trace->add_option("--endpoint", trace_args.endpoint, "Chat-completions base URL");
    cmd_trace->add_option("--out", trace_out, "Trace CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_generate->parsed()) {
            lrs::GenerationRecipe recipe{gen_lengths, gen_sigmas, gen_reps};
            const auto paths = lrs::generate_corpus(recipe, gen_seed, gen_out);
            std::cout << "wrote " << paths.size() << " instances + manifest.csv to " << gen_out
                      << "\n";
        } else if (cmd_features->parsed()) {
            const auto inst = lrs::read_instance(feat_instance);
            const auto set = lrs::MetricSet::by_name(feat_set);
            write_output(lrs::feature_matrix_csv(lrs::build_feature_matrix(inst, set)), feat_out);
        } else if (cmd_prompt->parsed()) {
            const auto inst = lrs::read_instance(prompt_instance);
            const auto set = lrs::MetricSet::by_name(prompt_set);
            const auto matrix = lrs::build_feature_matrix(inst, set);
            lrs::PromptOptions options;
            options.verbatim = prompt_verbatim;
            write_output(lrs::build_prompt(inst, matrix, set, options).rendered, prompt_out);
        } else if (cmd_guide->parsed()) {
            const auto inst = lrs::read_instance(guide_instance);
            const auto set = lrs::MetricSet::by_name(guide_set);
            auto provider =
                make_provider(guide_model, guide_offline, guide_fixtures, guide_endpoint, 120.0);
            if (auto* mock = dynamic_cast<lrs::MockProvider*>(provider.get()))
                mock->set_instance(inst.name);
            lrs::RetryPolicy retry;
            retry.max_attempts = guide_attempts;
            auto [ab, exchanges] = lrs::obtain_guidance(*provider, inst, set, retry);
            if (!guide_log.empty()) {
                lrs::ExchangeLog log{std::filesystem::path(guide_log)};
                for (const auto& e : exchanges) log.append(e);
            }
            std::cout << lrs::render_alpha_beta(ab);
            std::cerr << exchanges.size() << " exchange(s), last latency "
                      << exchanges.back().latency_s << "s\n";
        } else if (cmd_solve->parsed()) {
            const auto inst = lrs::read_instance(solve_args.instance_path);
            lrs::BrkgaConfig config =
                lrs::brkga_preset(default_preset_for(solve_args.variant, solve_args.preset));
            config.seed = solve_args.seed;
            config.time_limit_s = solve_args.time_limit >= 0.0
                                      ? solve_args.time_limit
                                      : static_cast<double>(inst.n()) / 5.0;
            const auto mode = resolve_mode(solve_args, inst, solve_args.seed);
            const auto result = lrs::evolve(inst, config, mode);
            std::cout << "instance " << inst.name << " n=" << inst.n() << " m=" << inst.m()
                      << "\n";
            std::cout << "score " << result.best.score << " (time-to-best "
                      << result.time_to_best_s << "s, total " << result.total_time_s << "s, "
                      << result.generations << " generations)\n";
            std::cout << "runs:";
            for (std::size_t idx : result.best.selected) std::cout << ' ' << idx + 1;
            std::cout << "\n";
        } else if (cmd_bench->parsed()) {
            lrs::ExperimentSpec spec = lrs::load_experiment_spec(bench_spec);
            if (bench_offline) spec.offline = true;
            if (bench_jobs > 0) spec.jobs = bench_jobs;
            lrs::ProviderFactory factory;
            if (spec.offline) {
                factory = lrs::make_offline_factory(spec.fixtures);
            } else {
                const lrs::HttpProviderConfig provider = spec.provider;
                factory = [provider](const std::string& model) -> std::shared_ptr<lrs::Provider> {
                    lrs::HttpProviderConfig c = provider;
                    c.model = model;
                    return std::make_shared<lrs::OpenAiHttpProvider>(c);
                };
            }
            const auto result = lrs::run_experiment(spec, factory);
            std::cout << "computed " << result.executed << " new rows (" << result.rows.size()
                      << " total) -> " << (spec.output_dir / "results.csv").string() << "\n";
        } else if (cmd_stats->parsed()) {
            const auto rows = lrs::read_results_csv(stats_results);
            if (rows.empty()) throw lrs::ConfigError("no rows in " + stats_results);
            std::cout << lrs::aggregate_csv(lrs::aggregate(rows, stats_runtime));
            if (!stats_wilcoxon_a.empty() && !stats_wilcoxon_b.empty()) {
                try {
                    const auto [a, b] =
                        lrs::paired_scores(rows, stats_wilcoxon_a, stats_wilcoxon_b);
                    const auto w = lrs::stats::wilcoxon_signed_rank(a, b);
                    std::printf("wilcoxon one-sided (%s > %s): W=%.1f p=%.6g n=%zu %s\n",
                                stats_wilcoxon_a.c_str(), stats_wilcoxon_b.c_str(), w.statistic,
                                w.pvalue, w.n_used, w.exact ? "exact" : "approx");
                } catch (const lrs::InsufficientData& e) {
                    std::printf("wilcoxon: %s\n", e.what());
                }
            }
            if (stats_friedman) {
                try {
                    const auto [variants, blocks] = lrs::score_blocks(rows);
                    const auto f = lrs::stats::friedman_test(blocks);
                    std::printf("friedman over %zu variants, %zu blocks: chi2=%.4f p=%.6g\n",
                                variants.size(), blocks.size(), f.statistic, f.pvalue);
                } catch (const lrs::InsufficientData& e) {
                    std::printf("friedman: %s\n", e.what());
                }
            }
        } else if (cmd_trace->parsed()) {
            const auto inst = lrs::read_instance(trace_args.instance_path);
            lrs::BrkgaConfig config =
                lrs::brkga_preset(default_preset_for(trace_args.variant, trace_args.preset));
            config.seed = trace_args.seed;
            config.time_limit_s = trace_args.time_limit >= 0.0
                                      ? trace_args.time_limit
                                      : static_cast<double>(inst.n()) / 5.0;
            const auto mode = resolve_mode(trace_args, inst, trace_args.seed);
            const auto result = lrs::evolve(inst, config, mode);
            write_output(result.trace.to_csv(), trace_out);
            std::cerr << "best " << result.best.score << " in " << result.generations
                      << " generations\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
