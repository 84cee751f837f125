#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lrs/brkga.hpp"
#include "lrs/instance.hpp"
#include "lrs/llm.hpp"

namespace lrs {

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

enum class VariantKind { baseline, llm, random_static, random_dynamic, simple2, random4 };

struct Variant {
    VariantKind kind = VariantKind::baseline;
    std::string model;   // required for llm / simple2 / random4
    std::string preset = "baseline";

    bool needs_guidance() const {
        return kind == VariantKind::llm || kind == VariantKind::simple2 ||
               kind == VariantKind::random4;
    }

    MetricSet metric_set() const {
        switch (kind) {
            case VariantKind::simple2: return MetricSet::simple2();
            case VariantKind::random4: return MetricSet::random4();
            default: return MetricSet::curated();
        }
    }

    std::string label() const {
        switch (kind) {
            case VariantKind::baseline: return "baseline";
            case VariantKind::llm: return "llm:" + model;
            case VariantKind::random_static: return "random_static";
            case VariantKind::random_dynamic: return "random_dynamic";
            case VariantKind::simple2: return "simple2:" + model;
            case VariantKind::random4: return "random4:" + model;
        }
        return "?";
    }
};

inline VariantKind variant_kind_from_string(const std::string& s) {
    if (s == "baseline") return VariantKind::baseline;
    if (s == "llm") return VariantKind::llm;
    if (s == "random_static") return VariantKind::random_static;
    if (s == "random_dynamic") return VariantKind::random_dynamic;
    if (s == "simple2") return VariantKind::simple2;
    if (s == "random4") return VariantKind::random4;
    throw ConfigError("unknown variant kind: " + s);
}

// Per-instance time budget: the benchmark default is n/5 seconds, optionally
// overridden by a fixed budget.
struct TimeLimitRule {
    enum class Kind { n_over_5, fixed } kind = Kind::n_over_5;
    double fixed_seconds = 0.0;

    double seconds_for(std::size_t n) const {
        return kind == Kind::fixed ? fixed_seconds : static_cast<double>(n) / 5.0;
    }
};

struct GenerationRecipe {
    std::vector<std::size_t> lengths;
    std::vector<std::size_t> sigmas;
    std::size_t reps = 1;
};

struct ExperimentSpec {
    // one of the two instance sources
    std::string instance_glob;                      // e.g. "corpus/*.txt"
    std::optional<GenerationRecipe> generate;
    std::vector<Variant> variants;
    TimeLimitRule time_limit;
    std::uint64_t master_seed = 1;
    std::filesystem::path output_dir = "bench_out";
    bool offline = false;
    std::filesystem::path fixtures;                 // mock fixture file for offline mode
    HttpProviderConfig provider;                    // endpoint/credentials for live mode
    RetryPolicy retry;
    ParseOptions parse_options;
    enum class Fallback { uniform, abort } fallback = Fallback::uniform;
    unsigned jobs = 1;

    void validate() const {
        if (variants.empty()) throw ConfigError("experiment needs at least one variant");
        if (generate && generate->reps < 1) throw ConfigError("reps must be >= 1");
        if (!generate && instance_glob.empty())
            throw ConfigError("experiment needs an instance glob or a generation recipe");
        for (const Variant& v : variants)
            if (v.needs_guidance() && v.model.empty())
                throw ConfigError("variant " + v.label() + " needs a model id");
    }
};

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    if (j.contains("instances")) {
        const auto& inst = j["instances"];
        if (inst.contains("glob")) spec.instance_glob = inst["glob"].get<std::string>();
        if (inst.contains("generate")) {
            GenerationRecipe r;
            r.lengths = inst["generate"]["lengths"].get<std::vector<std::size_t>>();
            r.sigmas = inst["generate"]["sigmas"].get<std::vector<std::size_t>>();
            r.reps = inst["generate"].value("reps", std::size_t{1});
            spec.generate = r;
        }
    }
    for (const auto& vj : j.at("variants")) {
        Variant v;
        v.kind = variant_kind_from_string(vj.at("kind").get<std::string>());
        v.model = vj.value("model", "");
        v.preset = vj.value("preset", "baseline");
        spec.variants.push_back(std::move(v));
    }
    if (j.contains("time_limit")) {
        const auto& tl = j["time_limit"];
        if (tl.value("rule", "n_over_5") == "fixed") {
            spec.time_limit.kind = TimeLimitRule::Kind::fixed;
            spec.time_limit.fixed_seconds = tl.at("seconds").get<double>();
        }
    }
    spec.master_seed = j.value("master_seed", std::uint64_t{1});
    if (j.contains("output_dir")) spec.output_dir = j["output_dir"].get<std::string>();
    spec.offline = j.value("offline", false);
    if (j.contains("fixtures")) spec.fixtures = j["fixtures"].get<std::string>();
    if (j.contains("provider")) {
        const auto& p = j["provider"];
        spec.provider.endpoint = p.value("endpoint", spec.provider.endpoint);
        spec.provider.api_key_env = p.value("api_key_env", spec.provider.api_key_env);
        spec.provider.timeout_s = p.value("timeout_s", spec.provider.timeout_s);
    }
    if (j.contains("retry")) {
        spec.retry.max_attempts = j["retry"].value("max_attempts", 3);
        spec.retry.backoff_base_s = j["retry"].value("backoff_base_s", 1.0);
    }
    if (j.value("fallback", "uniform") == "abort")
        spec.fallback = ExperimentSpec::Fallback::abort;
    spec.jobs = j.value("jobs", 1u);
    return spec;
}

inline ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open experiment spec: " + path.string());
    return experiment_spec_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ResultRow {
    std::string instance;
    std::size_t n = 0;
    std::size_t sigma = 0;
    std::string variant;
    std::int64_t score = 0;
    double time_to_best_s = 0.0;
    double runtime_s = 0.0;
    std::string guidance;  // provenance: llm, llm_fallback_uniform, random_static, ...
    std::uint64_t seed = 0;
};

inline constexpr const char* kResultsHeader =
    "instance,n,sigma,variant,score,time_to_best_s,runtime_s,guidance,seed";

inline std::string result_row_csv(const ResultRow& r) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), ",%zu,%zu,", r.n, r.sigma);
    std::string out = r.instance + buf + r.variant;
    std::snprintf(buf, sizeof(buf), ",%lld,%.6f,%.6f,", static_cast<long long>(r.score),
                  r.time_to_best_s, r.runtime_s);
    out += buf + r.guidance + "," + std::to_string(r.seed);
    return out;
}

inline std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
    std::vector<ResultRow> rows;
    std::ifstream in(path);
    if (!in) return rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        ResultRow r;
        std::getline(ss, r.instance, ',');
        std::getline(ss, field, ',');
        r.n = std::stoull(field);
        std::getline(ss, field, ',');
        r.sigma = std::stoull(field);
        std::getline(ss, r.variant, ',');
        std::getline(ss, field, ',');
        r.score = std::stoll(field);
        std::getline(ss, field, ',');
        r.time_to_best_s = std::stod(field);
        std::getline(ss, field, ',');
        r.runtime_s = std::stod(field);
        std::getline(ss, r.guidance, ',');
        std::getline(ss, field, ',');
        r.seed = std::stoull(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Corpus handling
// ---------------------------------------------------------------------------

// Generates the (lengths x sigmas x reps) corpus into `dir` with a manifest.
// Per-file seeds are derived from the master seed and the file name, so a
// corpus is reproducible from (master seed, recipe, generator version).
inline std::vector<std::filesystem::path> generate_corpus(const GenerationRecipe& recipe,
                                                          std::uint64_t master_seed,
                                                          const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> paths;
    std::vector<ManifestRow> manifest;
    for (std::size_t sigma : recipe.sigmas) {
        for (std::size_t n : recipe.lengths) {
            for (std::size_t rep = 1; rep <= recipe.reps; ++rep) {
                const std::string name = "len_" + std::to_string(n) + "_sigma_" +
                                         std::to_string(sigma) + "_" + std::to_string(rep);
                const std::uint64_t seed = rng::derive_seed(master_seed, name);
                LrsInstance inst = generate(n, sigma, seed, rep);
                paths.push_back(write_instance(inst, dir));
                manifest.push_back({name + ".txt", n, sigma, rep, seed});
            }
        }
    }
    write_manifest(manifest, dir / "manifest.csv");
    return paths;
}

namespace detail {

// Minimal shell-style glob for "dir/prefix*suffix" patterns.
inline std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
    const std::filesystem::path p(pattern);
    const std::filesystem::path dir = p.parent_path().empty() ? "." : p.parent_path();
    const std::string file = p.filename().string();
    const auto star = file.find('*');
    std::vector<std::filesystem::path> out;
    if (star == std::string::npos) {
        if (std::filesystem::exists(p)) out.push_back(p);
        return out;
    }
    const std::string prefix = file.substr(0, star);
    const std::string suffix = file.substr(star + 1);
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() < prefix.size() + suffix.size()) continue;
        if (name.rfind(prefix, 0) != 0) continue;
        if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
        out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

using ProviderFactory = std::function<std::shared_ptr<Provider>(const std::string& model)>;

// Offline factory: every model is served from the same fixture file.
inline ProviderFactory make_offline_factory(const std::filesystem::path& fixtures) {
    return [fixtures](const std::string& model) {
        return std::make_shared<MockProvider>(model, fixtures);
    };
}

struct ExperimentResult {
    std::vector<ResultRow> rows;   // full experiment view, including resumed rows
    std::size_t executed = 0;      // rows actually computed in this call
};

// Runs every instance x variant cell: optional metric extraction + guidance,
// then evolution under the per-instance time budget. Rows are appended to
// <output_dir>/results.csv as they finish; cells already present there are
// skipped, which makes interrupted experiments resumable.
inline ExperimentResult run_experiment(const ExperimentSpec& spec,
                                       const ProviderFactory& provider_factory = {}) {
    spec.validate();
    std::filesystem::create_directories(spec.output_dir);

    std::vector<std::filesystem::path> paths;
    if (spec.generate) {
        const auto corpus_dir = spec.output_dir / "instances";
        if (!std::filesystem::exists(corpus_dir / "manifest.csv"))
            generate_corpus(*spec.generate, spec.master_seed, corpus_dir);
        paths = detail::expand_glob((corpus_dir / "*.txt").string());
    } else {
        paths = detail::expand_glob(spec.instance_glob);
    }
    if (paths.empty()) throw ConfigError("experiment matched no instance files");

    const auto results_path = spec.output_dir / "results.csv";
    ExperimentResult result;
    std::set<std::pair<std::string, std::string>> done;
    for (ResultRow& row : read_results_csv(results_path)) {
        done.emplace(row.instance, row.variant);
        result.rows.push_back(std::move(row));
    }

    const bool fresh = !std::filesystem::exists(results_path);
    std::ofstream out(results_path, std::ios::app);
    if (!out) throw ConfigError("cannot write results: " + results_path.string());
    if (fresh) out << kResultsHeader << '\n';

    ProviderFactory factory = provider_factory;
    if (!factory && spec.offline) {
        if (spec.fixtures.empty())
            throw ConfigError("offline mode needs a fixtures file");
        factory = make_offline_factory(spec.fixtures);
    }
    std::map<std::string, std::shared_ptr<Provider>> providers;
    for (const Variant& v : spec.variants) {
        if (!v.needs_guidance()) continue;
        if (!factory)
            throw ConfigError("variant " + v.label() + " needs a provider (live or offline)");
        if (!providers.count(v.model)) providers[v.model] = factory(v.model);
    }

    ExchangeLog exchange_log(spec.output_dir / "exchanges.jsonl");

    struct Cell {
        std::filesystem::path path;
        const Variant* variant;
    };
    std::vector<Cell> cells;
    for (const auto& path : paths)
        for (const Variant& v : spec.variants) cells.push_back({path, &v});

    std::mutex write_mutex;
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const auto worker = [&] {
        for (;;) {
            const std::size_t index = cursor.fetch_add(1);
            if (index >= cells.size()) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            const Cell& cell = cells[index];
            try {
                const LrsInstance inst = read_instance(cell.path);
                const Variant& variant = *cell.variant;
                if (done.count({inst.name, variant.label()})) continue;

                ResultRow row;
                row.instance = inst.name;
                row.n = inst.n();
                row.sigma = inst.alphabet.size();
                row.variant = variant.label();
                row.seed = rng::derive_seed(spec.master_seed, inst.name + "|" + variant.label());

                BrkgaConfig config = brkga_preset(variant.preset);
                config.seed = row.seed;
                config.time_limit_s = spec.time_limit.seconds_for(inst.n());

                DecoderMode mode = DecoderMode::standard();
                row.guidance = "none";
                if (variant.kind == VariantKind::random_static) {
                    mode = DecoderMode::random_static(row.seed);
                    row.guidance = "random_static";
                } else if (variant.kind == VariantKind::random_dynamic) {
                    mode = DecoderMode::random_dynamic(row.seed);
                    row.guidance = "random_dynamic";
                } else if (variant.needs_guidance()) {
                    Provider& provider = *providers.at(variant.model);
                    if (auto* mock = dynamic_cast<MockProvider*>(&provider))
                        mock->set_instance(inst.name);
                    const MetricSet set = variant.metric_set();
                    std::vector<LlmExchange> failed;
                    try {
                        auto [ab, exchanges] =
                            obtain_guidance(provider, inst, set, spec.retry, {},
                                            spec.parse_options, {}, &failed);
                        for (const auto& e : exchanges) exchange_log.append(e);
                        const FeatureMatrix matrix = build_feature_matrix(inst, set);
                        mode = DecoderMode::biased(build_bias(matrix, ab));
                        row.guidance = set.id == "curated" ? "llm" : "llm_" + set.id;
                    } catch (const GuidanceUnavailable&) {
                        for (const auto& e : failed) exchange_log.append(e);
                        if (spec.fallback == ExperimentSpec::Fallback::abort) throw;
                        mode = DecoderMode::biased(BiasVector::uniform(inst.m()));
                        row.guidance = "fallback_uniform";
                    }
                }

                const EvolveResult evolved = evolve(inst, config, mode);
                row.score = evolved.best.score;
                row.time_to_best_s = evolved.time_to_best_s;
                row.runtime_s = evolved.total_time_s;

                std::lock_guard<std::mutex> lock(write_mutex);
                out << result_row_csv(row) << '\n';
                out.flush();
                result.rows.push_back(std::move(row));
                ++result.executed;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const unsigned jobs = std::max(1u, spec.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.instance != b.instance) return a.instance < b.instance;
        return a.variant < b.variant;
    });
    return result;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct GroupStat {
    std::size_t n = 0;
    std::size_t sigma = 0;
    std::string variant;
    double mean_score = 0.0;
    double mean_time_s = 0.0;
    std::size_t count = 0;
    bool best_in_group = false;  // best mean score among variants of this (n, sigma)
};

// Mean score and mean time per (n, sigma, variant); the time column defaults
// to time-to-best and can be switched to total runtime.
inline std::vector<GroupStat> aggregate(const std::vector<ResultRow>& rows,
                                        bool use_total_runtime = false) {
    if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
    std::map<std::tuple<std::size_t, std::size_t, std::string>, GroupStat> groups;
    for (const ResultRow& r : rows) {
        GroupStat& g = groups[{r.n, r.sigma, r.variant}];
        g.n = r.n;
        g.sigma = r.sigma;
        g.variant = r.variant;
        g.mean_score += static_cast<double>(r.score);
        g.mean_time_s += use_total_runtime ? r.runtime_s : r.time_to_best_s;
        ++g.count;
    }
    std::vector<GroupStat> out;
    out.reserve(groups.size());
    for (auto& [key, g] : groups) {
        g.mean_score /= static_cast<double>(g.count);
        g.mean_time_s /= static_cast<double>(g.count);
        out.push_back(g);
    }
    // flag the best mean score within each (n, sigma)
    std::map<std::pair<std::size_t, std::size_t>, double> best;
    for (const GroupStat& g : out) {
        auto [it, inserted] = best.try_emplace({g.n, g.sigma}, g.mean_score);
        if (!inserted) it->second = std::max(it->second, g.mean_score);
    }
    for (GroupStat& g : out)
        g.best_in_group = g.mean_score == best[{g.n, g.sigma}];
    return out;
}

inline std::string aggregate_csv(const std::vector<GroupStat>& stats) {
    std::string out = "n,sigma,variant,mean_score,mean_time_s,count,best\n";
    char buf[160];
    for (const GroupStat& g : stats) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%s,%.4f,%.4f,%zu,%d\n", g.n, g.sigma,
                      g.variant.c_str(), g.mean_score, g.mean_time_s, g.count,
                      g.best_in_group ? 1 : 0);
        out += buf;
    }
    return out;
}

// Paired per-instance scores for two variants, for the signed-rank test.
inline std::pair<std::vector<double>, std::vector<double>> paired_scores(
    const std::vector<ResultRow>& rows, const std::string& variant_a,
    const std::string& variant_b) {
    std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> by_instance;
    for (const ResultRow& r : rows) {
        if (r.variant == variant_a) by_instance[r.instance].first = static_cast<double>(r.score);
        if (r.variant == variant_b) by_instance[r.instance].second = static_cast<double>(r.score);
    }
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& [name, pair] : by_instance) {
        if (pair.first && pair.second) {
            out.first.push_back(*pair.first);
            out.second.push_back(*pair.second);
        }
    }
    return out;
}

// Instance-blocked score table across all variants, for the Friedman test.
// Returns the variant order plus one row per instance that has results for
// every variant.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> score_blocks(
    const std::vector<ResultRow>& rows) {
    std::set<std::string> variant_set;
    for (const ResultRow& r : rows) variant_set.insert(r.variant);
    const std::vector<std::string> variants(variant_set.begin(), variant_set.end());
    std::map<std::string, std::map<std::string, double>> by_instance;
    for (const ResultRow& r : rows)
        by_instance[r.instance][r.variant] = static_cast<double>(r.score);
    std::vector<std::vector<double>> blocks;
    for (const auto& [name, scores] : by_instance) {
        if (scores.size() != variants.size()) continue;
        std::vector<double> row;
        row.reserve(variants.size());
        for (const auto& v : variants) row.push_back(scores.at(v));
        blocks.push_back(std::move(row));
    }
    return {variants, blocks};
}

}  // namespace lrs
