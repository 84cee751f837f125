#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lrs/guidance.hpp"
#include "lrs/instance.hpp"
#include "lrs/rng.hpp"

namespace lrs {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Population parameters. The fraction ranges mirror the tuning space the
// presets were drawn from; subpopulation sizes follow
//   elites    = max(1, round(elite_fraction * population_size))
//   mutants   = round(mutant_fraction * population_size)
//   offspring = population_size - elites - mutants
struct BrkgaConfig {
    unsigned population_size = 16;
    double elite_fraction = 0.25;        // [0.1, 0.25]
    double mutant_fraction = 0.17;       // [0.1, 0.3]
    double elite_inherit_prob = 0.56;    // [0.51, 0.8]
    double time_limit_s = 10.0;
    std::uint64_t seed = 0;

    // Optional extras, mainly for tests and batch drivers: a hard generation
    // cap (0 = none) and an early-stop score (0 = none).
    std::uint64_t max_generations = 0;
    std::int64_t stop_at_score = 0;

    unsigned num_elites() const {
        return std::max(1u, static_cast<unsigned>(std::lround(elite_fraction * population_size)));
    }
    unsigned num_mutants() const {
        return static_cast<unsigned>(std::lround(mutant_fraction * population_size));
    }

    void validate() const {
        if (population_size < 3) throw ConfigError("population_size must be >= 3");
        if (elite_fraction < 0.1 || elite_fraction > 0.25)
            throw ConfigError("elite_fraction outside [0.1, 0.25]");
        if (mutant_fraction < 0.1 || mutant_fraction > 0.3)
            throw ConfigError("mutant_fraction outside [0.1, 0.3]");
        if (elite_inherit_prob < 0.51 || elite_inherit_prob > 0.8)
            throw ConfigError("elite_inherit_prob outside [0.51, 0.8]");
        if (time_limit_s < 0.0) throw ConfigError("time_limit_s must be >= 0");
        if (num_elites() + num_mutants() >= population_size)
            throw ConfigError("elites + mutants must leave room for offspring");
    }
};

// Tuned configurations, one per guidance model plus the plain baseline.
inline BrkgaConfig brkga_preset(const std::string& name) {
    BrkgaConfig c;
    if (name == "baseline") {
        c.population_size = 16; c.elite_fraction = 0.25; c.mutant_fraction = 0.17;
        c.elite_inherit_prob = 0.56;
    } else if (name == "gpt41mini") {
        c.population_size = 36; c.elite_fraction = 0.23; c.mutant_fraction = 0.21;
        c.elite_inherit_prob = 0.68;
    } else if (name == "gemini25flash") {
        c.population_size = 21; c.elite_fraction = 0.17; c.mutant_fraction = 0.23;
        c.elite_inherit_prob = 0.60;
    } else if (name == "llama32_3b") {
        c.population_size = 27; c.elite_fraction = 0.19; c.mutant_fraction = 0.21;
        c.elite_inherit_prob = 0.78;
    } else if (name == "llama4maverick") {
        c.population_size = 17; c.elite_fraction = 0.12; c.mutant_fraction = 0.30;
        c.elite_inherit_prob = 0.69;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return c;
}

inline const std::vector<std::string>& brkga_preset_names() {
    static const std::vector<std::string> names = {
        "baseline", "gpt41mini", "gemini25flash", "llama32_3b", "llama4maverick"};
    return names;
}

// ---------------------------------------------------------------------------
// Decoders
// ---------------------------------------------------------------------------

// A random-key vector plus its decoded solution.
struct Chromosome {
    std::vector<double> keys;
    RunSolution solution;
};

// Run visit order by key, descending; ties broken by ascending run index.
inline std::vector<std::size_t> visit_order_standard(std::span<const double> keys) {
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) return keys[a] > keys[b];
        return a < b;
    });
    return order;
}

// Visit order by the product key_i * bias_i, same tie rule.
inline std::vector<std::size_t> visit_order_biased(std::span<const double> keys,
                                                   std::span<const double> bias) {
    std::vector<double> products(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) products[i] = keys[i] * bias[i];
    return visit_order_standard(products);
}

// Greedy construction: walk the visit order and keep every run whose
// insertion preserves feasibility.
inline RunSolution greedy_construct(const LrsInstance& inst,
                                    const std::vector<std::size_t>& order) {
    SelectionBuilder builder(inst);
    for (std::size_t idx : order) builder.try_insert(idx);
    return builder.solution();
}

inline RunSolution decode_standard(std::span<const double> keys, const LrsInstance& inst) {
    if (keys.size() != inst.m())
        throw std::invalid_argument("key vector length does not match run count");
    return greedy_construct(inst, visit_order_standard(keys));
}

inline RunSolution decode_biased(std::span<const double> keys, const BiasVector& bias,
                                 const LrsInstance& inst) {
    if (keys.size() != inst.m() || bias.size() != inst.m())
        throw std::invalid_argument("key/bias vector length does not match run count");
    return greedy_construct(inst, visit_order_biased(keys, bias.values));
}

// ---------------------------------------------------------------------------
// Evolution
// ---------------------------------------------------------------------------

// How new individuals are decoded during evolution.
struct DecoderMode {
    enum class Kind { standard, biased, random_static, random_dynamic };
    Kind kind = Kind::standard;
    BiasVector bias;          // biased
    std::uint64_t seed = 0;   // random_static / random_dynamic

    static DecoderMode standard() { return {}; }
    static DecoderMode biased(BiasVector L) {
        return DecoderMode{Kind::biased, std::move(L), 0};
    }
    static DecoderMode random_static(std::uint64_t seed) {
        return DecoderMode{Kind::random_static, {}, seed};
    }
    static DecoderMode random_dynamic(std::uint64_t seed) {
        return DecoderMode{Kind::random_dynamic, {}, seed};
    }

    const char* name() const {
        switch (kind) {
            case Kind::standard: return "standard";
            case Kind::biased: return "biased";
            case Kind::random_static: return "random_static";
            case Kind::random_dynamic: return "random_dynamic";
        }
        return "?";
    }
};

struct TracePoint {
    double elapsed_s = 0.0;
    std::uint64_t generation = 0;
    std::int64_t best_score = 0;
};

// Best-so-far record over a run; one point at generation 0 and one per
// improvement, so best_score is non-decreasing.
struct AnytimeTrace {
    std::vector<TracePoint> points;

    std::string to_csv() const {
        std::string out = "elapsed_s,generation,best_score\n";
        char buf[96];
        for (const auto& p : points) {
            std::snprintf(buf, sizeof(buf), "%.6f,%llu,%lld\n", p.elapsed_s,
                          static_cast<unsigned long long>(p.generation),
                          static_cast<long long>(p.best_score));
            out += buf;
        }
        return out;
    }
};

struct EvolveResult {
    RunSolution best;
    AnytimeTrace trace;
    std::uint64_t generations = 0;
    double time_to_best_s = 0.0;
    double total_time_s = 0.0;
};

namespace detail {

inline std::vector<double> random_keys(std::size_t m, rng::Stream& stream) {
    std::vector<double> keys(m);
    for (double& k : keys) k = stream.next_unit();
    return keys;
}

}  // namespace detail

// The generational loop: elites are copied with their cached solutions,
// mutants are fresh uniform key vectors, offspring come from parameterized
// uniform crossover between one elite and one non-elite parent. Wall-clock
// budget, checked once per generation. Single-threaded and bitwise
// reproducible for a fixed (config, mode) pair.
inline EvolveResult evolve(const LrsInstance& inst, const BrkgaConfig& config,
                           const DecoderMode& mode) {
    config.validate();
    const std::size_t m = inst.m();
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    EvolveResult result;
    if (m == 0) {
        result.trace.points.push_back({0.0, 0, 0});
        result.total_time_s = elapsed();
        return result;
    }
    if (mode.kind == DecoderMode::Kind::biased && mode.bias.size() != m)
        throw std::invalid_argument("bias vector length does not match run count");

    rng::Stream init_stream(rng::derive_seed(config.seed, "init"));
    rng::Stream mutant_stream(rng::derive_seed(config.seed, "mutants"));
    rng::Stream crossover_stream(rng::derive_seed(config.seed, "crossover"));
    DynamicBiasStream dynamic_bias(m, mode.seed);

    BiasVector static_bias;
    if (mode.kind == DecoderMode::Kind::random_static)
        static_bias = random_bias_static(m, mode.seed);

    BiasVector generation_bias;  // refreshed per generation in dynamic mode
    const auto decode = [&](std::span<const double> keys) -> RunSolution {
        switch (mode.kind) {
            case DecoderMode::Kind::standard: return decode_standard(keys, inst);
            case DecoderMode::Kind::biased: return decode_biased(keys, mode.bias, inst);
            case DecoderMode::Kind::random_static: return decode_biased(keys, static_bias, inst);
            case DecoderMode::Kind::random_dynamic:
                return decode_biased(keys, generation_bias, inst);
        }
        return {};
    };

    const unsigned psi = config.population_size;
    const unsigned num_elites = config.num_elites();
    const unsigned num_mutants = config.num_mutants();
    const unsigned num_offspring = psi - num_elites - num_mutants;

    std::vector<Chromosome> population;
    population.reserve(psi);
    if (mode.kind == DecoderMode::Kind::random_dynamic) generation_bias = dynamic_bias.next();
    for (unsigned i = 0; i < psi; ++i) {
        Chromosome c;
        c.keys = detail::random_keys(m, init_stream);
        c.solution = decode(c.keys);
        population.push_back(std::move(c));
    }

    const auto by_score_desc = [](const Chromosome& a, const Chromosome& b) {
        return a.solution.score > b.solution.score;
    };
    std::stable_sort(population.begin(), population.end(), by_score_desc);

    result.best = population.front().solution;
    result.time_to_best_s = elapsed();
    result.trace.points.push_back({result.time_to_best_s, 0, result.best.score});

    std::uint64_t generation = 0;
    while (elapsed() < config.time_limit_s &&
           (config.max_generations == 0 || generation < config.max_generations) &&
           (config.stop_at_score == 0 || result.best.score < config.stop_at_score)) {
        ++generation;
        if (mode.kind == DecoderMode::Kind::random_dynamic) generation_bias = dynamic_bias.next();

        std::vector<Chromosome> next;
        next.reserve(psi);
        // elites survive with their cached solutions
        for (unsigned i = 0; i < num_elites; ++i) next.push_back(population[i]);
        for (unsigned i = 0; i < num_mutants; ++i) {
            Chromosome c;
            c.keys = detail::random_keys(m, mutant_stream);
            c.solution = decode(c.keys);
            next.push_back(std::move(c));
        }
        for (unsigned i = 0; i < num_offspring; ++i) {
            const Chromosome& elite =
                population[crossover_stream.next_below(num_elites)];
            const Chromosome& other =
                population[num_elites + crossover_stream.next_below(psi - num_elites)];
            Chromosome child;
            child.keys.resize(m);
            for (std::size_t g = 0; g < m; ++g)
                child.keys[g] = crossover_stream.next_bernoulli(config.elite_inherit_prob)
                                    ? elite.keys[g]
                                    : other.keys[g];
            child.solution = decode(child.keys);
            next.push_back(std::move(child));
        }
        if (next.size() != psi)
            throw std::logic_error("population size changed across generations");
        population = std::move(next);
        std::stable_sort(population.begin(), population.end(), by_score_desc);

        if (population.front().solution.score > result.best.score) {
            result.best = population.front().solution;
            result.time_to_best_s = elapsed();
            result.trace.points.push_back({result.time_to_best_s, generation, result.best.score});
        }
    }

    result.generations = generation;
    result.total_time_s = elapsed();
    return result;
}

}  // namespace lrs
