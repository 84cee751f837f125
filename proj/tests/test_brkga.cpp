#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lrs/brkga.hpp"

using namespace lrs;
using Catch::Matchers::WithinAbs;

namespace {

LrsInstance example_instance() { return LrsInstance::from_text("ZZBCCZBBBC", "example"); }

const std::vector<double> kExampleKeys = {0.72, 0.91, 0.15, 0.88, 0.50, 0.65};
const std::vector<double> kExampleBias = {0.85, 0.40, 0.70, 0.30, 0.95, 0.25};

LrsInstance random_instance(rng::Stream& stream, std::size_t max_len = 60,
                            std::size_t max_sigma = 5) {
    const std::size_t len = 1 + stream.next_below(max_len);
    const std::size_t sigma = 1 + stream.next_below(max_sigma);
    std::u32string text;
    for (std::size_t i = 0; i < len; ++i)
        text.push_back(static_cast<char32_t>(U'A' + stream.next_below(sigma)));
    return LrsInstance::from_text(std::move(text));
}

}  // namespace

TEST_CASE("presets carry the tuned configurations") {
    const auto baseline = brkga_preset("baseline");
    CHECK(baseline.population_size == 16);
    CHECK(baseline.elite_fraction == 0.25);
    CHECK(baseline.mutant_fraction == 0.17);
    CHECK(baseline.elite_inherit_prob == 0.56);

    const auto maverick = brkga_preset("llama4maverick");
    CHECK(maverick.population_size == 17);
    CHECK(maverick.elite_fraction == 0.12);
    CHECK(maverick.mutant_fraction == 0.30);
    CHECK(maverick.elite_inherit_prob == 0.69);

    for (const auto& name : brkga_preset_names()) CHECK_NOTHROW(brkga_preset(name).validate());
    CHECK_THROWS_AS(brkga_preset("unknown"), ConfigError);
}

TEST_CASE("config validation rejects out-of-range parameters") {
    BrkgaConfig config = brkga_preset("baseline");
    config.population_size = 2;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = brkga_preset("baseline");
    config.elite_fraction = 0.3;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = brkga_preset("baseline");
    config.mutant_fraction = 0.05;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = brkga_preset("baseline");
    config.elite_inherit_prob = 0.5;
    CHECK_THROWS_AS(config.validate(), ConfigError);

    config = brkga_preset("baseline");
    config.time_limit_s = -1.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
}

TEST_CASE("standard decoder visits runs in the worked-example order") {
    const auto order = visit_order_standard(kExampleKeys);
    CHECK(order == std::vector<std::size_t>{1, 3, 0, 5, 4, 2});  // R2,R4,R1,R6,R5,R3

    const auto inst = example_instance();
    const auto sol = decode_standard(kExampleKeys, inst);
    CHECK(is_feasible(inst, sol.selected));
    CHECK(sol.score == objective(inst, sol.selected));
}

TEST_CASE("equal keys fall back to ascending run order") {
    const std::vector<double> keys(6, 0.5);
    const auto order = visit_order_standard(keys);
    CHECK(order == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("biased decoder reproduces the worked-example products and order") {
    const std::vector<double> expected_products = {0.612, 0.364, 0.105, 0.264, 0.475, 0.163};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK_THAT(kExampleKeys[i] * kExampleBias[i], WithinAbs(expected_products[i], 1e-12));

    const auto order = visit_order_biased(kExampleKeys, kExampleBias);
    CHECK(order == std::vector<std::size_t>{0, 4, 1, 3, 5, 2});  // R1,R5,R2,R4,R6,R3

    const auto inst = example_instance();
    BiasVector bias{kExampleBias, BiasProvenance::llm};
    const auto sol = decode_biased(kExampleKeys, bias, inst);
    CHECK(is_feasible(inst, sol.selected));
    CHECK(sol.score == 7);  // the reordering recovers the optimum here
}

TEST_CASE("decoders reject length mismatches") {
    const auto inst = example_instance();
    const std::vector<double> short_keys = {0.1, 0.2};
    CHECK_THROWS_AS(decode_standard(short_keys, inst), std::invalid_argument);
    BiasVector bias{{0.5, 0.5}, BiasProvenance::uniform};
    CHECK_THROWS_AS(decode_biased(kExampleKeys, bias, inst), std::invalid_argument);
}

TEST_CASE("constant bias reproduces the standard permutation and solution") {
    rng::Stream stream(41);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = 1 + stream.next_below(40);
        std::vector<double> keys(m);
        for (double& k : keys) k = stream.next_unit();
        const double c = stream.next_open_unit();
        std::vector<double> bias(m, c);
        CHECK(visit_order_biased(keys, bias) == visit_order_standard(keys));
    }
}

TEST_CASE("decoded solutions are always feasible") {
    rng::Stream stream(42);
    for (int trial = 0; trial < 500; ++trial) {
        const auto inst = random_instance(stream);
        std::vector<double> keys(inst.m());
        for (double& k : keys) k = stream.next_unit();
        BiasVector bias;
        bias.values.resize(inst.m());
        for (double& v : bias.values) v = stream.next_open_unit();
        const auto standard = decode_standard(keys, inst);
        CHECK(is_feasible(inst, standard.selected));
        CHECK(standard.score == objective(inst, standard.selected));
        const auto biased = decode_biased(keys, bias, inst);
        CHECK(is_feasible(inst, biased.selected));
        CHECK(biased.score == objective(inst, biased.selected));
    }
}

TEST_CASE("evolve finds the worked-example optimum in every mode") {
    const auto inst = example_instance();
    BrkgaConfig config = brkga_preset("baseline");
    config.time_limit_s = 1.0;
    config.seed = 5;
    config.stop_at_score = 7;

    const auto matrix = build_feature_matrix(inst, MetricSet::curated());
    AlphaBeta ab;
    ab.alphas.assign(4, 0.25);
    ab.betas.assign(4, 0.5);

    CHECK(evolve(inst, config, DecoderMode::standard()).best.score == 7);
    CHECK(evolve(inst, config, DecoderMode::biased(build_bias(matrix, ab))).best.score == 7);
    CHECK(evolve(inst, config, DecoderMode::random_static(3)).best.score == 7);
    CHECK(evolve(inst, config, DecoderMode::random_dynamic(3)).best.score == 7);
}

TEST_CASE("budget zero still evaluates the initial population") {
    const auto inst = example_instance();
    BrkgaConfig config = brkga_preset("baseline");
    config.time_limit_s = 0.0;
    config.seed = 1;
    const auto result = evolve(inst, config, DecoderMode::standard());
    CHECK(result.generations == 0);
    CHECK(result.trace.points.size() >= 1);
    CHECK(result.best.score > 0);
    CHECK(is_feasible(inst, result.best.selected));
}

TEST_CASE("evolve on an empty instance returns the trivial solution") {
    const auto inst = LrsInstance::from_text("");
    BrkgaConfig config = brkga_preset("baseline");
    config.time_limit_s = 0.1;
    const auto result = evolve(inst, config, DecoderMode::standard());
    CHECK(result.best.score == 0);
    CHECK(result.best.selected.empty());
    CHECK(result.trace.points.size() == 1);
}

TEST_CASE("evolve is deterministic under a fixed seed and generation cap") {
    const auto inst = generate(120, 4, 17);
    BrkgaConfig config = brkga_preset("baseline");
    config.time_limit_s = 60.0;  // generous; the generation cap binds first
    config.max_generations = 150;
    config.seed = 23;

    for (const auto mode : {DecoderMode::standard(), DecoderMode::random_static(9),
                            DecoderMode::random_dynamic(9)}) {
        const auto a = evolve(inst, config, mode);
        const auto b = evolve(inst, config, mode);
        CHECK(a.best.score == b.best.score);
        CHECK(a.best.selected == b.best.selected);
        CHECK(a.generations == b.generations);
        REQUIRE(a.trace.points.size() == b.trace.points.size());
        for (std::size_t i = 0; i < a.trace.points.size(); ++i) {
            CHECK(a.trace.points[i].generation == b.trace.points[i].generation);
            CHECK(a.trace.points[i].best_score == b.trace.points[i].best_score);
        }
    }
}

TEST_CASE("anytime traces are non-decreasing and timing is consistent") {
    rng::Stream stream(43);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(stream, 100, 6);
        BrkgaConfig config = brkga_preset("baseline");
        config.time_limit_s = 0.05;
        config.seed = stream.next_u64();
        const auto result = evolve(inst, config, DecoderMode::standard());
        for (std::size_t i = 1; i < result.trace.points.size(); ++i) {
            CHECK(result.trace.points[i].best_score > result.trace.points[i - 1].best_score);
            CHECK(result.trace.points[i].elapsed_s >= result.trace.points[i - 1].elapsed_s);
        }
        CHECK(result.time_to_best_s <= result.total_time_s);
        CHECK(result.best.score == result.trace.points.back().best_score);
    }
}

TEST_CASE("dynamic mode keeps improving scores monotone despite fresh bias") {
    const auto inst = generate(200, 8, 31);
    BrkgaConfig config = brkga_preset("baseline");
    config.time_limit_s = 0.2;
    config.seed = 7;
    const auto result = evolve(inst, config, DecoderMode::random_dynamic(7));
    for (std::size_t i = 1; i < result.trace.points.size(); ++i)
        CHECK(result.trace.points[i].best_score > result.trace.points[i - 1].best_score);
    CHECK(is_feasible(inst, result.best.selected));
}

TEST_CASE("trace CSV export") {
    AnytimeTrace trace;
    trace.points = {{0.0, 0, 3}, {0.5, 2, 7}};
    CHECK(trace.to_csv() ==
          "elapsed_s,generation,best_score\n0.000000,0,3\n0.500000,2,7\n");
}
