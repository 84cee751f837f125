#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "lrs/instance.hpp"

using namespace lrs;

namespace {

LrsInstance example_instance() { return LrsInstance::from_text("ZZBCCZBBBC", "example"); }

std::u32string random_text(rng::Stream& stream, std::size_t max_len, std::size_t sigma) {
    const std::size_t len = stream.next_below(max_len + 1);
    std::u32string text;
    for (std::size_t i = 0; i < len; ++i)
        text.push_back(static_cast<char32_t>(U'A' + stream.next_below(sigma)));
    return text;
}

std::u32string rebuild(const std::vector<Run>& runs) {
    std::u32string text;
    for (const Run& r : runs) text.append(r.length, r.character);
    return text;
}

}  // namespace

TEST_CASE("decompose splits the worked example into its six runs") {
    const auto runs = decompose(std::string_view("ZZBCCZBBBC"));
    REQUIRE(runs.size() == 6);
    const std::vector<Run> expected = {
        {U'Z', 0, 2}, {U'B', 2, 1}, {U'C', 3, 2}, {U'Z', 5, 1}, {U'B', 6, 3}, {U'C', 9, 1},
    };
    CHECK(runs == expected);
}

TEST_CASE("decompose handles trivial inputs") {
    CHECK(decompose(std::string_view("")).empty());
    const auto runs = decompose(std::string_view("AAAA"));
    REQUIRE(runs.size() == 1);
    CHECK(runs[0] == Run{U'A', 0, 4});
}

TEST_CASE("decompose reconstruction and run-count properties") {
    rng::Stream stream(99);
    for (int trial = 0; trial < 500; ++trial) {
        const auto text = random_text(stream, 80, 1 + stream.next_below(5));
        const auto runs = decompose(std::u32string_view(text));
        CHECK(rebuild(runs) == text);

        std::size_t total = 0;
        for (const Run& r : runs) total += r.length;
        CHECK(total == text.size());

        std::size_t changes = 0;
        for (std::size_t i = 0; i + 1 < text.size(); ++i)
            if (text[i] != text[i + 1]) ++changes;
        CHECK(runs.size() == (text.empty() ? 0 : changes + 1));

        for (std::size_t i = 0; i + 1 < runs.size(); ++i)
            CHECK(runs[i].character != runs[i + 1].character);
    }
}

TEST_CASE("is_feasible accepts the optimal selection and rejects a split") {
    const auto inst = example_instance();
    // 1-based {R1,R4,R5,R6} -> 0-based {0,3,4,5}
    CHECK(is_feasible(inst, {0, 3, 4, 5}));
    CHECK(objective(inst, {0, 3, 4, 5}) == 7);
    // {R1,R2,R4}: Z B Z splits the Z block
    CHECK_FALSE(is_feasible(inst, {0, 1, 3}));
    CHECK(is_feasible(inst, {}));
    CHECK(objective(inst, {}) == 0);
}

TEST_CASE("is_feasible validates its index preconditions") {
    const auto inst = example_instance();
    CHECK_THROWS_AS(is_feasible(inst, {3, 1}), std::invalid_argument);
    CHECK_THROWS_AS(is_feasible(inst, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(is_feasible(inst, {99}), std::out_of_range);
}

TEST_CASE("objective rejects infeasible selections") {
    const auto inst = example_instance();
    CHECK(objective(inst, {4}) == 3);  // R5 alone
    CHECK_THROWS_AS(objective(inst, {0, 1, 3}), std::invalid_argument);
}

TEST_CASE("SelectionBuilder agrees with the full feasibility scan") {
    rng::Stream stream(7);
    for (int trial = 0; trial < 300; ++trial) {
        auto text = random_text(stream, 60, 1 + stream.next_below(4));
        if (text.empty()) text = U"A";
        const auto inst = LrsInstance::from_text(text);
        SelectionBuilder builder(inst);
        std::vector<std::size_t> chosen;
        // insert runs in a random order, mirroring decoder usage
        std::vector<std::size_t> order(inst.m());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[stream.next_below(i)]);
        for (std::size_t idx : order) {
            // the builder's verdict must match a from-scratch re-scan
            std::vector<std::size_t> candidate = chosen;
            candidate.insert(std::upper_bound(candidate.begin(), candidate.end(), idx), idx);
            const bool full_scan = is_feasible(inst, candidate);
            CHECK(builder.can_insert(idx) == full_scan);
            if (builder.try_insert(idx)) chosen = std::move(candidate);
        }
        CHECK(is_feasible(inst, chosen));
        CHECK(builder.score() == objective(inst, chosen));
    }
}

TEST_CASE("generate: degenerate alphabet yields one uniform run") {
    const auto inst = generate(10, 1, 123);
    CHECK(inst.utf8_text() == "AAAAAAAAAA");
    CHECK(inst.m() == 1);
    CHECK(inst.name == "len_10_sigma_1_1");
}

TEST_CASE("generate is deterministic for a fixed seed") {
    const auto a = generate(100, 2, 7);
    const auto b = generate(100, 2, 7);
    CHECK(a.text == b.text);
    const auto c = generate(100, 2, 8);
    CHECK(a.text != c.text);  // overwhelmingly likely under any seeding scheme
}

TEST_CASE("generate: character histogram passes a chi-square uniformity check") {
    const std::size_t n = 5000, sigma = 32;
    const auto inst = generate(n, sigma, 42);
    REQUIRE(inst.alphabet.size() == sigma);
    std::map<char32_t, std::size_t> counts;
    for (char32_t c : inst.text) ++counts[c];
    const double expected = static_cast<double>(n) / sigma;
    double chi2 = 0.0;
    for (const auto& [c, count] : counts) {
        const double diff = static_cast<double>(count) - expected;
        chi2 += diff * diff / expected;
    }
    // chi-square critical value, 31 dof, alpha = 0.01 (frozen from scipy)
    CHECK(chi2 < 52.191394833192);
}

TEST_CASE("generate rejects invalid parameters") {
    CHECK_THROWS_AS(generate(0, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate(10, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate(10, 100, 1), CapabilityError);
}

TEST_CASE("exact solvers find the worked-example optimum") {
    const auto inst = example_instance();
    CHECK(exact_solve_enumeration(inst).score == 7);
    CHECK(exact_solve_dp(inst).score == 7);
    CHECK(exact_solve(inst).score == 7);
    const auto sol = exact_solve(inst);
    CHECK(is_feasible(inst, sol.selected));
    CHECK(objective(inst, sol.selected) == sol.score);
}

TEST_CASE("exact solvers on trivial inputs") {
    const auto inst = LrsInstance::from_text("AB");
    CHECK(exact_solve(inst).score == 2);
    const auto empty = LrsInstance::from_text("");
    CHECK(exact_solve(empty).score == 0);
}

TEST_CASE("enumeration and dp oracles agree") {
    const auto inst = generate(40, 3, 1);
    const auto a = exact_solve_enumeration(inst);
    const auto b = exact_solve_dp(inst);
    CHECK(a.score == b.score);
    CHECK(objective(inst, a.selected) == a.score);
    CHECK(objective(inst, b.selected) == b.score);

    rng::Stream stream(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto random_inst =
            generate(20 + stream.next_below(21), 2 + stream.next_below(3), stream.next_u64());
        if (random_inst.m() > kEnumerationMaxRuns) continue;
        const auto enum_sol = exact_solve_enumeration(random_inst);
        const auto dp_sol = exact_solve_dp(random_inst);
        CHECK(enum_sol.score == dp_sol.score);
        CHECK(objective(random_inst, dp_sol.selected) == dp_sol.score);
    }
}

TEST_CASE("exact_solve score is at least the longest run") {
    rng::Stream stream(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = generate(30, 2 + stream.next_below(3), stream.next_u64());
        std::size_t l_max = 0;
        for (const Run& r : inst.runs) l_max = std::max(l_max, r.length);
        CHECK(exact_solve(inst).score >= static_cast<std::int64_t>(l_max));
    }
}

TEST_CASE("exact_solve reports a capability error beyond both modes") {
    // sigma = 16 > dp limit, and enough runs to exceed the enumeration limit
    const auto inst = generate(200, 16, 3);
    REQUIRE(inst.m() > kEnumerationMaxRuns);
    CHECK_THROWS_AS(exact_solve(inst), CapabilityError);
}

TEST_CASE("instance file round trip and naming") {
    const auto dir = std::filesystem::temp_directory_path() / "lrs_instance_io_test";
    std::filesystem::remove_all(dir);
    const auto inst = generate(100, 32, 9, 3);
    CHECK(inst.name == "len_100_sigma_32_3");
    const auto path = write_instance(inst, dir);
    CHECK(path.filename() == "len_100_sigma_32_3.txt");
    const auto loaded = read_instance(path);
    CHECK(loaded.text == inst.text);
    CHECK(loaded.name == inst.name);
    CHECK(loaded.runs == inst.runs);
    std::filesystem::remove_all(dir);
}

TEST_CASE("read_instance rejects malformed files") {
    const auto dir = std::filesystem::temp_directory_path() / "lrs_instance_bad_test";
    std::filesystem::create_directories(dir);

    const auto empty_path = dir / "empty.txt";
    std::ofstream(empty_path).close();
    CHECK_THROWS_AS(read_instance(empty_path), FormatError);

    const auto multi_path = dir / "multi.txt";
    std::ofstream(multi_path) << "ABC\nDEF\n";
    CHECK_THROWS_AS(read_instance(multi_path), FormatError);

    const auto bad_utf8_path = dir / "bad.txt";
    std::ofstream(bad_utf8_path, std::ios::binary) << "AB\xff\xfe";
    CHECK_THROWS_AS(read_instance(bad_utf8_path), FormatError);

    CHECK_THROWS_AS(read_instance(dir / "missing.txt"), FormatError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("read_instance tolerates a trailing newline") {
    const auto dir = std::filesystem::temp_directory_path() / "lrs_instance_nl_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "x.txt";
    std::ofstream(path) << "ZZBCCZBBBC\n";
    const auto inst = read_instance(path);
    CHECK(inst.utf8_text() == "ZZBCCZBBBC");
    CHECK(inst.name == "x");
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest records generator metadata") {
    const auto dir = std::filesystem::temp_directory_path() / "lrs_manifest_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_manifest({{"a.txt", 100, 2, 1, 42}}, dir / "manifest.csv");
    std::ifstream in(dir / "manifest.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "file,n,sigma,k,seed,generator_version");
    CHECK(row == std::string("a.txt,100,2,1,42,") + rng::kGeneratorVersion);
    std::filesystem::remove_all(dir);
}
