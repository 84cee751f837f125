#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lrs/bench.hpp"

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_cli(const std::string& args, const std::filesystem::path& dir) {
    const auto out_path = dir / "cmd_output.txt";
    const std::string command = std::string(LRS_CLI_PATH) + " " + args + " > " +
                                out_path.string() + " 2>&1";
    const int status = std::system(command.c_str());
    CommandResult result;
    result.exit_code = WEXITSTATUS(status);
    std::ifstream in(out_path);
    result.output.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return result;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("cli: generate writes the corpus and manifest") {
    const auto dir = fresh_dir("lrs_cli_generate");
    const auto result = run_cli(
        "generate --lengths 100 --sigmas 2 --reps 30 --seed 1 --out " + (dir / "c").string(),
        dir);
    CHECK(result.exit_code == 0);
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir / "c"))
        if (entry.path().extension() == ".txt") ++files;
    CHECK(files == 30);
    CHECK(std::filesystem::exists(dir / "c" / "manifest.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli: solve prints score and selected runs") {
    const auto dir = fresh_dir("lrs_cli_solve");
    {
        std::ofstream out(dir / "x.txt");
        out << "ZZBCCZBBBC\n";
    }
    const auto result = run_cli("solve --instance " + (dir / "x.txt").string() +
                                    " --variant baseline --time-limit 2 --seed 1",
                                dir);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("score 7") != std::string::npos);
    CHECK(result.output.find("runs:") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli: features and prompt render to files") {
    const auto dir = fresh_dir("lrs_cli_features");
    {
        std::ofstream out(dir / "x.txt");
        out << "ZZBCCZBBBC\n";
    }
    auto result = run_cli("features --instance " + (dir / "x.txt").string() + " --out " +
                              (dir / "f.csv").string(),
                          dir);
    CHECK(result.exit_code == 0);
    std::ifstream csv(dir / "f.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "run,normalized-length,opportunity,distance-next,character-frequency");

    result = run_cli("prompt --instance " + (dir / "x.txt").string() + " --verbatim --out " +
                         (dir / "p.txt").string(),
                     dir);
    CHECK(result.exit_code == 0);
    std::ifstream prompt(dir / "p.txt");
    std::string text((std::istreambuf_iterator<char>(prompt)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("node,normalized-length,opportunity ,distance-next,character-frequency") !=
          std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli: guide works offline against fixtures") {
    const auto dir = fresh_dir("lrs_cli_guide");
    {
        std::ofstream out(dir / "x.txt");
        out << "ZZBCCZBBBC\n";
    }
    {
        nlohmann::json fixtures = {
            {"default",
             nlohmann::json::array(
                 {"alpha_1=0.4\nalpha_2=0.3\nalpha_3=0.2\nalpha_4=0.1\n"
                  "beta_1=0.9\nbeta_2=0.8\nbeta_3=0.1\nbeta_4=0.5\n"})}};
        std::ofstream out(dir / "fx.json");
        out << fixtures.dump();
    }
    const auto result = run_cli("guide --instance " + (dir / "x.txt").string() +
                                    " --model mock --offline --fixtures " +
                                    (dir / "fx.json").string(),
                                dir);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("alpha_1=0.4") != std::string::npos);
    CHECK(result.output.find("beta_4=0.5") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli: bench --offline completes with no network, then stats") {
    const auto dir = fresh_dir("lrs_cli_bench");
    {
        std::ofstream out(dir / "fx.json");
        nlohmann::json fixtures = {
            {"default",
             nlohmann::json::array(
                 {"alpha_1=0.4\nalpha_2=0.3\nalpha_3=0.2\nalpha_4=0.1\n"
                  "beta_1=0.9\nbeta_2=0.8\nbeta_3=0.1\nbeta_4=0.5\n"})}};
        out << fixtures.dump();
    }
    {
        nlohmann::json spec = {
            {"instances",
             {{"generate", {{"lengths", {40}}, {"sigmas", {2}}, {"reps", 2}}}}},
            {"variants",
             nlohmann::json::array({{{"kind", "baseline"}},
                                    {{"kind", "llm"}, {"model", "mock-model"}}})},
            {"time_limit", {{"rule", "fixed"}, {"seconds", 0.05}}},
            {"master_seed", 3},
            {"output_dir", (dir / "out").string()},
            {"fixtures", (dir / "fx.json").string()},
            {"retry", {{"max_attempts", 3}, {"backoff_base_s", 0.0}}},
        };
        std::ofstream out(dir / "spec.json");
        out << spec.dump(2);
    }
    auto result = run_cli("bench --spec " + (dir / "spec.json").string() + " --offline", dir);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("computed 4 new rows") != std::string::npos);

    result = run_cli("stats --results " + (dir / "out" / "results.csv").string() +
                         " --wilcoxon-a llm:mock-model --wilcoxon-b baseline --friedman",
                     dir);
    // only 2 paired instances -> wilcoxon correctly refuses; aggregate still prints
    CHECK(result.output.find("n,sigma,variant,mean_score") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli: trace exports a convergence csv") {
    const auto dir = fresh_dir("lrs_cli_trace");
    {
        std::ofstream out(dir / "x.txt");
        out << "ZZBCCZBBBC\n";
    }
    const auto result = run_cli("trace --instance " + (dir / "x.txt").string() +
                                    " --variant baseline --time-limit 0.2 --seed 3 --out " +
                                    (dir / "t.csv").string(),
                                dir);
    CHECK(result.exit_code == 0);
    std::ifstream csv(dir / "t.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "elapsed_s,generation,best_score");
    std::filesystem::remove_all(dir);
}

TEST_CASE("cli: usage errors exit nonzero") {
    const auto dir = fresh_dir("lrs_cli_errors");
    CHECK(run_cli("solve", dir).exit_code != 0);            // missing --instance
    CHECK(run_cli("nonsense", dir).exit_code != 0);         // unknown subcommand
    CHECK(run_cli("solve --instance /nonexistent.txt", dir).exit_code != 0);
    std::filesystem::remove_all(dir);
}
