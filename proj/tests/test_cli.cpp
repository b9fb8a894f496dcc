#include "cli.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fabula {
namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args, const std::string& input = {}) {
    args.insert(args.begin(), "fabula");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::istringstream in(input);
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
    return {code, out.str(), err.str()};
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

TEST(Cli, ExtractKeywordsFromStdin) {
    const auto r = cli({"extract"}, "I went to see the movie with my friends.\nHe is tall.\n");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "I, the movie, my friends\nHe\n");
}

TEST(Cli, StoryLoop) {
    testing::TempDir dir;
    const auto base = std::vector<std::string>{"--mock", "--sessions-dir", dir.path().string()};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail = {}) {
        head.insert(head.end(), base.begin(), base.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return cli(head);
    };

    auto r = with({"story", "new"}, {"--first", "Mary had been feeling depressed lately."});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto id = first_line(r.out);
    EXPECT_EQ(id.size(), 36U);
    EXPECT_NE(r.out.find("phase: SuggestionsReady"), std::string::npos);
    EXPECT_NE(r.out.find("emotions: sadness"), std::string::npos);
    EXPECT_NE(r.out.find("keywords: Mary"), std::string::npos);

    r = with({"story", "override"}, {"--id", id, "--keywords", "Mary,a psychiatrist"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("keywords: Mary, a psychiatrist"), std::string::npos);

    r = with({"story", "next"}, {"--id", id});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(first_line(r.out), "She decided to go see a psychiatrist.");

    r = with({"story", "select"}, {"--id", id, "--index", "0"});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());

    r = with({"story", "images"}, {"--id", id, "--background", "city street"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("image 2: "), std::string::npos);

    r = with({"story", "select"}, {"--id", id, "--index", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("person"), std::string::npos);

    r = with({"story", "show"}, {"--id", id, "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["story"].size(), 2U);
    EXPECT_EQ(j["phase"], "SuggestionsReady");

    r = with({"story", "show"}, {"--id", "missing"});
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, EvalRunAndReport) {
    testing::TempDir dir;
    const auto report = (dir.path() / "report.json").string();
    const auto csv = (dir.path() / "scores.csv").string();
    auto r = cli({"eval", "run", "--corpus", testing::fixture_path("corpus.jsonl").string(), "--out",
                  report, "--csv", csv});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(report);
    const auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["items"], 8);
    EXPECT_EQ(j["system_a"], "mock:prompted");
    EXPECT_TRUE(std::filesystem::exists(csv));

    r = cli({"eval", "report", "--in", report});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("mock:prompted vs mock:baseline (8 items, 0 skipped)"), std::string::npos);
    EXPECT_NE(r.out.find("meteor"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    auto r = cli({"story", "new", "--bogus"});
    EXPECT_EQ(r.code, 1);
    r = cli({"eval", "run", "--corpus", "/nonexistent.jsonl"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(cli({"--help"}).code, 0);

    // An unreachable text backend is a backend-class failure.
    testing::TempDir dir;
    std::ofstream(dir.path() / "fabula.conf") << "text_url = http://127.0.0.1:1\n"
                                               << "backend_timeout_ms = 200\nbackend_retries = 0\n";
    const auto conf = (dir.path() / "fabula.conf").string();
    const auto sessions = (dir.path() / "s").string();
    r = cli({"story", "new", "--config", conf, "--sessions-dir", sessions, "--first", "Tom ran."});
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli({"story", "next", "--config", conf, "--sessions-dir", sessions, "--id", first_line(r.out)});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("backend"), std::string::npos);
}

}  // namespace
}  // namespace fabula
