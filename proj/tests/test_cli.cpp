#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qa/cli.hpp"
#include "support.hpp"

using namespace qa;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "qa");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> bundle_args(const std::string& system, const std::string& plan = "casestudy.plan.json") {
    using testing::fixture_path;
    std::vector<std::string> a{"--model", fixture_path("casestudy.qm.json"), "--plan", plan.front() == '/' ? plan : fixture_path(plan),
                               "--taxonomy", fixture_path("taxonomy.json"), "--system",
                               fixture_path(system + ".system.json"), "--findings"};
    for (const char* s : {"grendel", "w3af", "wapiti"}) a.push_back(fixture_path(system + "." + s + ".findings.json"));
    return a;
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("validate", "[cli]") {
    CHECK(run({"validate", "--model", testing::fixture_path("casestudy.qm.json")}).code == cli::kOk);
    const auto bad = temp_file("qa-cli-bad.qm.json");
    std::ofstream(bad) << R"({"activities": [{"id": "a", "parent": "zzz"}]})";
    const auto r = run({"validate", "--model", bad.string()});
    CHECK(r.code == cli::kDomainError);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("dangling-reference"));
    CHECK(run({"validate", "--model", "/nonexistent/model.json"}).code == cli::kUsageError);
}

TEST_CASE("derive prints node counts", "[cli]") {
    const auto r = run({"derive", "--model", testing::fixture_path("casestudy.qm.json"), "--plan",
                        testing::fixture_path("casestudy.plan.json")});
    CHECK(r.code == cli::kOk);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("20 nodes"));
}

TEST_CASE("assess writes a report", "[cli]") {
    const auto out = temp_file("qa-cli-report.json");
    const auto r = run(cat(cat({"assess"}, bundle_args("phpshop")), {"--out", out.string(), "--timestamp", "2026-01-01T00:00:00Z"}));
    REQUIRE(r.code == cli::kOk);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("Vulnerability Density: mean"));
    auto doc = nlohmann::json::parse(testing::read_text(out.string()));
    auto golden = nlohmann::json::parse(testing::read_text(testing::fixture_path("phpshop.report.json")));
    CHECK(doc == golden);

    const auto text = run(cat(cat({"assess"}, bundle_args("zencart")), {"--format", "text"}));
    CHECK(text.code == cli::kOk);
    CHECK_THAT(text.out, Catch::Matchers::ContainsSubstring("Question:"));
}

TEST_CASE("exit codes", "[cli]") {
    CHECK(run({}).code == cli::kUsageError);
    CHECK(run({"assess"}).code == cli::kUsageError);
    CHECK(run(cat(cat({"assess"}, bundle_args("phpshop")), {"--format", "xml"})).code == cli::kUsageError);

    const auto plan = temp_file("qa-cli-noroot.plan.json");
    std::ofstream(plan) << R"({"rootActivity": "defence", "metricNode": {"name": "Vulnerability Density", "range": [0, 0.02]}})";
    const auto r = run(cat({"assess"}, bundle_args("phpshop", plan.string())));
    CHECK(r.code == cli::kDomainError);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("[derive]"));
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("defence"));
}

TEST_CASE("whatif applies overrides", "[cli]") {
    const auto out = temp_file("qa-cli-whatif.json");
    const auto r = run(cat(cat({"whatif"}, bundle_args("phpshop")), {"--set", "m.sql-injection=yes", "--out", out.string()}));
    REQUIRE(r.code == cli::kOk);
    const auto doc = nlohmann::json::parse(testing::read_text(out.string()));
    CHECK(doc["overrides"]["m.sql-injection"] == "yes");
    CHECK(run(cat(cat({"whatif"}, bundle_args("phpshop")), {"--set", "m.sql-injection"})).code == cli::kDomainError);
    CHECK(run(cat(cat({"whatif"}, bundle_args("phpshop")), {"--set", "m.nothing=yes"})).code == cli::kDomainError);
}
