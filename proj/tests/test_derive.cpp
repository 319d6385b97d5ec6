#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>

#include "qa/derive.hpp"
#include "qa/error.hpp"
#include "support.hpp"

using namespace qa;
using namespace qa::derive;

namespace {

model::QualityModel case_model() {
    return model::parse_model(testing::read_text(testing::fixture_path("casestudy.qm.json")));
}

AssessmentPlan case_plan() { return parse_plan(testing::read_text(testing::fixture_path("casestudy.plan.json"))); }

bool has_parent(const bayes::BayesNet& net, std::string_view child, std::string_view parent) {
    const auto& ps = net.node(child).parents;
    return std::find(ps.begin(), ps.end(), parent) != ps.end();
}

}  // namespace

TEST_CASE("case-study net has the expected node counts", "[derive]") {
    const auto d = derive_net(case_model(), case_plan());
    std::map<bayes::NodeKind, int> kinds;
    for (const auto& n : d.net.nodes()) ++kinds[n.kind];
    CHECK(d.net.size() == 20);
    CHECK(kinds[bayes::NodeKind::activity] == 9);
    CHECK(kinds[bayes::NodeKind::factor] == 6);
    CHECK(kinds[bayes::NodeKind::measure] == 4);
    CHECK(kinds[bayes::NodeKind::metric] == 1);
    CHECK(d.root_node == "a.attack");
    CHECK(d.metric_node == "metric.vulnerability-density");
    CHECK(d.net.node(d.metric_node).states.size() == 40);
}

TEST_CASE("edges follow the model", "[derive]") {
    const auto d = derive_net(case_model(), case_plan());
    CHECK(has_parent(d.net, "a.attack", "f.visibility-of-public-code-comment"));
    CHECK(has_parent(d.net, "a.attack", "a.injection"));
    CHECK(has_parent(d.net, "a.injection", "a.sql-injection-attack"));
    CHECK(has_parent(d.net, "a.sql-injection-attack", "f.sanitation-of-sql-statement"));
    CHECK(has_parent(d.net, "m.sql-injection", "f.sanitation-of-sql-statement"));
    CHECK(d.net.node(d.metric_node).parents == std::vector<std::string>{"a.attack"});
}

TEST_CASE("every impact and hierarchy edge is preserved", "[derive][property]") {
    const auto m = case_model();
    const auto d = derive_net(m, case_plan());
    for (const auto& i : m.impacts) CHECK(has_parent(d.net, activity_node_id(i.target), factor_node_id(i.source)));
    for (const auto& a : m.activities) {
        if (a.parent) CHECK(has_parent(d.net, activity_node_id(*a.parent), activity_node_id(a.id)));
    }
    for (const auto& ms : m.measures) {
        if (ms.kind != model::MeasureKind::scanner_finding) continue;
        CHECK(d.net.node(measure_node_id(ms.id)).parents == std::vector<std::string>{factor_node_id(ms.target)});
    }
}

TEST_CASE("minimal model gives an activity and a metric", "[derive]") {
    const auto m = model::parse_model(R"({"activities": [{"id": "a"}]})");
    AssessmentPlan plan;
    plan.root_activity = "a";
    plan.metric.name = "Density";
    const auto d = derive_net(m, plan);
    CHECK(d.net.size() == 2);
    CHECK(d.metric_node == "metric.density");
}

TEST_CASE("trace maps nodes and elements both ways", "[derive]") {
    const auto d = derive_net(case_model(), case_plan());
    CHECK(d.map.trace("a.attack") == "attack");
    CHECK(d.map.trace("attack") == "a.attack");
    CHECK(d.map.trace("m.code-comments") == "code-comments");
    CHECK(d.map.trace("Vulnerability Density") == d.metric_node);
    CHECK_THROWS_AS(d.map.trace("nothing"), Error);
    NodeMap map;
    map.add("x.1", "one");
    CHECK_THROWS_AS(map.add("x.2", "one"), Error);
}

TEST_CASE("derivation errors", "[derive]") {
    const auto m = case_model();
    SECTION("root activity missing") {
        auto plan = case_plan();
        plan.root_activity = "defence";
        try {
            derive_net(m, plan);
            FAIL("expected not_found");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::not_found);
        }
    }
    SECTION("measure outside the chosen subtree") {
        auto plan = case_plan();
        plan.root_activity = "injection";
        plan.metric.measure.reset();
        try {
            derive_net(m, plan);
            FAIL("expected orphan measure");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::reference);
            CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring("orphan-measure"));
        }
    }
    SECTION("metric measure not on the root") {
        auto plan = case_plan();
        plan.metric.measure = "sql-injection";
        CHECK_THROWS_AS(derive_net(m, plan), Error);
    }
}

TEST_CASE("derivation is deterministic", "[derive]") {
    const auto m = case_model();
    const auto a = derive_net(m, case_plan());
    const auto b = derive_net(m, case_plan());
    CHECK(net_to_json(a, m) == net_to_json(b, m));
}

TEST_CASE("plan parsing", "[derive]") {
    const auto p = case_plan();
    CHECK(p.root_activity == "attack");
    CHECK(p.metric.bins == 40);
    CHECK(p.metric.hi == 0.02);
    CHECK(p.metric.unit == "vulnerabilities/KSLOC");
    CHECK_THROWS_AS(parse_plan(R"({"metricNode": {"name": "x", "range": [0, 1]}})"), Error);
    CHECK_THROWS_AS(parse_plan(R"({"rootActivity": "a", "metricNode": {"name": "x", "range": [1, 0]}})"), Error);
}
