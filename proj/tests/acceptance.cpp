// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qa/assess.hpp"
#include "qa/bayes.hpp"
#include "qa/error.hpp"
#include "qa/findings.hpp"
#include "qa/npt.hpp"
#include "support.hpp"

#ifndef QA_CLI_PATH
#error "QA_CLI_PATH must name the qa executable"
#endif

using namespace qa;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

using Clock = std::chrono::steady_clock;

// Runs a criterion, prints its line and returns whether it passed (including
// the time budget).
bool criterion(const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (o.ok && secs > budget_s) o.fail("took longer than " + std::to_string(budget_s) + " s");
    std::printf("%s  %-32s %8.3f s  %s\n", o.ok ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
    return o.ok;
}

Outcome inference_oracle() {
    Outcome o;
    std::mt19937_64 rng(2024);
    int compared = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto net = testing::random_net(rng, 1 + static_cast<int>(rng() % 8));
        const auto ev = testing::random_evidence(rng, net, 3);
        for (const auto& node : net.nodes()) {
            bayes::Posterior oracle;
            try {
                oracle = bayes::joint_enumerate(net, ev, node.id);
            } catch (const Error& e) {
                if (e.code() != Errc::inconsistent_evidence) throw;
                try {
                    bayes::query_marginal(net, ev, node.id);
                    o.fail("inconsistent evidence accepted in net " + std::to_string(trial));
                } catch (const Error&) {
                }
                continue;
            }
            const auto ve = bayes::query_marginal(net, ev, node.id);
            for (std::size_t s = 0; s < ve.probabilities.size(); ++s) {
                worst = std::max(worst, std::abs(ve.probabilities[s] - oracle.probabilities[s]));
            }
            ++compared;
        }
    }
    if (worst > 1e-9) o.fail("VE deviates from enumeration by more than 1e-9");
    if (o.ok) {
        std::ostringstream s;
        s << compared << " marginals, max deviation " << worst;
        o.detail = s.str();
    }
    return o;
}

Outcome npt_math() {
    Outcome o;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0), umu(-0.5, 1.5), us(0.05, 1.0), uw(0.1, 5.0);
    double cdf_worst = 0.0, norm_worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng), mu = umu(rng), sigma = us(rng);
        cdf_worst = std::max(cdf_worst, std::abs(npt::tnormal_cdf(x, mu, sigma) -
                                                 testing::simpson_tnormal_cdf(x, mu, sigma, 0.0, 1.0)));
    }
    if (cdf_worst > 1e-8) o.fail("tnormal_cdf deviates " + std::to_string(cdf_worst));

    for (int trial = 0; trial < 100; ++trial) {
        const int np = 1 + static_cast<int>(rng() % 3);
        std::vector<npt::RankedScale> parents;
        npt::WmeanSpec spec;
        for (int i = 0; i < np; ++i) {
            parents.push_back(npt::RankedScale::make(2 + static_cast<int>(rng() % 4)));
            spec.weights.push_back(uw(rng));
            spec.polarities.push_back(rng() % 2 ? Polarity::positive : Polarity::negative);
        }
        spec.sigma = 0.02 + 0.5 * u(rng);
        const auto child = npt::RankedScale::make(2 + static_cast<int>(rng() % 4));
        const auto t = npt::ranked_npt(parents, child, spec);
        norm_worst = std::max(norm_worst, npt::normalization_error(t));
        norm_worst = std::max(norm_worst, npt::normalization_error(npt::partitioned_npt(parents[0], 1e-3 + 0.49 * u(rng))));
        const npt::NumericScale bins{0.0, 0.02, 2 + static_cast<int>(rng() % 60)};
        norm_worst = std::max(norm_worst, npt::normalization_error(npt::arithmetic_npt(parents[0], bins, {0.0, 0.02}, 0.0005 + 0.01 * u(rng))));

        // expected child level never moves against a parent's polarity
        const auto mids = child.midpoints();
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            const auto combo = t.combo(r);
            for (int p = 0; p < np; ++p) {
                const auto pp = static_cast<std::size_t>(p);
                if (combo[pp] + 1 >= parents[pp].states) continue;
                auto up = combo;
                ++up[pp];
                const double a = bayes::posterior_stats(t.row(r), mids).mean;
                const double b = bayes::posterior_stats(t.row(t.row_of(up)), mids).mean;
                const bool ok = spec.polarities[pp] == Polarity::positive ? b >= a - 1e-12 : b <= a + 1e-12;
                if (!ok) o.fail("ranked monotonicity broken in trial " + std::to_string(trial));
            }
        }
    }
    if (norm_worst > 1e-9) o.fail("row sum deviates " + std::to_string(norm_worst));
    if (o.ok) {
        std::ostringstream s;
        s << "cdf max dev " << cdf_worst << ", row sum max dev " << norm_worst;
        o.detail = s.str();
    }
    return o;
}

Outcome case_study_votes() {
    Outcome o;
    using findings::Vote;
    const std::map<std::string, Vote> php{{"duplicate-session-id", Vote::yes},
                                          {"potential-csrf", Vote::yes},
                                          {"code-comments", Vote::yes},
                                          {"sql-injection", Vote::no}};
    auto zen = php;
    zen["sql-injection"] = Vote::yes;
    for (const auto& [sys, expected] : {std::pair{"phpshop", php}, std::pair{"zencart", zen}}) {
        const auto p = assess::prepare(testing::case_study_bundle(sys));
        if (p->observations.values != expected) o.fail(std::string(sys) + " votes differ");
        for (const char* cls : {"io-flows", "unidentified"}) {
            if (p->observations.values.contains(cls)) o.fail(std::string(cls) + " was used");
        }
    }
    if (o.ok) o.detail = "PHP Shop 3 yes / 1 no, Zen Cart 4 yes";
    return o;
}

Outcome scanner_difference() {
    Outcome o;
    std::vector<findings::FindingsReport> reports;
    for (const char* sys : {"phpshop", "zencart"}) {
        const auto b = testing::case_study_bundle(sys);
        reports.insert(reports.end(), b.reports.begin(), b.reports.end());
    }
    const auto tax = findings::parse_taxonomy(testing::read_text(testing::fixture_path("taxonomy.json")));
    const auto a = findings::scanner_diff(findings::classify(reports, tax));
    const std::map<std::string, int> expected{{"grendel-scan", 8}, {"w3af", 3}, {"wapiti", 0}};
    if (a.per_scanner != expected) o.fail("per-scanner counts differ");
    if (a.found.at("zencart").at("potential-csrf") != std::set<std::string>{"grendel-scan"}) {
        o.fail("Zen Cart potential-csrf not unique to grendel-scan");
    }
    if (o.ok) o.detail = "grendel-scan 8, w3af 3, wapiti 0";
    return o;
}

Outcome density_prediction() {
    Outcome o;
    const char* stamp = "2026-01-01T00:00:00Z";
    const auto php = assess::make_report(*assess::prepare(testing::case_study_bundle("phpshop")), stamp);
    const auto zen = assess::make_report(*assess::prepare(testing::case_study_bundle("zencart")), stamp);
    if (php.density_mean < 0.0051 || php.density_mean > 0.0077) o.fail("PHP Shop mean out of band");
    if (zen.density_mean < 0.0053 || zen.density_mean > 0.0079) o.fail("Zen Cart mean out of band");
    if (zen.density_mean < php.density_mean) o.fail("Zen Cart below PHP Shop");
    for (const auto* r : {&php, &zen}) {
        if (r->density_sd < 0.0014 || r->density_sd > 0.0042) o.fail(r->system.id + " sd out of band");
    }
    for (const auto* r : {&php, &zen}) {
        auto actual = assess::report_to_json(*r);
        auto golden = nlohmann::json::parse(testing::read_text(testing::fixture_path(r->system.id + ".report.json")));
        actual.erase("timestamp");
        golden.erase("timestamp");
        if (actual != golden) o.fail(r->system.id + " differs from golden report");
    }
    if (o.ok) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "PHP Shop %.5f (sd %.5f), Zen Cart %.5f (sd %.5f)", php.density_mean,
                      php.density_sd, zen.density_mean, zen.density_sd);
        o.detail = buf;
    }
    return o;
}

Outcome determinism_and_pessimism() {
    Outcome o;
    int flips = 0;
    for (const char* sys : {"phpshop", "zencart"}) {
        const auto a = assess::make_report(*assess::prepare(testing::case_study_bundle(sys)), "t");
        const auto b = assess::make_report(*assess::prepare(testing::case_study_bundle(sys)), "t");
        if (!(a == b)) o.fail(std::string(sys) + " reports differ between runs");

        const auto p = assess::prepare(testing::case_study_bundle(sys));
        std::vector<std::string> measures;
        for (const auto& n : p->derived.net.nodes()) {
            if (n.kind == bayes::NodeKind::measure) measures.push_back(n.id);
        }
        for (unsigned mask = 0; mask < (1u << measures.size()); ++mask) {
            bayes::Evidence ev;
            for (std::size_t i = 0; i < measures.size(); ++i) ev[measures[i]] = (mask >> i) & 1u;
            const double base = testing::density_with(*p, ev);
            for (std::size_t i = 0; i < measures.size(); ++i) {
                if ((mask >> i) & 1u) continue;
                auto flipped = ev;
                flipped[measures[i]] = 1;
                ++flips;
                if (testing::density_with(*p, flipped) < base) o.fail("flip of " + measures[i] + " lowers density");
            }
        }
    }
    if (o.ok) o.detail = std::to_string(flips) + " flips checked";
    return o;
}

Outcome cli_runtime() {
    Outcome o;
    std::string cmd = std::string("\"") + QA_CLI_PATH + "\" assess";
    const auto f = [](const std::string& n) { return " \"" + testing::fixture_path(n) + "\""; };
    cmd += " --model" + f("casestudy.qm.json") + " --plan" + f("casestudy.plan.json") + " --taxonomy" +
           f("taxonomy.json") + " --system" + f("zencart.system.json") + " --findings" +
           f("zencart.grendel.findings.json") + f("zencart.w3af.findings.json") + f("zencart.wapiti.findings.json") +
           " --out - > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) o.fail("qa assess exited with " + std::to_string(rc));
    return o;
}

}  // namespace

int main() {
    bool ok = true;
    ok &= criterion("inference-oracle-equivalence", 10.0, inference_oracle);
    ok &= criterion("npt-math", 5.0, npt_math);
    ok &= criterion("case-study-votes", 1.0, case_study_votes);
    ok &= criterion("scanner-difference", 1.0, scanner_difference);
    ok &= criterion("density-prediction", 2.0, density_prediction);
    ok &= criterion("determinism-monotone-pessimism", 5.0, determinism_and_pessimism);
    ok &= criterion("qa-assess-under-1s", 1.0, cli_runtime);
    std::printf("%s\n", ok ? "ALL PASS" : "SOME CRITERIA FAILED");
    return ok ? 0 : 1;
}
