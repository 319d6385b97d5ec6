#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qa/error.hpp"
#include "qa/findings.hpp"

#ifndef QA_FIXTURES_DIR
#error "QA_FIXTURES_DIR must point at the fixtures directory"
#endif

namespace qa::testing {

std::string fixture_path(std::string_view name) { return std::string(QA_FIXTURES_DIR) + "/" + std::string(name); }

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

assess::Bundle case_study_bundle(std::string_view system, bool with_findings) {
    assess::Bundle b;
    b.model = model::read_model(read_text(fixture_path("casestudy.qm.json")));
    b.plan = derive::parse_plan(read_text(fixture_path("casestudy.plan.json")));
    b.taxonomy = findings::parse_taxonomy(read_text(fixture_path("taxonomy.json")));
    b.system = assess::parse_system(read_text(fixture_path(std::string(system) + ".system.json")));
    if (with_findings) {
        for (const char* scanner : {"grendel", "w3af", "wapiti"}) {
            const auto name = std::string(system) + "." + scanner + ".findings.json";
            b.reports.push_back(findings::parse_report(read_text(fixture_path(name))));
        }
    }
    return b;
}

namespace {

std::vector<double> random_simplex(std::mt19937_64& rng, int k) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<double> p(static_cast<std::size_t>(k));
    double total = 0.0;
    for (auto& v : p) total += v = u(rng);
    for (auto& v : p) v /= total;
    return p;
}

npt::Npt random_npt(std::mt19937_64& rng, int states, const std::vector<int>& cards) {
    npt::Npt t(states, cards);
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        const auto p = random_simplex(rng, states);
        std::copy(p.begin(), p.end(), t.row(r).begin());
    }
    return t;
}

std::vector<std::string> state_labels(int k) {
    std::vector<std::string> s;
    for (int i = 0; i < k; ++i) s.push_back("s" + std::to_string(i));
    return s;
}

}  // namespace

bayes::BayesNet random_net(std::mt19937_64& rng, int n, int max_states) {
    std::uniform_int_distribution<int> card(2, max_states);
    std::bernoulli_distribution edge(0.4);
    std::vector<bayes::Node> nodes;
    std::vector<int> cards;
    for (int i = 0; i < n; ++i) {
        bayes::Node node;
        node.id = "n" + std::to_string(i);
        const int k = card(rng);
        cards.push_back(k);
        node.states = state_labels(k);
        std::vector<int> parent_cards;
        for (int j = 0; j < i && node.parents.size() < 3; ++j) {
            if (!edge(rng)) continue;
            node.parents.push_back("n" + std::to_string(j));
            parent_cards.push_back(cards[static_cast<std::size_t>(j)]);
        }
        node.npt = random_npt(rng, k, parent_cards);
        nodes.push_back(std::move(node));
    }
    // Shuffle so that declaration order is not a topological order.
    std::shuffle(nodes.begin(), nodes.end(), rng);
    return bayes::build_net(std::move(nodes));
}

bayes::Evidence random_evidence(std::mt19937_64& rng, const bayes::BayesNet& net, int max_observed) {
    std::uniform_int_distribution<int> how_many(0, max_observed);
    std::vector<std::size_t> order(net.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    bayes::Evidence ev;
    const int m = std::min<int>(how_many(rng), static_cast<int>(net.size()));
    for (int i = 0; i < m; ++i) {
        const auto& node = net.node(order[static_cast<std::size_t>(i)]);
        std::uniform_int_distribution<int> st(0, static_cast<int>(node.states.size()) - 1);
        ev[node.id] = st(rng);
    }
    return ev;
}

bayes::BayesNet layered_net(std::mt19937_64& rng, int factors, int activities, int measures) {
    std::vector<bayes::Node> nodes;
    std::uniform_int_distribution<int> pick_f(0, factors - 1);
    for (int i = 0; i < factors; ++i) {
        nodes.push_back({"f" + std::to_string(i), bayes::NodeKind::factor, state_labels(3), std::nullopt, {},
                         random_npt(rng, 3, {})});
    }
    for (int i = 0; i < activities; ++i) {
        bayes::Node a{"a" + std::to_string(i), bayes::NodeKind::activity, state_labels(3), std::nullopt, {}, {}};
        std::vector<int> cards;
        if (i > 0) {
            a.parents.push_back("a" + std::to_string((i - 1) / 2));
            cards.push_back(3);
        }
        a.parents.push_back("f" + std::to_string(pick_f(rng)));
        cards.push_back(3);
        if (const auto f = "f" + std::to_string(pick_f(rng)); std::find(a.parents.begin(), a.parents.end(), f) == a.parents.end()) {
            a.parents.push_back(f);
            cards.push_back(3);
        }
        a.npt = random_npt(rng, 3, cards);
        nodes.push_back(std::move(a));
    }
    for (int i = 0; i < measures; ++i) {
        nodes.push_back({"m" + std::to_string(i), bayes::NodeKind::measure, {"no", "yes"}, std::nullopt,
                         {"f" + std::to_string(pick_f(rng))}, random_npt(rng, 2, {3})});
    }
    return bayes::build_net(std::move(nodes));
}

double simpson_tnormal_cdf(double x, double mu, double sigma, double lo, double hi, int panels) {
    const auto pdf = [&](double t) {
        const double z = (t - mu) / sigma;
        return std::exp(-0.5 * z * z);
    };
    const auto integrate = [&](double a, double b) {
        if (b <= a) return 0.0;
        const int n = panels % 2 == 0 ? panels : panels + 1;
        const double h = (b - a) / n;
        double s = pdf(a) + pdf(b);
        for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    return integrate(lo, x) / integrate(lo, hi);
}

double density_with(const assess::PreparedAssessment& prepared, const bayes::Evidence& evidence) {
    const auto& net = prepared.derived.net;
    const auto post = bayes::query_marginal(net, evidence, prepared.derived.metric_node);
    return bayes::posterior_stats(post, net.node(prepared.derived.metric_node)).mean;
}

}  // namespace qa::testing
