#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qa/bayes.hpp"
#include "qa/error.hpp"
#include "support.hpp"

using namespace qa;
using namespace qa::bayes;
using Catch::Approx;

namespace {

Node make_node(std::string id, int states, std::vector<std::string> parents, std::vector<int> cards,
               std::vector<double> table) {
    Node n;
    n.id = std::move(id);
    for (int i = 0; i < states; ++i) n.states.push_back("s" + std::to_string(i));
    n.parents = std::move(parents);
    n.npt = npt::Npt(states, std::move(cards), std::move(table));
    return n;
}

BayesNet chain() {
    return build_net({make_node("A", 2, {}, {}, {0.3, 0.7}),
                      make_node("B", 2, {"A"}, {2}, {0.9, 0.1, 0.2, 0.8})});
}

Errc build_error(std::vector<Node> nodes) {
    try {
        build_net(std::move(nodes));
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected build_net to throw");
    return Errc::io;
}

}  // namespace

TEST_CASE("single node returns its prior", "[bayes]") {
    const auto net = build_net({make_node("A", 3, {}, {}, {0.2, 0.3, 0.5})});
    const auto p = query_marginal(net, {}, "A");
    CHECK(p.probabilities == std::vector<double>{0.2, 0.3, 0.5});
}

TEST_CASE("two-node chain matches hand computation", "[bayes]") {
    const auto net = chain();
    const auto b = query_marginal(net, {}, "B");
    CHECK(b.probabilities[1] == Approx(0.3 * 0.1 + 0.7 * 0.8).margin(1e-15));
    const auto a = query_marginal(net, {{"B", 1}}, "A");
    CHECK(a.probabilities[1] == Approx(0.56 / 0.59).margin(1e-15));
    CHECK(a.probabilities[0] == Approx(0.03 / 0.59).margin(1e-15));
}

TEST_CASE("observed target is a point mass", "[bayes]") {
    const auto p = query_marginal(chain(), {{"A", 0}}, "A");
    CHECK(p.probabilities == std::vector<double>{1.0, 0.0});
}

TEST_CASE("evidence of probability zero is rejected", "[bayes]") {
    const auto net = build_net({make_node("A", 2, {}, {}, {1.0, 0.0}),
                                make_node("B", 2, {"A"}, {2}, {0.5, 0.5, 0.5, 0.5})});
    try {
        query_marginal(net, {{"A", 1}}, "B");
        FAIL("expected inconsistent evidence");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::inconsistent_evidence);
    }
}

TEST_CASE("bad evidence", "[bayes]") {
    const auto net = chain();
    CHECK_THROWS_AS(check_evidence(net, {{"Z", 0}}), Error);
    CHECK_THROWS_AS(check_evidence(net, {{"A", 2}}), Error);
    CHECK_THROWS_AS(query_marginal(net, {}, "Z"), Error);
}

TEST_CASE("cycles and shape errors", "[bayes]") {
    CHECK(build_error({make_node("A", 2, {"B"}, {2}, {1, 0, 0, 1}), make_node("B", 2, {"A"}, {2}, {1, 0, 0, 1})}) ==
          Errc::cycle);
    CHECK(build_error({make_node("A", 2, {}, {}, {0.5, 0.5}), make_node("B", 2, {"A"}, {3}, {1, 0, 0, 1, 0.5, 0.5})}) ==
          Errc::dimension);
    CHECK(build_error({make_node("B", 2, {"X"}, {2}, {1, 0, 0, 1})}) == Errc::reference);
    CHECK(build_error({make_node("A", 2, {}, {}, {0.6, 0.6})}) == Errc::invalid);
    CHECK(build_error({make_node("A", 2, {}, {}, {0.5, 0.5}), make_node("A", 2, {}, {}, {0.5, 0.5})}) == Errc::invalid);
}

TEST_CASE("cycle message names the path", "[bayes]") {
    try {
        build_net({make_node("A", 2, {"B"}, {2}, {1, 0, 0, 1}), make_node("B", 2, {"A"}, {2}, {1, 0, 0, 1})});
        FAIL("expected a cycle");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find('A') != std::string::npos);
        CHECK(msg.find('B') != std::string::npos);
    }
}

TEST_CASE("variable elimination agrees with joint enumeration", "[bayes][oracle]") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const auto net = testing::random_net(rng, 1 + static_cast<int>(rng() % 8));
        const auto ev = testing::random_evidence(rng, net, 3);
        for (const auto& node : net.nodes()) {
            std::optional<Posterior> oracle;
            try {
                oracle = joint_enumerate(net, ev, node.id);
            } catch (const Error& e) {
                REQUIRE(e.code() == Errc::inconsistent_evidence);
                CHECK_THROWS_AS(query_marginal(net, ev, node.id), Error);
                continue;
            }
            const auto ve = query_marginal(net, ev, node.id);
            REQUIRE(ve.probabilities.size() == oracle->probabilities.size());
            for (std::size_t s = 0; s < ve.probabilities.size(); ++s) {
                CHECK(std::abs(ve.probabilities[s] - oracle->probabilities[s]) < 1e-9);
            }
        }
    }
}

TEST_CASE("queries are idempotent and evidence-free roots keep their prior", "[bayes][property]") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const auto net = testing::random_net(rng, 6);
        const auto ev = testing::random_evidence(rng, net, 2);
        for (const auto& node : net.nodes()) {
            try {
                CHECK(query_marginal(net, ev, node.id) == query_marginal(net, ev, node.id));
            } catch (const Error&) {
            }
            if (node.parents.empty()) {
                const auto p = query_marginal(net, {}, node.id);
                for (std::size_t s = 0; s < p.probabilities.size(); ++s) {
                    CHECK(p.probabilities[s] == Approx(node.npt.at(0, static_cast<int>(s))).margin(1e-12));
                }
            }
        }
    }
}

TEST_CASE("parallel query_all is bit-identical to the serial reference", "[bayes]") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = testing::layered_net(rng, 8, 10, 6);
        Evidence ev;
        for (int m = 0; m < 6; m += 2) ev["m" + std::to_string(m)] = static_cast<int>(rng() % 2);
        CHECK(query_all(net, ev) == query_all_serial(net, ev));
    }
}

TEST_CASE("enumeration guard", "[bayes]") {
    std::vector<Node> nodes;
    for (int i = 0; i < 12; ++i) nodes.push_back(make_node("n" + std::to_string(i), 2, {}, {}, {0.5, 0.5}));
    const auto net = build_net(std::move(nodes));
    try {
        joint_enumerate(net, {}, "n0", 1000.0);
        FAIL("expected the guard to trip");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::guard);
    }
    CHECK(joint_enumerate(net, {}, "n0").probabilities[0] == Approx(0.5));
}

TEST_CASE("posterior moments", "[bayes]") {
    const std::vector<double> p{0.5, 0.5}, m{0.25, 0.75};
    const auto s = posterior_stats(p, m);
    CHECK(s.mean == Approx(0.5));
    CHECK(s.sd == Approx(0.25));
    const std::vector<double> point{0.0, 1.0, 0.0}, mids{0.1, 0.5, 0.9};
    CHECK(posterior_stats(point, mids).sd == 0.0);
    CHECK_THROWS_AS(posterior_stats(p, mids), Error);
}
