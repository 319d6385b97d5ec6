#pragma once

// Discrete Bayesian networks with exact inference.
//
// query_marginal runs variable elimination (min-degree order) over the
// ancestral subgraph of the target and the evidence. joint_enumerate sums
// the full joint and exists as an independent oracle for tests.
//
// query_all evaluates every node with one OpenMP task per node; each query
// is sequential, so its result is bit-identical to query_all_serial.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qa/npt.hpp"

namespace qa::bayes {

enum class NodeKind { activity, factor, measure, metric };

std::string_view to_string(NodeKind kind) noexcept;

struct Node {
    std::string id;
    NodeKind kind = NodeKind::factor;
    std::vector<std::string> states;
    // Interval or bin midpoints when the node has a ranked/numeric scale.
    std::optional<std::vector<double>> midpoints;
    std::vector<std::string> parents;
    npt::Npt npt;
};

// node id -> observed state index
using Evidence = std::map<std::string, int, std::less<>>;

struct Posterior {
    std::string node;
    std::vector<double> probabilities;
    std::optional<double> mean;
    std::optional<double> sd;

    bool operator==(const Posterior&) const = default;
};

class BayesNet {
public:
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t i) const { return nodes_[i]; }
    const Node& node(std::string_view id) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    // Index of a node id; throws Errc::not_found.
    std::size_t index_of(std::string_view id) const;
    std::optional<std::size_t> find(std::string_view id) const;

    const std::vector<std::size_t>& topo_order() const noexcept { return topo_; }
    const std::vector<std::vector<std::size_t>>& parent_indices() const noexcept { return parents_; }

private:
    friend BayesNet build_net(std::vector<Node> nodes);

    std::vector<Node> nodes_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::size_t> topo_;
};

// Throws Errc::cycle (path named), Errc::reference, Errc::dimension.
BayesNet build_net(std::vector<Node> nodes);

// Throws Errc::not_found, Errc::invalid (state out of range).
void check_evidence(const BayesNet& net, const Evidence& evidence);

// Throws Errc::inconsistent_evidence when P(evidence) == 0.
Posterior query_marginal(const BayesNet& net, const Evidence& evidence, std::string_view target);

std::vector<Posterior> query_all(const BayesNet& net, const Evidence& evidence);
std::vector<Posterior> query_all_serial(const BayesNet& net, const Evidence& evidence);

inline constexpr double kEnumerationGuard = 1e7;

// Throws Errc::guard when the joint state space exceeds `guard`.
Posterior joint_enumerate(const BayesNet& net, const Evidence& evidence, std::string_view target,
                          double guard = kEnumerationGuard);

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

// mean = sum p_i m_i, sd = sqrt(sum p_i m_i^2 - mean^2). Throws
// Errc::invalid when sizes disagree.
Moments posterior_stats(std::span<const double> probabilities, std::span<const double> midpoints);

// Overload that reads the node's scale; Errc::invalid when it has none.
Moments posterior_stats(const Posterior& posterior, const Node& node);

}  // namespace qa::bayes
