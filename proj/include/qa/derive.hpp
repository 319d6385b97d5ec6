#pragma once

// Derivation of a Bayesian net from a quality model and an assessment plan:
// activities of the chosen subtree, the factors impacting them, one measure
// node per scanner-finding measure and a discretised metric node under the
// root activity.
//
// Edges run measure <- factor -> activity -> parent activity -> metric.

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qa/bayes.hpp"
#include "qa/qmodel.hpp"
#include "qa/types.hpp"

namespace qa::derive {

struct MetricSpec {
    std::string name;
    double lo = 0.0;
    double hi = 0.02;
    int bins = 40;
    AffineMap expr{0.0, 0.02};  // root-activity midpoint -> metric value
    double sigma = 0.003;
    std::optional<std::string> measure;  // numeric-metric measure it realises
    std::string unit;

    bool operator==(const MetricSpec&) const = default;
};

struct PlanDefaults {
    int ranked_states = 3;
    double sigma_ranked = 0.2;
    double epsilon_measure = 0.1;

    bool operator==(const PlanDefaults&) const = default;
};

struct AssessmentPlan {
    std::string root_activity;
    MetricSpec metric;
    PlanDefaults defaults;

    bool operator==(const AssessmentPlan&) const = default;
};

// Throws Errc::syntax / Errc::invalid.
AssessmentPlan parse_plan(std::string_view document);

// Model element id <-> net node id. The metric node maps to the plan's
// metric name.
class NodeMap {
public:
    void add(const std::string& node_id, const std::string& element_id);

    // Counterpart of a node id or element id; throws Errc::not_found.
    const std::string& trace(std::string_view id) const;
    bool contains(std::string_view id) const;

    const std::map<std::string, std::string, std::less<>>& node_to_element() const noexcept { return to_element_; }

private:
    std::map<std::string, std::string, std::less<>> to_element_;
    std::map<std::string, std::string, std::less<>> to_node_;
};

struct DerivedNet {
    bayes::BayesNet net;
    NodeMap map;
    std::string root_node;
    std::string metric_node;
};

std::string activity_node_id(std::string_view activity_id);
std::string factor_node_id(std::string_view factor_id);
std::string measure_node_id(std::string_view measure_id);

// Throws Errc::not_found (root activity), Errc::reference (orphan measure),
// Errc::invalid (bad NPT parameters) and anything build_net raises.
DerivedNet derive_net(const model::QualityModel& model, const AssessmentPlan& plan);

// Display name of the element behind a node (activity/factor/measure name,
// or the metric name).
std::string display_name(const DerivedNet& derived, const model::QualityModel& model, std::string_view node_id);

// Node list with kinds, states, parents, element trace and display names;
// full NPT rows when `with_npt` is set.
nlohmann::json net_to_json(const DerivedNet& derived, const model::QualityModel& model, bool with_npt = true);

}  // namespace qa::derive
