#pragma once

// Activity-based quality model: entities and activities organised in
// hierarchies, factors (entity x property), signed impacts of factors on
// activities, and measures attached to factors or activities.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qa/types.hpp"

namespace qa::model {

// Per-element NPT override, carried verbatim from the model file.
struct NptSpec {
    std::string type;  // "wmean" | "partition" | "arithmetic" | "explicit"
    std::optional<int> states;
    std::optional<double> sigma;
    std::optional<double> mean;     // prior mean for parentless wmean nodes
    std::optional<double> epsilon;  // partition uncertainty band
    std::vector<double> mapping;    // partition: P(yes) per parent state
    std::vector<std::vector<double>> rows;  // explicit table

    bool operator==(const NptSpec&) const = default;
};

struct Entity {
    std::string id;
    std::string name;
    std::optional<std::string> parent;

    bool operator==(const Entity&) const = default;
};

struct Activity {
    std::string id;
    std::string name;
    std::optional<std::string> parent;
    std::optional<NptSpec> npt;

    bool operator==(const Activity&) const = default;
};

struct Factor {
    std::string id;
    std::string entity;
    std::string property;
    std::string name;
    std::optional<NptSpec> npt;

    bool operator==(const Factor&) const = default;
};

struct Impact {
    std::string id;
    std::string source;  // factor id
    std::string target;  // activity id
    Polarity polarity = Polarity::positive;
    double weight = 1.0;

    bool operator==(const Impact&) const = default;
};

enum class MeasureKind { scanner_finding, numeric_metric };

struct Measure {
    std::string id;
    std::string name;
    std::string target;  // factor id or activity id
    MeasureKind kind = MeasureKind::scanner_finding;
    std::optional<std::string> vuln_class;
    // Uncertainty of the partitioned expression; plan default when absent.
    std::optional<double> diagnosticity;
    // "-": a high target level means no findings (the usual case).
    // "+": a high target level means findings, e.g. visibility-type factors.
    Polarity polarity = Polarity::negative;
    std::optional<NptSpec> npt;

    bool operator==(const Measure&) const = default;
};

struct QualityModel {
    std::string goal;
    std::string question;
    std::string metric;
    std::vector<Entity> entities;
    std::vector<Activity> activities;
    std::vector<Factor> factors;
    std::vector<Impact> impacts;
    std::vector<Measure> measures;

    const Entity* find_entity(std::string_view id) const;
    const Activity* find_activity(std::string_view id) const;
    const Factor* find_factor(std::string_view id) const;
    const Measure* find_measure(std::string_view id) const;

    bool operator==(const QualityModel&) const = default;
};

struct Violation {
    std::string code;     // machine-readable, e.g. "dangling-reference"
    std::string message;  // names the offending ids

    bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

// Structural parse only; no invariant checks. Throws Errc::syntax.
QualityModel read_model(std::string_view document);

// read_model + validate_model. Throws qa::Error: Errc::syntax (with byte
// offset), or Errc::reference / Errc::cycle / Errc::invalid listing every
// violation.
QualityModel parse_model(std::string_view document);

ValidationReport validate_model(const QualityModel& model);

std::string serialize_model(const QualityModel& model);

// Depth-first preorder of the subtree rooted at `root`, children in model order.
std::vector<std::string> activity_subtree(const QualityModel& model, std::string_view root);

// Direct children of an activity, in model order.
std::vector<std::string> child_activities(const QualityModel& model, std::string_view id);

}  // namespace qa::model
