#pragma once

// End-to-end assessment: validate the model, derive the net, classify and
// vote scanner findings, set the votes as evidence on measure nodes, infer
// every node and summarise the metric node. Also hosts what-if sessions.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qa/bayes.hpp"
#include "qa/derive.hpp"
#include "qa/findings.hpp"
#include "qa/qmodel.hpp"

namespace qa::assess {

struct SystemDescriptor {
    std::string id;
    std::string name;
    long long sloc = 0;
    std::string language;
    std::string version;

    bool operator==(const SystemDescriptor&) const = default;
};

// Throws Errc::syntax / Errc::invalid (sloc <= 0).
SystemDescriptor parse_system(std::string_view document);

struct Bundle {
    model::QualityModel model;
    derive::AssessmentPlan plan;
    std::vector<findings::FindingsReport> reports;
    findings::VulnTaxonomy taxonomy;
    SystemDescriptor system;
};

// Immutable pipeline state shared by reports and what-if sessions.
struct PreparedAssessment {
    Bundle bundle;
    derive::DerivedNet derived;
    findings::ClassifiedCounts counts;
    findings::ObservationSet observations;
    findings::AgreementMatrix agreement;
    bayes::Evidence evidence;
    std::vector<bayes::Posterior> base_posteriors;  // one per net node, net order
};

// Errors carry a "[stage]" prefix: validate, taxonomy, derive, classify,
// vote, infer.
std::shared_ptr<const PreparedAssessment> prepare(Bundle bundle);

struct NodePosterior {
    std::string node;
    std::string kind;
    std::string element;
    std::string name;
    std::vector<std::string> states;
    std::vector<double> probabilities;
    std::optional<double> mean;
    std::optional<double> sd;

    bool operator==(const NodePosterior&) const = default;
};

struct AssessmentReport {
    SystemDescriptor system;
    std::string goal;
    std::string question;
    std::string metric;
    std::string metric_node;
    std::string metric_name;
    std::string metric_unit;
    findings::ObservationSet observations;
    std::vector<NodePosterior> posteriors;  // activity, factor and metric nodes
    double density_mean = 0.0;
    double density_sd = 0.0;
    double expected_vuln_count = 0.0;  // density_mean * sloc / 1000
    findings::AgreementMatrix agreement;
    std::vector<std::string> caveats;
    std::string timestamp;  // ISO-8601 UTC

    bool operator==(const AssessmentReport&) const = default;
};

std::string utc_timestamp();

// Report under the prepared base evidence. Empty timestamp means now.
AssessmentReport make_report(const PreparedAssessment& prepared, std::string timestamp = {});

AssessmentReport run_assessment(const model::QualityModel& model, const derive::AssessmentPlan& plan,
                                std::span<const findings::FindingsReport> reports,
                                const findings::VulnTaxonomy& taxonomy, const SystemDescriptor& system,
                                std::string timestamp = {});

enum class ReportFormat { json, text };

std::string emit_report(const AssessmentReport& report, ReportFormat format);

nlohmann::json report_to_json(const AssessmentReport& report);
// Throws Errc::syntax when the document does not follow the report schema.
AssessmentReport report_from_json(const nlohmann::json& document);

// Hypothetical evidence on top of the base observations. Every mutator
// either succeeds and recomputes all posteriors or throws and leaves the
// session untouched. Not internally synchronised.
class WhatIfSession {
public:
    explicit WhatIfSession(std::shared_ptr<const PreparedAssessment> base);

    const PreparedAssessment& base() const noexcept { return *base_; }
    const bayes::Evidence& overrides() const noexcept { return overrides_; }
    const std::vector<bayes::Posterior>& posteriors() const noexcept { return posteriors_; }

    // Base observations merged with overrides (overrides win).
    bayes::Evidence evidence() const;

    const std::vector<bayes::Posterior>& set(std::string_view node, std::string_view state);
    const std::vector<bayes::Posterior>& set(std::string_view node, int state);
    const std::vector<bayes::Posterior>& clear(std::string_view node);
    const std::vector<bayes::Posterior>& clear_all();

    const bayes::Posterior& posterior(std::string_view node) const;
    bayes::Moments metric() const;

private:
    void recompute(bayes::Evidence overrides);

    std::shared_ptr<const PreparedAssessment> base_;
    bayes::Evidence overrides_;
    std::vector<bayes::Posterior> posteriors_;
};

}  // namespace qa::assess
