#pragma once

// Scanner report ingestion, classification into vulnerability classes,
// pessimistic yes/no voting and cross-scanner agreement.

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qa/qmodel.hpp"

namespace qa::findings {

struct Finding {
    std::string scanner;
    std::string vuln_class;
    std::string location;
    std::string detail;

    bool operator==(const Finding&) const = default;
};

struct FindingsReport {
    std::string scanner;
    std::string system;
    std::vector<Finding> findings;

    bool operator==(const FindingsReport&) const = default;
};

struct VulnClass {
    std::string id;
    std::string name;
    bool attributable = false;
    std::optional<std::string> measure;
};

struct VulnTaxonomy {
    std::vector<VulnClass> classes;

    const VulnClass* find(std::string_view id) const;
};

using Adapter = std::function<FindingsReport(std::string_view document)>;

// Report parsers keyed by adapter id. "normalized" is always registered.
class AdapterRegistry {
public:
    static AdapterRegistry& instance();

    void add(std::string id, Adapter adapter);
    bool contains(std::string_view id) const;
    FindingsReport parse(std::string_view document, std::string_view adapter) const;

private:
    AdapterRegistry();

    mutable std::mutex mutex_;
    std::map<std::string, Adapter, std::less<>> adapters_;
};

// Throws Errc::syntax (malformed) or Errc::not_found (unknown adapter).
FindingsReport parse_report(std::string_view document, std::string_view adapter = "normalized");

// Parser behind the "normalized" adapter.
FindingsReport parse_normalized(std::string_view document);

// Throws Errc::syntax / Errc::invalid (duplicate class ids).
VulnTaxonomy parse_taxonomy(std::string_view document);

// Cross-check taxonomy measure mappings against the model; Errc::reference
// for unknown measures, Errc::invalid for a vulnClass mismatch.
void check_taxonomy(const VulnTaxonomy& taxonomy, const model::QualityModel& model);

struct UnresolvedFinding {
    std::string system;
    Finding finding;
};

// counts[system][class][scanner] = number of findings
using CountTable = std::map<std::string, std::map<std::string, std::map<std::string, int>>>;

struct ClassifiedCounts {
    CountTable counts;
    std::vector<UnresolvedFinding> unresolved;
    std::set<std::string> scanners;  // every scanner that delivered a report
    std::set<std::string> systems;
    std::size_t total_findings = 0;

    std::size_t counted() const;
};

ClassifiedCounts classify(std::span<const FindingsReport> reports, const VulnTaxonomy& taxonomy);

enum class Vote { no, yes };

std::string_view to_string(Vote v) noexcept;

struct ObservationSet {
    std::string system;
    std::map<std::string, Vote> values;  // measure id -> vote

    bool operator==(const ObservationSet&) const = default;
};

// yes iff at least one scanner reported a finding of a class mapped to the
// measure; non-attributable classes never vote. Throws Errc::invalid for an
// attributable class with findings but no measure mapping.
ObservationSet vote(const ClassifiedCounts& counts, const VulnTaxonomy& taxonomy, const model::QualityModel& model,
                    std::string_view system);

struct AgreementMatrix {
    // found[system][class] = scanners with at least one finding
    std::map<std::string, std::map<std::string, std::set<std::string>>> found;
    // (system, class) pairs each scanner found
    std::map<std::string, int> per_scanner;
    int single_scanner = 0;
    int multi_scanner = 0;

    bool operator==(const AgreementMatrix&) const = default;
};

AgreementMatrix scanner_diff(const ClassifiedCounts& counts);

}  // namespace qa::findings
