#include <cstdio>
#include <sstream>

#include "json_util.hpp"
#include "qa/assess.hpp"
#include "qa/error.hpp"

namespace qa::assess {

using detail::json;

namespace {

constexpr const char* kSchema = "qa-report/1";

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<std::string> string_list(const json& arr, const std::string& path) {
    if (!arr.is_array()) detail::schema_error(path, "array");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) detail::schema_error(path + "[]", "string");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<double> number_list(const json& arr, const std::string& path) {
    if (!arr.is_array()) detail::schema_error(path, "array");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) detail::schema_error(path + "[]", "number");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

json report_to_json(const AssessmentReport& r) {
    json posteriors = json::array();
    for (const auto& p : r.posteriors) {
        json j = {{"node", p.node},           {"kind", p.kind},     {"element", p.element},
                  {"name", p.name},           {"states", p.states}, {"probabilities", p.probabilities}};
        if (p.mean) j["mean"] = *p.mean;
        if (p.sd) j["sd"] = *p.sd;
        posteriors.push_back(std::move(j));
    }

    json votes = json::object();
    for (const auto& [measure, v] : r.observations.values) votes[measure] = findings::to_string(v);

    json found = json::object();
    for (const auto& [system, classes] : r.agreement.found) {
        for (const auto& [cls, scanners] : classes) found[system][cls] = scanners;
    }

    return {
        {"schema", kSchema},
        {"timestamp", r.timestamp},
        {"system",
         {{"id", r.system.id},
          {"name", r.system.name},
          {"sloc", r.system.sloc},
          {"language", r.system.language},
          {"version", r.system.version}}},
        {"gqm", {{"goal", r.goal}, {"question", r.question}, {"metric", r.metric}}},
        {"metric", {{"node", r.metric_node}, {"name", r.metric_name}, {"unit", r.metric_unit}}},
        {"densityMean", r.density_mean},
        {"densitySd", r.density_sd},
        {"expectedVulnCount", r.expected_vuln_count},
        {"observations", {{"system", r.observations.system}, {"values", std::move(votes)}}},
        {"posteriors", std::move(posteriors)},
        {"scannerAgreement",
         {{"found", std::move(found)},
          {"perScanner", r.agreement.per_scanner},
          {"singleScanner", r.agreement.single_scanner},
          {"multiScanner", r.agreement.multi_scanner}}},
        {"caveats", r.caveats},
    };
}

AssessmentReport report_from_json(const json& doc) {
    if (detail::get_string(doc, "schema", "report") != kSchema) detail::schema_error("report.schema", kSchema);
    AssessmentReport r;
    r.timestamp = detail::get_string(doc, "timestamp", "report");

    const json& sys = detail::require(doc, "system", "report");
    r.system.id = detail::get_string(sys, "id", "report.system");
    r.system.name = detail::get_string(sys, "name", "report.system");
    const json& sloc = detail::require(sys, "sloc", "report.system");
    if (!sloc.is_number_integer()) detail::schema_error("report.system.sloc", "integer");
    r.system.sloc = sloc.get<long long>();
    r.system.language = detail::get_string(sys, "language", "report.system");
    r.system.version = detail::get_string(sys, "version", "report.system");

    const json& gqm = detail::require(doc, "gqm", "report");
    r.goal = detail::get_string(gqm, "goal", "report.gqm");
    r.question = detail::get_string(gqm, "question", "report.gqm");
    r.metric = detail::get_string(gqm, "metric", "report.gqm");

    const json& metric = detail::require(doc, "metric", "report");
    r.metric_node = detail::get_string(metric, "node", "report.metric");
    r.metric_name = detail::get_string(metric, "name", "report.metric");
    r.metric_unit = detail::get_string(metric, "unit", "report.metric");

    r.density_mean = detail::get_number(doc, "densityMean", "report");
    r.density_sd = detail::get_number(doc, "densitySd", "report");
    r.expected_vuln_count = detail::get_number(doc, "expectedVulnCount", "report");

    const json& obs = detail::require(doc, "observations", "report");
    r.observations.system = detail::get_string(obs, "system", "report.observations");
    const json& values = detail::require(obs, "values", "report.observations");
    if (!values.is_object()) detail::schema_error("report.observations.values", "object");
    for (const auto& [measure, v] : values.items()) {
        if (v == "yes") r.observations.values[measure] = findings::Vote::yes;
        else if (v == "no") r.observations.values[measure] = findings::Vote::no;
        else detail::schema_error("report.observations.values." + measure, "\"yes\" or \"no\"");
    }

    std::size_t i = 0;
    for (const auto& p : detail::get_array(doc, "posteriors", "report")) {
        const std::string path = "report.posteriors[" + std::to_string(i++) + "]";
        NodePosterior np;
        np.node = detail::get_string(p, "node", path);
        np.kind = detail::get_string(p, "kind", path);
        np.element = detail::get_string(p, "element", path);
        np.name = detail::get_string(p, "name", path);
        np.states = string_list(detail::require(p, "states", path), path + ".states");
        np.probabilities = number_list(detail::require(p, "probabilities", path), path + ".probabilities");
        np.mean = detail::get_opt_number(p, "mean", path);
        np.sd = detail::get_opt_number(p, "sd", path);
        r.posteriors.push_back(std::move(np));
    }

    const json& agree = detail::require(doc, "scannerAgreement", "report");
    const json& found = detail::require(agree, "found", "report.scannerAgreement");
    for (const auto& [system, classes] : found.items()) {
        for (const auto& [cls, scanners] : classes.items()) {
            auto list = string_list(scanners, "report.scannerAgreement.found");
            r.agreement.found[system][cls] = {list.begin(), list.end()};
        }
    }
    for (const auto& [scanner, n] : detail::require(agree, "perScanner", "report.scannerAgreement").items()) {
        if (!n.is_number_integer()) detail::schema_error("report.scannerAgreement.perScanner", "integer");
        r.agreement.per_scanner[scanner] = n.get<int>();
    }
    r.agreement.single_scanner = detail::get_int(agree, "singleScanner", "report.scannerAgreement");
    r.agreement.multi_scanner = detail::get_int(agree, "multiScanner", "report.scannerAgreement");

    r.caveats = string_list(detail::require(doc, "caveats", "report"), "report.caveats");
    return r;
}

std::string emit_report(const AssessmentReport& r, ReportFormat format) {
    if (format == ReportFormat::json) return report_to_json(r).dump(2) + "\n";

    std::ostringstream out;
    out << "Quality assessment of " << r.system.name << " (" << r.system.id << ")";
    if (!r.system.version.empty()) out << " " << r.system.version;
    if (!r.system.language.empty()) out << ", " << r.system.language;
    out << ", " << r.system.sloc << " SLOC\n\n";
    out << "Goal:     " << r.goal << "\n";
    out << "Question: " << r.question << "\n";
    out << "Metric:   " << r.metric << "\n\n";

    out << r.metric_name << ": mean " << fixed(r.density_mean, 4) << ", sd " << fixed(r.density_sd, 4);
    if (!r.metric_unit.empty()) out << " " << r.metric_unit;
    out << "\n";
    out << "Expected vulnerabilities at " << r.system.sloc << " SLOC: " << fixed(r.expected_vuln_count, 3) << "\n\n";

    out << "Measure votes (yes if any scanner reported the class):\n";
    for (const auto& [measure, v] : r.observations.values) {
        out << "  " << measure << std::string(measure.size() < 28 ? 28 - measure.size() : 1, ' ')
            << findings::to_string(v) << "\n";
    }

    out << "\nPosteriors:\n";
    for (const auto& p : r.posteriors) {
        if (p.kind == "metric") continue;
        out << "  [" << p.kind << "] " << p.name << ":";
        for (std::size_t s = 0; s < p.states.size(); ++s) out << " " << p.states[s] << "=" << fixed(p.probabilities[s], 3);
        if (p.mean) out << "  (mean " << fixed(*p.mean, 3) << ")";
        out << "\n";
    }

    out << "\nScanner agreement:\n";
    for (const auto& [scanner, n] : r.agreement.per_scanner) out << "  " << scanner << ": " << n << " class(es)\n";
    for (const auto& [system, classes] : r.agreement.found) {
        for (const auto& [cls, scanners] : classes) {
            out << "  " << cls << ":";
            for (const auto& s : scanners) out << " " << s;
            out << "\n";
        }
    }

    if (!r.caveats.empty()) {
        out << "\nCaveats:\n";
        for (const auto& c : r.caveats) out << "  - " << c << "\n";
    }
    out << "\nGenerated " << r.timestamp << "\n";
    return out.str();
}

}  // namespace qa::assess
