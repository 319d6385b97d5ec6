#include "qa/findings.hpp"

#include <algorithm>

#include "json_util.hpp"
#include "qa/error.hpp"

namespace qa::findings {

using detail::json;

const VulnClass* VulnTaxonomy::find(std::string_view id) const {
    auto it = std::find_if(classes.begin(), classes.end(), [&](const VulnClass& c) { return c.id == id; });
    return it == classes.end() ? nullptr : &*it;
}

AdapterRegistry::AdapterRegistry() { adapters_.emplace("normalized", &parse_normalized); }

AdapterRegistry& AdapterRegistry::instance() {
    static AdapterRegistry registry;
    return registry;
}

void AdapterRegistry::add(std::string id, Adapter adapter) {
    std::lock_guard lock(mutex_);
    adapters_.insert_or_assign(std::move(id), std::move(adapter));
}

bool AdapterRegistry::contains(std::string_view id) const {
    std::lock_guard lock(mutex_);
    return adapters_.find(id) != adapters_.end();
}

FindingsReport AdapterRegistry::parse(std::string_view document, std::string_view adapter) const {
    Adapter fn;
    {
        std::lock_guard lock(mutex_);
        auto it = adapters_.find(adapter);
        if (it == adapters_.end()) throw Error(Errc::not_found, "unknown findings adapter '" + std::string(adapter) + "'");
        fn = it->second;
    }
    return fn(document);
}

FindingsReport parse_report(std::string_view document, std::string_view adapter) {
    return AdapterRegistry::instance().parse(document, adapter);
}

FindingsReport parse_normalized(std::string_view document) {
    const json doc = detail::parse_json(document, "findings");
    FindingsReport r;
    r.scanner = detail::get_string(doc, "scanner", "findings");
    r.system = detail::get_string(doc, "system", "findings");
    if (r.scanner.empty() || r.system.empty()) {
        throw Error(Errc::syntax, "findings: scanner and system must be non-empty");
    }
    std::size_t i = 0;
    for (const auto& f : detail::get_array(doc, "findings", "findings")) {
        const std::string p = "findings.findings[" + std::to_string(i++) + "]";
        Finding x;
        x.scanner = r.scanner;
        x.vuln_class = detail::get_string(f, "class", p);
        if (x.vuln_class.empty()) throw Error(Errc::syntax, p + ".class must be non-empty");
        x.location = detail::get_opt_string(f, "location", p).value_or("");
        x.detail = detail::get_opt_string(f, "detail", p).value_or("");
        r.findings.push_back(std::move(x));
    }
    return r;
}

VulnTaxonomy parse_taxonomy(std::string_view document) {
    const json doc = detail::parse_json(document, "taxonomy");
    if (!doc.is_array()) detail::schema_error("taxonomy", "array");
    VulnTaxonomy t;
    std::set<std::string> ids;
    std::size_t i = 0;
    for (const auto& c : doc) {
        const std::string p = "taxonomy[" + std::to_string(i++) + "]";
        VulnClass v;
        v.id = detail::get_string(c, "id", p);
        v.name = detail::get_opt_string(c, "name", p).value_or(v.id);
        v.attributable = detail::get_bool(c, "attributable", p);
        v.measure = detail::get_opt_string(c, "measure", p);
        if (!ids.insert(v.id).second) throw Error(Errc::invalid, "taxonomy class id '" + v.id + "' is not unique");
        t.classes.push_back(std::move(v));
    }
    return t;
}

void check_taxonomy(const VulnTaxonomy& taxonomy, const model::QualityModel& model) {
    for (const auto& c : taxonomy.classes) {
        if (!c.measure) continue;
        const model::Measure* m = model.find_measure(*c.measure);
        if (!m) {
            throw Error(Errc::reference, "taxonomy class '" + c.id + "' maps to unknown measure '" + *c.measure + "'");
        }
        if (m->kind != model::MeasureKind::scanner_finding || m->vuln_class != c.id) {
            throw Error(Errc::invalid, "taxonomy class '" + c.id + "' maps to measure '" + m->id +
                                           "', whose vulnClass is '" + m->vuln_class.value_or("") + "'");
        }
    }
}

std::size_t ClassifiedCounts::counted() const {
    std::size_t n = 0;
    for (const auto& [system, classes] : counts) {
        for (const auto& [cls, scanners] : classes) {
            for (const auto& [scanner, c] : scanners) n += static_cast<std::size_t>(c);
        }
    }
    return n;
}

ClassifiedCounts classify(std::span<const FindingsReport> reports, const VulnTaxonomy& taxonomy) {
    ClassifiedCounts out;
    for (const auto& r : reports) {
        out.scanners.insert(r.scanner);
        out.systems.insert(r.system);
        for (const auto& f : r.findings) {
            ++out.total_findings;
            if (taxonomy.find(f.vuln_class)) ++out.counts[r.system][f.vuln_class][r.scanner];
            else out.unresolved.push_back({r.system, f});
        }
    }
    return out;
}

std::string_view to_string(Vote v) noexcept { return v == Vote::yes ? "yes" : "no"; }

ObservationSet vote(const ClassifiedCounts& counts, const VulnTaxonomy& taxonomy, const model::QualityModel& model,
                    std::string_view system) {
    ObservationSet out;
    out.system = std::string(system);
    for (const auto& m : model.measures) {
        if (m.kind == model::MeasureKind::scanner_finding) out.values[m.id] = Vote::no;
    }

    auto sys = counts.counts.find(out.system);
    if (sys == counts.counts.end()) return out;
    for (const auto& [cls, scanners] : sys->second) {
        const VulnClass* c = taxonomy.find(cls);
        if (!c || !c->attributable) continue;
        int total = 0;
        for (const auto& [scanner, n] : scanners) total += n;
        if (total == 0) continue;
        if (!c->measure) {
            throw Error(Errc::invalid, "attributable class '" + cls +
                                           "' has findings but no measure mapping; map it or mark it unattributable");
        }
        auto it = out.values.find(*c->measure);
        if (it == out.values.end()) {
            throw Error(Errc::reference, "class '" + cls + "' maps to '" + *c->measure +
                                             "', which is not a scanner-finding measure of the model");
        }
        it->second = Vote::yes;
    }
    return out;
}

AgreementMatrix scanner_diff(const ClassifiedCounts& counts) {
    AgreementMatrix out;
    for (const auto& s : counts.scanners) out.per_scanner[s] = 0;
    for (const auto& [system, classes] : counts.counts) {
        for (const auto& [cls, scanners] : classes) {
            std::set<std::string> found;
            for (const auto& [scanner, n] : scanners) {
                if (n > 0) found.insert(scanner);
            }
            if (found.empty()) continue;
            for (const auto& s : found) ++out.per_scanner[s];
            (found.size() == 1 ? out.single_scanner : out.multi_scanner) += 1;
            out.found[system][cls] = std::move(found);
        }
    }
    return out;
}

}  // namespace qa::findings
