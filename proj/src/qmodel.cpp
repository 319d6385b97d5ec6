#include "qa/qmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "json_util.hpp"

namespace qa::model {

using detail::json;

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) {
    auto it = std::find_if(items.begin(), items.end(), [&](const T& x) { return x.id == id; });
    return it == items.end() ? nullptr : &*it;
}

Polarity parse_polarity(const json& obj, const char* key, const std::string& path, Polarity fallback) {
    auto s = detail::get_opt_string(obj, key, path);
    if (!s) return fallback;
    if (*s == "+") return Polarity::positive;
    if (*s == "-") return Polarity::negative;
    detail::schema_error(path + "." + key, "\"+\" or \"-\"");
}

std::optional<NptSpec> parse_npt(const json& obj, const std::string& path) {
    if (!obj.contains("npt") || obj.at("npt").is_null()) return std::nullopt;
    const json& n = obj.at("npt");
    const std::string p = path + ".npt";
    NptSpec spec;
    spec.type = detail::get_string(n, "type", p);
    spec.states = detail::get_opt_int(n, "states", p);
    spec.sigma = detail::get_opt_number(n, "sigma", p);
    spec.mean = detail::get_opt_number(n, "mean", p);
    spec.epsilon = detail::get_opt_number(n, "epsilon", p);
    if (n.contains("mapping")) {
        for (const auto& v : detail::get_array(n, "mapping", p)) {
            if (!v.is_number()) detail::schema_error(p + ".mapping[]", "number");
            spec.mapping.push_back(v.get<double>());
        }
    }
    if (n.contains("rows")) {
        for (const auto& row : detail::get_array(n, "rows", p)) {
            if (!row.is_array()) detail::schema_error(p + ".rows[]", "array");
            std::vector<double> r;
            for (const auto& v : row) {
                if (!v.is_number()) detail::schema_error(p + ".rows[][]", "number");
                r.push_back(v.get<double>());
            }
            spec.rows.push_back(std::move(r));
        }
    }
    return spec;
}

json npt_to_json(const NptSpec& spec) {
    json n = json::object();
    n["type"] = spec.type;
    if (spec.states) n["states"] = *spec.states;
    if (spec.sigma) n["sigma"] = *spec.sigma;
    if (spec.mean) n["mean"] = *spec.mean;
    if (spec.epsilon) n["epsilon"] = *spec.epsilon;
    if (!spec.mapping.empty()) n["mapping"] = spec.mapping;
    if (!spec.rows.empty()) n["rows"] = spec.rows;
    return n;
}

const json& elements(const json& doc, const char* key) {
    static const json empty = json::array();
    if (!doc.contains(key)) return empty;
    return detail::get_array(doc, key, "model");
}

void check_npt(const std::optional<NptSpec>& npt, const std::string& owner, ValidationReport& out) {
    if (!npt) return;
    static const std::set<std::string> types = {"wmean", "partition", "arithmetic", "explicit"};
    auto bad = [&](const std::string& why) {
        out.push_back({"invalid-npt", owner + ": " + why});
    };
    if (!types.contains(npt->type)) bad("unknown npt type '" + npt->type + "'");
    if (npt->states && *npt->states < 2) bad("states must be >= 2");
    if (npt->sigma && !(std::isfinite(*npt->sigma) && *npt->sigma > 0)) bad("sigma must be finite and > 0");
    if (npt->mean && !(*npt->mean >= 0 && *npt->mean <= 1)) bad("mean must lie in [0,1]");
    if (npt->epsilon && !(*npt->epsilon > 0 && *npt->epsilon <= 0.5)) bad("epsilon must lie in (0, 0.5]");
    for (double p : npt->mapping) {
        if (!(p >= 0 && p <= 1)) bad("mapping probabilities must lie in [0,1]");
    }
    for (const auto& row : npt->rows) {
        for (double p : row) {
            if (!(p >= 0 && p <= 1)) bad("explicit rows must hold probabilities in [0,1]");
        }
    }
}

// Reports every cycle among parent links exactly once.
template <typename T>
void check_hierarchy(const std::vector<T>& items, std::string_view kind, ValidationReport& out) {
    std::unordered_map<std::string, const T*> by_id;
    for (const auto& x : items) by_id.emplace(x.id, &x);

    std::set<std::string> reported;
    for (const auto& start : items) {
        std::vector<std::string> chain;
        std::set<std::string> on_chain;
        const T* cur = &start;
        while (cur) {
            if (on_chain.contains(cur->id)) {
                auto first = std::find(chain.begin(), chain.end(), cur->id);
                std::vector<std::string> cycle(first, chain.end());
                std::string key = *std::min_element(cycle.begin(), cycle.end());
                if (reported.insert(key).second) {
                    std::string path;
                    for (const auto& id : cycle) path += id + " -> ";
                    path += cur->id;
                    out.push_back({"cycle", std::string(kind) + " hierarchy cycle: " + path});
                }
                break;
            }
            chain.push_back(cur->id);
            on_chain.insert(cur->id);
            if (!cur->parent) break;
            auto it = by_id.find(*cur->parent);
            cur = it == by_id.end() ? nullptr : it->second;
        }
    }
}

template <typename T>
void check_ids(const std::vector<T>& items, std::string_view kind, ValidationReport& out) {
    std::set<std::string> seen;
    for (const auto& x : items) {
        if (x.id.empty()) out.push_back({"empty-id", std::string(kind) + " with empty id"});
        else if (!seen.insert(x.id).second)
            out.push_back({"duplicate-id", std::string(kind) + " id '" + x.id + "' is not unique"});
    }
}

}  // namespace

const Entity* QualityModel::find_entity(std::string_view id) const { return find_by_id(entities, id); }
const Activity* QualityModel::find_activity(std::string_view id) const { return find_by_id(activities, id); }
const Factor* QualityModel::find_factor(std::string_view id) const { return find_by_id(factors, id); }
const Measure* QualityModel::find_measure(std::string_view id) const { return find_by_id(measures, id); }

ValidationReport validate_model(const QualityModel& m) {
    ValidationReport out;
    auto dangling = [&](const std::string& owner, const std::string& field, const std::string& id) {
        out.push_back({"dangling-reference", owner + "." + field + " references unknown id '" + id + "'"});
    };

    if (m.activities.empty()) out.push_back({"no-activities", "at least one activity is required"});

    check_ids(m.entities, "entity", out);
    check_ids(m.activities, "activity", out);
    check_ids(m.factors, "factor", out);
    check_ids(m.impacts, "impact", out);
    check_ids(m.measures, "measure", out);
    {
        // Net nodes trace back to element ids, so they must not be shared
        // between activities, factors and measures.
        std::map<std::string, std::string> owner;
        auto claim = [&](const std::string& id, const char* kind) {
            auto [it, fresh] = owner.emplace(id, kind);
            if (!fresh && it->second != kind) {
                out.push_back({"ambiguous-id", "id '" + id + "' names both a " + it->second + " and a " + kind});
            }
        };
        for (const auto& a : m.activities) claim(a.id, "activity");
        for (const auto& f : m.factors) claim(f.id, "factor");
        for (const auto& ms : m.measures) claim(ms.id, "measure");
    }

    for (const auto& e : m.entities) {
        if (e.parent && !m.find_entity(*e.parent)) dangling("entity " + e.id, "parent", *e.parent);
    }
    for (const auto& a : m.activities) {
        if (a.parent && !m.find_activity(*a.parent)) dangling("activity " + a.id, "parent", *a.parent);
        check_npt(a.npt, "activity " + a.id, out);
    }
    check_hierarchy(m.entities, "entity", out);
    check_hierarchy(m.activities, "activity", out);

    std::set<std::pair<std::string, std::string>> entity_property;
    for (const auto& f : m.factors) {
        if (!m.find_entity(f.entity)) dangling("factor " + f.id, "entity", f.entity);
        if (!entity_property.emplace(f.entity, f.property).second) {
            out.push_back({"duplicate-factor", "factor " + f.id + " repeats (entity '" + f.entity +
                                                   "', property '" + f.property + "')"});
        }
        check_npt(f.npt, "factor " + f.id, out);
    }

    std::set<std::pair<std::string, std::string>> impact_pairs;
    for (const auto& i : m.impacts) {
        if (!m.find_factor(i.source)) dangling("impact " + i.id, "source", i.source);
        if (!m.find_activity(i.target)) dangling("impact " + i.id, "target", i.target);
        if (!(std::isfinite(i.weight) && i.weight > 0)) {
            out.push_back({"invalid-weight", "impact " + i.id + " weight must be finite and > 0"});
        }
        if (!impact_pairs.emplace(i.source, i.target).second) {
            out.push_back({"duplicate-impact", "impact " + i.id + " repeats " + i.source + " -> " + i.target});
        }
    }

    for (const auto& ms : m.measures) {
        if (!m.find_factor(ms.target) && !m.find_activity(ms.target)) {
            dangling("measure " + ms.id, "target", ms.target);
        }
        if (ms.kind == MeasureKind::scanner_finding && (!ms.vuln_class || ms.vuln_class->empty())) {
            out.push_back({"missing-vuln-class", "scanner-finding measure " + ms.id + " needs a vulnClass"});
        }
        if (ms.diagnosticity && !(*ms.diagnosticity > 0 && *ms.diagnosticity <= 0.5)) {
            out.push_back({"invalid-diagnosticity", "measure " + ms.id + " diagnosticity must lie in (0, 0.5]"});
        }
        check_npt(ms.npt, "measure " + ms.id, out);
    }
    return out;
}

QualityModel read_model(std::string_view document) {
    const json doc = detail::parse_json(document, "model");
    if (!doc.is_object()) detail::schema_error("model", "object");

    QualityModel m;
    m.goal = detail::get_opt_string(doc, "goal", "model").value_or("");
    m.question = detail::get_opt_string(doc, "question", "model").value_or("");
    m.metric = detail::get_opt_string(doc, "metric", "model").value_or("");

    std::size_t i = 0;
    for (const auto& e : elements(doc, "entities")) {
        const std::string p = "model.entities[" + std::to_string(i++) + "]";
        m.entities.push_back({detail::get_string(e, "id", p), detail::get_opt_string(e, "name", p).value_or(""),
                              detail::get_opt_string(e, "parent", p)});
    }
    i = 0;
    for (const auto& a : elements(doc, "activities")) {
        const std::string p = "model.activities[" + std::to_string(i++) + "]";
        m.activities.push_back({detail::get_string(a, "id", p), detail::get_opt_string(a, "name", p).value_or(""),
                                detail::get_opt_string(a, "parent", p), parse_npt(a, p)});
    }
    i = 0;
    for (const auto& f : elements(doc, "factors")) {
        const std::string p = "model.factors[" + std::to_string(i++) + "]";
        m.factors.push_back({detail::get_string(f, "id", p), detail::get_string(f, "entity", p),
                             detail::get_string(f, "property", p), detail::get_opt_string(f, "name", p).value_or(""),
                             parse_npt(f, p)});
    }
    i = 0;
    for (const auto& x : elements(doc, "impacts")) {
        const std::string p = "model.impacts[" + std::to_string(i++) + "]";
        Impact imp;
        imp.id = detail::get_string(x, "id", p);
        imp.source = detail::get_string(x, "source", p);
        imp.target = detail::get_string(x, "target", p);
        if (!x.contains("polarity")) throw Error(Errc::syntax, p + ": missing key 'polarity'");
        imp.polarity = parse_polarity(x, "polarity", p, Polarity::positive);
        imp.weight = detail::get_opt_number(x, "weight", p).value_or(1.0);
        m.impacts.push_back(std::move(imp));
    }
    i = 0;
    for (const auto& x : elements(doc, "measures")) {
        const std::string p = "model.measures[" + std::to_string(i++) + "]";
        Measure ms;
        ms.id = detail::get_string(x, "id", p);
        ms.name = detail::get_opt_string(x, "name", p).value_or("");
        ms.target = detail::get_string(x, "target", p);
        const std::string kind = detail::get_string(x, "kind", p);
        if (kind == "scanner-finding") ms.kind = MeasureKind::scanner_finding;
        else if (kind == "numeric-metric") ms.kind = MeasureKind::numeric_metric;
        else detail::schema_error(p + ".kind", "\"scanner-finding\" or \"numeric-metric\"");
        ms.vuln_class = detail::get_opt_string(x, "vulnClass", p);
        ms.diagnosticity = detail::get_opt_number(x, "diagnosticity", p);
        ms.polarity = parse_polarity(x, "polarity", p, Polarity::negative);
        ms.npt = parse_npt(x, p);
        m.measures.push_back(std::move(ms));
    }
    return m;
}

QualityModel parse_model(std::string_view document) {
    QualityModel m = read_model(document);
    const ValidationReport report = validate_model(m);
    if (!report.empty()) {
        Errc code = Errc::invalid;
        auto has = [&](std::string_view c) {
            return std::any_of(report.begin(), report.end(), [&](const Violation& v) { return v.code == c; });
        };
        if (has("dangling-reference")) code = Errc::reference;
        else if (has("cycle")) code = Errc::cycle;
        std::string msg = "model is invalid:";
        for (const auto& v : report) msg += "\n  " + v.code + ": " + v.message;
        throw Error(code, msg);
    }
    return m;
}

std::string serialize_model(const QualityModel& m) {
    json doc = json::object();
    doc["goal"] = m.goal;
    doc["question"] = m.question;
    doc["metric"] = m.metric;

    json entities = json::array();
    for (const auto& e : m.entities) {
        json j = {{"id", e.id}, {"name", e.name}};
        if (e.parent) j["parent"] = *e.parent;
        entities.push_back(std::move(j));
    }
    json activities = json::array();
    for (const auto& a : m.activities) {
        json j = {{"id", a.id}, {"name", a.name}};
        if (a.parent) j["parent"] = *a.parent;
        if (a.npt) j["npt"] = npt_to_json(*a.npt);
        activities.push_back(std::move(j));
    }
    json factors = json::array();
    for (const auto& f : m.factors) {
        json j = {{"id", f.id}, {"entity", f.entity}, {"property", f.property}, {"name", f.name}};
        if (f.npt) j["npt"] = npt_to_json(*f.npt);
        factors.push_back(std::move(j));
    }
    json impacts = json::array();
    for (const auto& i : m.impacts) {
        impacts.push_back({{"id", i.id},
                           {"source", i.source},
                           {"target", i.target},
                           {"polarity", polarity_symbol(i.polarity)},
                           {"weight", i.weight}});
    }
    json measures = json::array();
    for (const auto& ms : m.measures) {
        json j = {{"id", ms.id},
                  {"name", ms.name},
                  {"target", ms.target},
                  {"kind", ms.kind == MeasureKind::scanner_finding ? "scanner-finding" : "numeric-metric"},
                  {"polarity", polarity_symbol(ms.polarity)}};
        if (ms.vuln_class) j["vulnClass"] = *ms.vuln_class;
        if (ms.diagnosticity) j["diagnosticity"] = *ms.diagnosticity;
        if (ms.npt) j["npt"] = npt_to_json(*ms.npt);
        measures.push_back(std::move(j));
    }
    doc["entities"] = std::move(entities);
    doc["activities"] = std::move(activities);
    doc["factors"] = std::move(factors);
    doc["impacts"] = std::move(impacts);
    doc["measures"] = std::move(measures);
    return doc.dump(2) + "\n";
}

std::vector<std::string> child_activities(const QualityModel& m, std::string_view id) {
    std::vector<std::string> out;
    for (const auto& a : m.activities) {
        if (a.parent && *a.parent == id) out.push_back(a.id);
    }
    return out;
}

std::vector<std::string> activity_subtree(const QualityModel& m, std::string_view root) {
    if (!m.find_activity(root)) throw Error(Errc::not_found, "unknown activity '" + std::string(root) + "'");

    std::multimap<std::string, std::string, std::less<>> children;
    for (const auto& a : m.activities) {
        if (a.parent) children.emplace(*a.parent, a.id);
    }
    // multimap keeps insertion order for equal keys, so children stay in model order.
    std::vector<std::string> out;
    std::set<std::string> visited;
    std::vector<std::string> stack{std::string(root)};
    while (!stack.empty()) {
        std::string id = std::move(stack.back());
        stack.pop_back();
        if (!visited.insert(id).second) continue;
        out.push_back(id);
        auto [lo, hi] = children.equal_range(id);
        std::vector<std::string> kids;
        for (auto it = lo; it != hi; ++it) kids.push_back(it->second);
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

}  // namespace qa::model
