#include "qa/derive.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "json_util.hpp"
#include "qa/error.hpp"

namespace qa::derive {

using detail::json;
using model::MeasureKind;
using model::NptSpec;

namespace {

std::string slug(std::string_view text) {
    std::string out;
    bool dash = false;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
            dash = false;
        } else if (!out.empty() && !dash) {
            out.push_back('-');
            dash = true;
        }
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "metric" : out;
}

npt::RankedScale scale_for(const std::optional<NptSpec>& spec, const PlanDefaults& d) {
    return npt::RankedScale::make(spec && spec->states ? *spec->states : d.ranked_states);
}

npt::Npt explicit_table(const NptSpec& spec, int child_states, std::vector<int> parent_cards, const std::string& owner) {
    std::vector<double> flat;
    for (const auto& row : spec.rows) {
        if (row.size() != static_cast<std::size_t>(child_states)) {
            throw Error(Errc::dimension, owner + ": explicit row has " + std::to_string(row.size()) +
                                             " entries, expected " + std::to_string(child_states));
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    try {
        return npt::Npt(child_states, std::move(parent_cards), std::move(flat));
    } catch (const Error& e) {
        throw Error(e.code(), owner + ": " + e.what());
    }
}

bayes::Node ranked_node(const std::string& id, bayes::NodeKind kind, const npt::RankedScale& scale) {
    bayes::Node n;
    n.id = id;
    n.kind = kind;
    n.states = scale.labels;
    n.midpoints = scale.midpoints();
    return n;
}

void check_plan(const AssessmentPlan& p) {
    auto bad = [](const std::string& why) { throw Error(Errc::invalid, "plan: " + why); };
    if (p.root_activity.empty()) bad("rootActivity must be set");
    if (p.metric.name.empty()) bad("metricNode.name must be set");
    if (!(std::isfinite(p.metric.lo) && std::isfinite(p.metric.hi) && p.metric.lo < p.metric.hi)) {
        bad("metricNode.range must be finite with lo < hi");
    }
    if (p.metric.bins < 2) bad("metricNode.binCount must be >= 2");
    if (!(std::isfinite(p.metric.sigma) && p.metric.sigma > 0)) bad("metricNode.sigma must be > 0");
    if (!(std::isfinite(p.metric.expr.offset) && std::isfinite(p.metric.expr.scale))) bad("metricNode.expr must be finite");
    if (p.defaults.ranked_states < 2) bad("defaults.rankedStateCount must be >= 2");
    if (!(std::isfinite(p.defaults.sigma_ranked) && p.defaults.sigma_ranked > 0)) bad("defaults.sigmaRanked must be > 0");
    if (!(p.defaults.epsilon_measure > 0 && p.defaults.epsilon_measure <= 0.5)) {
        bad("defaults.epsilonMeasure must lie in (0, 0.5]");
    }
}

}  // namespace

AssessmentPlan parse_plan(std::string_view document) {
    const json doc = detail::parse_json(document, "plan");
    AssessmentPlan p;
    p.root_activity = detail::get_string(doc, "rootActivity", "plan");

    const json& m = detail::require(doc, "metricNode", "plan");
    const std::string mp = "plan.metricNode";
    p.metric.name = detail::get_string(m, "name", mp);
    const json& range = detail::get_array(m, "range", mp);
    if (range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
        detail::schema_error(mp + ".range", "[lo, hi]");
    }
    p.metric.lo = range[0].get<double>();
    p.metric.hi = range[1].get<double>();
    p.metric.bins = detail::get_opt_int(m, "binCount", mp).value_or(40);
    p.metric.sigma = detail::get_opt_number(m, "sigma", mp).value_or(0.003);
    p.metric.expr = {p.metric.lo, p.metric.hi - p.metric.lo};
    if (m.contains("expr")) {
        const json& e = m.at("expr");
        p.metric.expr.offset = detail::get_opt_number(e, "offset", mp + ".expr").value_or(p.metric.expr.offset);
        p.metric.expr.scale = detail::get_opt_number(e, "scale", mp + ".expr").value_or(p.metric.expr.scale);
    }
    p.metric.measure = detail::get_opt_string(m, "measure", mp);
    p.metric.unit = detail::get_opt_string(m, "unit", mp).value_or("");

    if (doc.contains("defaults")) {
        const json& d = doc.at("defaults");
        p.defaults.ranked_states = detail::get_opt_int(d, "rankedStateCount", "plan.defaults").value_or(3);
        p.defaults.sigma_ranked = detail::get_opt_number(d, "sigmaRanked", "plan.defaults").value_or(0.2);
        p.defaults.epsilon_measure = detail::get_opt_number(d, "epsilonMeasure", "plan.defaults").value_or(0.1);
    }
    check_plan(p);
    return p;
}

void NodeMap::add(const std::string& node_id, const std::string& element_id) {
    if (to_element_.contains(node_id) || to_node_.contains(node_id) || to_element_.contains(element_id) ||
        to_node_.contains(element_id) || node_id == element_id) {
        throw Error(Errc::invalid, "ambiguous trace between node '" + node_id + "' and element '" + element_id + "'");
    }
    to_element_.emplace(node_id, element_id);
    to_node_.emplace(element_id, node_id);
}

const std::string& NodeMap::trace(std::string_view id) const {
    if (auto it = to_element_.find(id); it != to_element_.end()) return it->second;
    if (auto it = to_node_.find(id); it != to_node_.end()) return it->second;
    throw Error(Errc::not_found, "no node or element with id '" + std::string(id) + "'");
}

bool NodeMap::contains(std::string_view id) const {
    return to_element_.find(id) != to_element_.end() || to_node_.find(id) != to_node_.end();
}

std::string activity_node_id(std::string_view id) { return "a." + std::string(id); }
std::string factor_node_id(std::string_view id) { return "f." + std::string(id); }
std::string measure_node_id(std::string_view id) { return "m." + std::string(id); }

DerivedNet derive_net(const model::QualityModel& model, const AssessmentPlan& plan) {
    check_plan(plan);
    if (!model.find_activity(plan.root_activity)) {
        throw Error(Errc::not_found, "root activity '" + plan.root_activity + "' is not in the model");
    }
    const PlanDefaults& d = plan.defaults;

    const std::vector<std::string> subtree = model::activity_subtree(model, plan.root_activity);
    const std::set<std::string> included(subtree.begin(), subtree.end());

    std::vector<const model::Impact*> impacts;
    for (const auto& i : model.impacts) {
        if (included.contains(i.target)) impacts.push_back(&i);
    }
    std::sort(impacts.begin(), impacts.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::set<std::string> factor_ids;
    for (const auto* i : impacts) factor_ids.insert(i->source);

    if (plan.metric.measure) {
        const model::Measure* ms = model.find_measure(*plan.metric.measure);
        if (!ms || ms->kind != MeasureKind::numeric_metric || ms->target != plan.root_activity) {
            throw Error(Errc::invalid, "plan metric measure '" + *plan.metric.measure +
                                           "' must be a numeric-metric measure on the root activity");
        }
    }

    std::vector<const model::Measure*> measures;
    for (const auto& ms : model.measures) {
        if (ms.kind != MeasureKind::scanner_finding) continue;
        if (!factor_ids.contains(ms.target) && !included.contains(ms.target)) {
            throw Error(Errc::reference, "orphan-measure: measure '" + ms.id + "' targets '" + ms.target +
                                             "', which has no impact path into the subtree of '" +
                                             plan.root_activity + "'");
        }
        measures.push_back(&ms);
    }
    std::sort(measures.begin(), measures.end(), [](auto* a, auto* b) { return a->id < b->id; });

    DerivedNet out;
    std::vector<bayes::Node> nodes;
    std::map<std::string, npt::RankedScale> scales;  // node id -> scale

    for (const auto& fid : factor_ids) {
        const model::Factor& f = *model.find_factor(fid);
        const std::string id = factor_node_id(fid);
        const npt::RankedScale scale = scale_for(f.npt, d);
        bayes::Node n = ranked_node(id, bayes::NodeKind::factor, scale);
        if (f.npt && f.npt->type == "explicit") {
            n.npt = explicit_table(*f.npt, scale.states, {}, "factor " + fid);
        } else if (f.npt && f.npt->type == "wmean") {
            npt::WmeanSpec spec;
            spec.sigma = f.npt->sigma.value_or(d.sigma_ranked);
            spec.prior_mean = f.npt->mean.value_or(0.5);
            n.npt = npt::ranked_npt({}, scale, spec);
        } else if (!f.npt) {
            n.npt = npt::Npt(scale.states, {}, std::vector<double>(scale.states, 1.0 / scale.states));
        } else {
            throw Error(Errc::invalid, "factor " + fid + ": npt type '" + f.npt->type + "' does not apply to factors");
        }
        scales.emplace(id, scale);
        out.map.add(id, fid);
        nodes.push_back(std::move(n));
    }

    // Scales first so parents can be looked up regardless of visiting order.
    for (const auto& aid : subtree) scales.emplace(activity_node_id(aid), scale_for(model.find_activity(aid)->npt, d));

    for (const auto& aid : subtree) {
        const model::Activity& a = *model.find_activity(aid);
        const std::string id = activity_node_id(aid);
        const npt::RankedScale& scale = scales.at(id);
        bayes::Node n = ranked_node(id, bayes::NodeKind::activity, scale);

        std::vector<npt::RankedScale> parent_scales;
        npt::WmeanSpec spec;
        spec.sigma = a.npt && a.npt->sigma ? *a.npt->sigma : d.sigma_ranked;
        spec.prior_mean = a.npt && a.npt->mean ? *a.npt->mean : 0.5;
        for (const auto& child : model::child_activities(model, aid)) {
            n.parents.push_back(activity_node_id(child));
            parent_scales.push_back(scales.at(n.parents.back()));
            spec.weights.push_back(1.0);
            spec.polarities.push_back(Polarity::positive);
        }
        for (const auto* i : impacts) {
            if (i->target != aid) continue;
            n.parents.push_back(factor_node_id(i->source));
            parent_scales.push_back(scales.at(n.parents.back()));
            spec.weights.push_back(i->weight);
            spec.polarities.push_back(i->polarity);
        }

        if (a.npt && a.npt->type == "explicit") {
            std::vector<int> cards;
            for (const auto& s : parent_scales) cards.push_back(s.states);
            n.npt = explicit_table(*a.npt, scale.states, cards, "activity " + aid);
        } else if (!a.npt || a.npt->type == "wmean") {
            n.npt = npt::ranked_npt(parent_scales, scale, spec);
        } else {
            throw Error(Errc::invalid, "activity " + aid + ": npt type '" + a.npt->type + "' does not apply to activities");
        }
        out.map.add(id, aid);
        nodes.push_back(std::move(n));
    }

    for (const auto* ms : measures) {
        const std::string id = measure_node_id(ms->id);
        const std::string parent = factor_ids.contains(ms->target) ? factor_node_id(ms->target)
                                                                   : activity_node_id(ms->target);
        const npt::RankedScale& pscale = scales.at(parent);
        bayes::Node n;
        n.id = id;
        n.kind = bayes::NodeKind::measure;
        n.states = {"no", "yes"};
        n.parents = {parent};
        const std::string owner = "measure " + ms->id;
        if (ms->npt && ms->npt->type == "explicit") {
            n.npt = explicit_table(*ms->npt, 2, {pscale.states}, owner);
        } else if (ms->npt && ms->npt->type == "partition" && !ms->npt->mapping.empty()) {
            if (ms->npt->mapping.size() != static_cast<std::size_t>(pscale.states)) {
                throw Error(Errc::dimension, owner + ": partition mapping needs one entry per parent state");
            }
            n.npt = npt::partitioned_npt(ms->npt->mapping);
        } else if (!ms->npt || ms->npt->type == "partition") {
            const double eps = ms->npt && ms->npt->epsilon ? *ms->npt->epsilon
                                                           : ms->diagnosticity.value_or(d.epsilon_measure);
            n.npt = npt::partitioned_npt(pscale, eps);
            if (ms->polarity == Polarity::positive) n.npt = npt::reflect_parent(n.npt);
        } else {
            throw Error(Errc::invalid, owner + ": npt type '" + ms->npt->type + "' does not apply to measures");
        }
        out.map.add(id, ms->id);
        nodes.push_back(std::move(n));
    }

    {
        const npt::NumericScale numeric{plan.metric.lo, plan.metric.hi, plan.metric.bins};
        bayes::Node n;
        n.id = "metric." + (plan.metric.measure ? *plan.metric.measure : slug(plan.metric.name));
        n.kind = bayes::NodeKind::metric;
        n.states = numeric.labels();
        n.midpoints = numeric.midpoints();
        n.parents = {activity_node_id(plan.root_activity)};
        n.npt = npt::arithmetic_npt(scales.at(n.parents[0]), numeric, plan.metric.expr, plan.metric.sigma);
        out.map.add(n.id, plan.metric.name);
        out.metric_node = n.id;
        nodes.push_back(std::move(n));
    }
    out.root_node = activity_node_id(plan.root_activity);
    out.net = bayes::build_net(std::move(nodes));
    return out;
}

std::string display_name(const DerivedNet& derived, const model::QualityModel& model, std::string_view node_id) {
    const bayes::Node& n = derived.net.node(node_id);
    const std::string& element = derived.map.trace(node_id);
    switch (n.kind) {
        case bayes::NodeKind::activity: return model.find_activity(element)->name;
        case bayes::NodeKind::factor: return model.find_factor(element)->name;
        case bayes::NodeKind::measure: return model.find_measure(element)->name;
        case bayes::NodeKind::metric: return element;
    }
    return element;
}

json net_to_json(const DerivedNet& derived, const model::QualityModel& model, bool with_npt) {
    json nodes = json::array();
    for (const auto& n : derived.net.nodes()) {
        json j = {{"id", n.id},
                  {"kind", bayes::to_string(n.kind)},
                  {"element", derived.map.trace(n.id)},
                  {"name", display_name(derived, model, n.id)},
                  {"states", n.states},
                  {"parents", n.parents}};
        if (n.midpoints) j["midpoints"] = *n.midpoints;
        if (with_npt) {
            json rows = json::array();
            for (std::size_t r = 0; r < n.npt.row_count(); ++r) {
                auto row = n.npt.row(r);
                rows.push_back({{"parentStates", n.npt.combo(r)}, {"p", std::vector<double>(row.begin(), row.end())}});
            }
            j["npt"] = std::move(rows);
        }
        nodes.push_back(std::move(j));
    }
    return {{"rootNode", derived.root_node}, {"metricNode", derived.metric_node}, {"nodes", std::move(nodes)}};
}

}  // namespace qa::derive
