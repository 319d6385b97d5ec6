#include "qa/assess.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include "json_util.hpp"
#include "qa/error.hpp"

namespace qa::assess {

using detail::json;

namespace {

template <typename Fn>
auto in_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        rethrow_in_stage(stage, e);
    }
}

findings::ClassifiedCounts only_system(const findings::ClassifiedCounts& counts, const std::string& system) {
    findings::ClassifiedCounts out;
    out.scanners = counts.scanners;
    out.systems = {system};
    if (auto it = counts.counts.find(system); it != counts.counts.end()) out.counts[system] = it->second;
    return out;
}

}  // namespace

SystemDescriptor parse_system(std::string_view document) {
    const json doc = detail::parse_json(document, "system");
    SystemDescriptor s;
    s.id = detail::get_string(doc, "id", "system");
    s.name = detail::get_opt_string(doc, "name", "system").value_or(s.id);
    const json& sloc = detail::require(doc, "sloc", "system");
    if (!sloc.is_number_integer()) detail::schema_error("system.sloc", "integer");
    s.sloc = sloc.get<long long>();
    s.language = detail::get_opt_string(doc, "language", "system").value_or("");
    s.version = detail::get_opt_string(doc, "version", "system").value_or("");
    if (s.id.empty()) throw Error(Errc::invalid, "system: id must be non-empty");
    if (s.sloc <= 0) throw Error(Errc::invalid, "system: sloc must be positive");
    return s;
}

std::shared_ptr<const PreparedAssessment> prepare(Bundle bundle) {
    auto p = std::make_shared<PreparedAssessment>();
    p->bundle = std::move(bundle);
    const Bundle& b = p->bundle;

    in_stage("validate", [&] {
        const auto violations = model::validate_model(b.model);
        if (!violations.empty()) {
            std::string msg = "model is invalid:";
            for (const auto& v : violations) msg += "\n  " + v.code + ": " + v.message;
            throw Error(Errc::invalid, msg);
        }
        if (b.system.sloc <= 0) throw Error(Errc::invalid, "system sloc must be positive");
    });
    in_stage("taxonomy", [&] { findings::check_taxonomy(b.taxonomy, b.model); });
    p->derived = in_stage("derive", [&] { return derive::derive_net(b.model, b.plan); });
    p->counts = in_stage("classify", [&] { return findings::classify(b.reports, b.taxonomy); });
    p->observations = in_stage("vote", [&] { return findings::vote(p->counts, b.taxonomy, b.model, b.system.id); });
    p->agreement = findings::scanner_diff(only_system(p->counts, b.system.id));

    for (const auto& [measure, v] : p->observations.values) {
        const std::string node = derive::measure_node_id(measure);
        if (p->derived.net.find(node)) p->evidence[node] = v == findings::Vote::yes ? 1 : 0;
    }
    p->base_posteriors = in_stage("infer", [&] { return bayes::query_all(p->derived.net, p->evidence); });
    return p;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

AssessmentReport make_report(const PreparedAssessment& p, std::string timestamp) {
    const Bundle& b = p.bundle;
    const bayes::BayesNet& net = p.derived.net;

    AssessmentReport r;
    r.system = b.system;
    r.goal = b.model.goal;
    r.question = b.model.question;
    r.metric = b.model.metric;
    r.metric_node = p.derived.metric_node;
    r.metric_name = b.plan.metric.name;
    r.metric_unit = b.plan.metric.unit;
    r.observations = p.observations;
    r.agreement = p.agreement;
    r.timestamp = timestamp.empty() ? utc_timestamp() : std::move(timestamp);

    for (std::size_t i = 0; i < net.size(); ++i) {
        const bayes::Node& n = net.node(i);
        if (n.kind == bayes::NodeKind::measure) continue;
        const bayes::Posterior& post = p.base_posteriors[i];
        r.posteriors.push_back({n.id, std::string(bayes::to_string(n.kind)), p.derived.map.trace(n.id),
                                derive::display_name(p.derived, b.model, n.id), n.states, post.probabilities,
                                post.mean, post.sd});
    }

    const bayes::Moments m = bayes::posterior_stats(p.base_posteriors[net.index_of(r.metric_node)], net.node(r.metric_node));
    r.density_mean = m.mean;
    r.density_sd = m.sd;
    r.expected_vuln_count = r.density_mean * static_cast<double>(b.system.sloc) / 1000.0;

    const bool any_yes = std::any_of(r.observations.values.begin(), r.observations.values.end(),
                                     [](const auto& kv) { return kv.second == findings::Vote::yes; });
    if (!any_yes) r.caveats.push_back("no scanner findings mapped to measures; the prediction rests on priors only");

    std::vector<std::string> excluded;
    if (auto it = p.counts.counts.find(b.system.id); it != p.counts.counts.end()) {
        for (const auto& [cls, scanners] : it->second) {
            const auto* c = b.taxonomy.find(cls);
            if (c && !c->attributable) excluded.push_back(cls);
        }
    }
    if (!excluded.empty()) {
        std::string list;
        for (const auto& c : excluded) list += (list.empty() ? "" : ", ") + c;
        r.caveats.push_back("classes not attributable to a product entity were excluded: " + list);
    }
    std::size_t unresolved = 0;
    for (const auto& u : p.counts.unresolved) unresolved += u.system == b.system.id ? 1 : 0;
    if (unresolved > 0) {
        r.caveats.push_back(std::to_string(unresolved) + " findings have classes missing from the taxonomy and were not used");
    }
    if (p.agreement.per_scanner.size() > 1) {
        r.caveats.push_back("scanner agreement: " + std::to_string(p.agreement.single_scanner) +
                            " class(es) reported by a single scanner, " + std::to_string(p.agreement.multi_scanner) +
                            " by several; findings are not checked for false positives");
    } else {
        r.caveats.push_back("findings are not checked for false positives");
    }
    return r;
}

AssessmentReport run_assessment(const model::QualityModel& model, const derive::AssessmentPlan& plan,
                                std::span<const findings::FindingsReport> reports,
                                const findings::VulnTaxonomy& taxonomy, const SystemDescriptor& system,
                                std::string timestamp) {
    Bundle b{model, plan, {reports.begin(), reports.end()}, taxonomy, system};
    return make_report(*prepare(std::move(b)), std::move(timestamp));
}

WhatIfSession::WhatIfSession(std::shared_ptr<const PreparedAssessment> base)
    : base_(std::move(base)), posteriors_(base_->base_posteriors) {}

bayes::Evidence WhatIfSession::evidence() const {
    bayes::Evidence e = base_->evidence;
    for (const auto& [node, state] : overrides_) e[node] = state;
    return e;
}

void WhatIfSession::recompute(bayes::Evidence overrides) {
    if (overrides.empty()) {
        posteriors_ = base_->base_posteriors;
        overrides_.clear();
        return;
    }
    bayes::Evidence merged = base_->evidence;
    for (const auto& [node, state] : overrides) merged[node] = state;
    auto fresh = bayes::query_all(base_->derived.net, merged);
    posteriors_ = std::move(fresh);
    overrides_ = std::move(overrides);
}

const std::vector<bayes::Posterior>& WhatIfSession::set(std::string_view node, std::string_view state) {
    const bayes::Node& n = base_->derived.net.node(node);
    auto it = std::find(n.states.begin(), n.states.end(), state);
    if (it == n.states.end()) {
        throw Error(Errc::not_found, "node '" + n.id + "' has no state '" + std::string(state) + "'");
    }
    return set(node, static_cast<int>(it - n.states.begin()));
}

const std::vector<bayes::Posterior>& WhatIfSession::set(std::string_view node, int state) {
    const bayes::Node& n = base_->derived.net.node(node);
    if (state < 0 || state >= static_cast<int>(n.states.size())) {
        throw Error(Errc::invalid, "state index out of range for node '" + n.id + "'");
    }
    bayes::Evidence next = overrides_;
    next[n.id] = state;
    recompute(std::move(next));
    return posteriors_;
}

const std::vector<bayes::Posterior>& WhatIfSession::clear(std::string_view node) {
    base_->derived.net.index_of(node);
    bayes::Evidence next = overrides_;
    if (auto it = next.find(node); it != next.end()) next.erase(it);
    recompute(std::move(next));
    return posteriors_;
}

const std::vector<bayes::Posterior>& WhatIfSession::clear_all() {
    recompute({});
    return posteriors_;
}

const bayes::Posterior& WhatIfSession::posterior(std::string_view node) const {
    return posteriors_[base_->derived.net.index_of(node)];
}

bayes::Moments WhatIfSession::metric() const {
    const auto& net = base_->derived.net;
    const std::string& id = base_->derived.metric_node;
    return bayes::posterior_stats(posterior(id), net.node(id));
}

}  // namespace qa::assess
