#include "qa/cli.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "qa/assess.hpp"
#include "qa/derive.hpp"
#include "qa/error.hpp"
#include "qa/findings.hpp"
#include "qa/qmodel.hpp"
#include "qa/service.hpp"

namespace qa::cli {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content)) throw Error(Errc::io, "cannot write '" + path + "'");
}

template <typename T, typename Fn>
T load(const std::string& path, std::string_view what, Fn&& parse) {
    const std::string text = read_file(path);
    try {
        return parse(text);
    } catch (const Error& e) {
        throw Error(e.code(), "[load] " + std::string(what) + " " + path + ": " + e.what());
    }
}

void configure_logging() {
    static bool done = false;
    if (done) return;
    done = true;
    auto logger = spdlog::stderr_color_mt("qa");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("QA_LOG"); env && *env) level = spdlog::level::from_str(env);
    spdlog::set_level(level);
}

struct BundleArgs {
    std::string model;
    std::string plan;
    std::string taxonomy;
    std::string system;
    std::vector<std::string> findings;
    std::string adapter = "normalized";

    void attach(CLI::App& cmd) {
        cmd.add_option("--model", model, "quality model (JSON)")->required();
        cmd.add_option("--plan", plan, "assessment plan (JSON)")->required();
        cmd.add_option("--taxonomy", taxonomy, "vulnerability taxonomy (JSON)")->required();
        cmd.add_option("--system", system, "system descriptor (JSON)")->required();
        cmd.add_option("--findings", findings, "scanner findings files")->expected(0, -1);
        cmd.add_option("--adapter", adapter, "findings adapter")->capture_default_str();
    }

    assess::Bundle load_bundle() const {
        assess::Bundle b;
        b.model = load<model::QualityModel>(model, "model", [](auto& t) { return model::read_model(t); });
        b.plan = load<derive::AssessmentPlan>(plan, "plan", [](auto& t) { return derive::parse_plan(t); });
        b.taxonomy = load<findings::VulnTaxonomy>(taxonomy, "taxonomy", [](auto& t) { return findings::parse_taxonomy(t); });
        b.system = load<assess::SystemDescriptor>(system, "system", [](auto& t) { return assess::parse_system(t); });
        for (const auto& f : findings) {
            b.reports.push_back(load<findings::FindingsReport>(
                f, "findings", [this](auto& t) { return findings::parse_report(t, adapter); }));
        }
        return b;
    }
};

int cmd_validate(const std::string& path, std::ostream& out) {
    const auto m = load<model::QualityModel>(path, "model", [](auto& t) { return model::read_model(t); });
    const auto report = model::validate_model(m);
    for (const auto& v : report) out << v.code << ": " << v.message << "\n";
    return report.empty() ? kOk : kDomainError;
}

int cmd_derive(const std::string& model_path, const std::string& plan_path, const std::string& emit, std::ostream& out) {
    const auto m = load<model::QualityModel>(model_path, "model", [](auto& t) { return model::parse_model(t); });
    const auto plan = load<derive::AssessmentPlan>(plan_path, "plan", [](auto& t) { return derive::parse_plan(t); });
    derive::DerivedNet derived;
    try {
        derived = derive::derive_net(m, plan);
    } catch (const Error& e) {
        rethrow_in_stage("derive", e);
    }
    std::map<bayes::NodeKind, int> kinds;
    for (const auto& n : derived.net.nodes()) ++kinds[n.kind];
    out << "derived " << derived.net.size() << " nodes: " << kinds[bayes::NodeKind::activity] << " activity, "
        << kinds[bayes::NodeKind::factor] << " factor, " << kinds[bayes::NodeKind::measure] << " measure, "
        << kinds[bayes::NodeKind::metric] << " metric\n";
    if (!emit.empty()) write_file(emit, derive::net_to_json(derived, m).dump(2) + "\n");
    return kOk;
}

void print_density(const std::string& name, double mean, double sd, std::ostream& out) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: mean %.6f sd %.6f\n", name.c_str(), mean, sd);
    out << buf;
}

int cmd_assess(const BundleArgs& args, const std::string& out_path, const std::string& format,
               const std::string& timestamp, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    auto prepared = assess::prepare(args.load_bundle());
    const auto report = assess::make_report(*prepared, timestamp);
    const auto doc = assess::emit_report(report, format == "text" ? assess::ReportFormat::text : assess::ReportFormat::json);
    const bool to_stdout = out_path.empty() || out_path == "-";
    if (to_stdout) out << doc;
    else write_file(out_path, doc);
    print_density(report.metric_name, report.density_mean, report.density_sd, to_stdout ? err : out);
    spdlog::info("assessment finished in {} ms",
                 std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count());
    return kOk;
}

int cmd_whatif(const BundleArgs& args, const std::vector<std::string>& sets, const std::string& out_path,
               std::ostream& out) {
    auto prepared = assess::prepare(args.load_bundle());
    assess::WhatIfSession session(prepared);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(Errc::syntax, "--set expects node=state, got '" + s + "'");
        try {
            session.set(s.substr(0, eq), s.substr(eq + 1));
        } catch (const Error& e) {
            rethrow_in_stage("whatif", e);
        }
    }

    const auto& net = prepared->derived.net;
    nlohmann::json posteriors = nlohmann::json::array();
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& p = session.posteriors()[i];
        nlohmann::json j = {{"node", p.node}, {"states", net.node(i).states}, {"probabilities", p.probabilities}};
        if (p.mean) j["mean"] = *p.mean;
        if (p.sd) j["sd"] = *p.sd;
        posteriors.push_back(std::move(j));
    }
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& [node, state] : session.overrides()) overrides[node] = net.node(node).states[state];
    const bayes::Moments m = session.metric();
    const nlohmann::json doc = {{"overrides", overrides},
                                {"metric", {{"node", prepared->derived.metric_node}, {"mean", m.mean}, {"sd", m.sd}}},
                                {"posteriors", posteriors}};
    if (!out_path.empty()) write_file(out_path, doc.dump(2) + "\n");
    const bayes::Moments base = bayes::posterior_stats(prepared->base_posteriors[net.index_of(prepared->derived.metric_node)],
                                                       net.node(prepared->derived.metric_node));
    print_density(prepared->bundle.plan.metric.name + " (base)", base.mean, base.sd, out);
    print_density(prepared->bundle.plan.metric.name + " (what-if)", m.mean, m.sd, out);
    return kOk;
}

service::WhatIfService* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) g_service->stop();
}

int cmd_serve(const BundleArgs& args, const std::string& host, int port, const std::string& webui, std::ostream& out) {
    auto prepared = assess::prepare(args.load_bundle());
    service::WhatIfService svc(prepared, {host, port, webui});
    const int bound = svc.bind();
    out << "serving on http://" << host << ":" << bound << std::endl;
    g_service = &svc;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    svc.run();
    g_service = nullptr;
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    configure_logging();

    CLI::App app{"Quality assessment from security scanner findings via derived Bayesian nets", "qa"};
    app.require_subcommand(1);

    std::string model_path;
    auto* validate = app.add_subcommand("validate", "check a quality model against its invariants");
    validate->add_option("--model", model_path, "quality model (JSON)")->required();

    std::string plan_path, emit_path;
    auto* derive = app.add_subcommand("derive", "derive the Bayesian net for a plan");
    derive->add_option("--model", model_path, "quality model (JSON)")->required();
    derive->add_option("--plan", plan_path, "assessment plan (JSON)")->required();
    derive->add_option("--emit-net", emit_path, "write the derived net as JSON");

    BundleArgs bundle;
    std::string out_path, format = "json", timestamp;
    auto* assess_cmd = app.add_subcommand("assess", "run a full assessment and write the report");
    bundle.attach(*assess_cmd);
    assess_cmd->add_option("--out", out_path, "report file ('-' for stdout)");
    assess_cmd->add_option("--format", format, "json | text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
    assess_cmd->add_option("--timestamp", timestamp, "fixed report timestamp (default: now, UTC)");

    BundleArgs whatif_bundle;
    std::vector<std::string> sets;
    std::string whatif_out;
    auto* whatif = app.add_subcommand("whatif", "evaluate hypothetical node states once");
    whatif_bundle.attach(*whatif);
    whatif->add_option("--set", sets, "node=state override (repeatable)");
    whatif->add_option("--out", whatif_out, "write posteriors as JSON");

    BundleArgs serve_bundle;
    std::string host = "127.0.0.1", webui = "webui/dist";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "start the HTTP what-if service");
    serve_bundle.attach(*serve);
    serve->add_option("--port", port, "TCP port")->capture_default_str();
    serve->add_option("--host", host, "bind address")->capture_default_str();
    serve->add_option("--webui", webui, "directory with the web UI bundle")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "qa: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        if (validate->parsed()) return cmd_validate(model_path, out);
        if (derive->parsed()) return cmd_derive(model_path, plan_path, emit_path, out);
        if (assess_cmd->parsed()) return cmd_assess(bundle, out_path, format, timestamp, out, err);
        if (whatif->parsed()) return cmd_whatif(whatif_bundle, sets, whatif_out, out);
        if (serve->parsed()) return cmd_serve(serve_bundle, host, port, webui, out);
    } catch (const Error& e) {
        err << "qa: " << e.what() << "\n";
        return e.code() == Errc::io ? kUsageError : kDomainError;
    } catch (const std::exception& e) {
        err << "qa: " << e.what() << "\n";
        return kDomainError;
    }
    return kUsageError;
}

}  // namespace qa::cli
