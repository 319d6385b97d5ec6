#include "qa/service.hpp"

#include <filesystem>
#include <map>
#include <mutex>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "qa/error.hpp"

namespace qa::service {

using nlohmann::json;

namespace {

constexpr const char* kFallbackPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>qa what-if</title></head>
<body><h1>qa what-if service</h1>
<p>The web UI bundle is not installed. API endpoints:</p>
<ul><li>GET /api/net</li><li>GET /api/posteriors</li><li>POST /api/observations</li>
<li>DELETE /api/observations</li><li>GET /api/report</li></ul></body></html>
)";

struct SessionSlot {
    std::mutex mutex;
    assess::WhatIfSession session;

    explicit SessionSlot(std::shared_ptr<const assess::PreparedAssessment> base) : session(std::move(base)) {}
};

int status_for(Errc code) {
    switch (code) {
        case Errc::not_found: return 404;
        case Errc::inconsistent_evidence: return 409;
        default: return 400;
    }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, {{"error", code}, {"message", message}}, status);
}

std::string session_token(const httplib::Request& req) {
    if (req.has_header("X-QA-Session")) return req.get_header_value("X-QA-Session");
    if (req.has_param("session")) return req.get_param_value("session");
    return "default";
}

}  // namespace

struct WhatIfService::Impl {
    std::shared_ptr<const assess::PreparedAssessment> assessment;
    ServiceOptions options;
    httplib::Server server;
    json net_json;
    json report_json;

    std::mutex sessions_mutex;
    std::map<std::string, std::unique_ptr<SessionSlot>> sessions;

    SessionSlot& slot(const std::string& token) {
        std::lock_guard lock(sessions_mutex);
        auto& s = sessions[token];
        if (!s) s = std::make_unique<SessionSlot>(assessment);
        return *s;
    }

    json posteriors_json(const assess::WhatIfSession& session) const {
        const auto& net = assessment->derived.net;
        const bayes::Evidence evidence = session.evidence();
        json list = json::array();
        for (std::size_t i = 0; i < net.size(); ++i) {
            const auto& node = net.node(i);
            const auto& post = session.posteriors()[i];
            json j = {{"node", node.id}, {"probabilities", post.probabilities}};
            if (post.mean) j["mean"] = *post.mean;
            if (post.sd) j["sd"] = *post.sd;
            if (auto it = evidence.find(node.id); it != evidence.end()) {
                j["evidence"] = node.states[static_cast<std::size_t>(it->second)];
                j["source"] = session.overrides().contains(node.id) ? "override" : "observation";
            } else {
                j["evidence"] = nullptr;
            }
            list.push_back(std::move(j));
        }
        json overrides = json::object();
        for (const auto& [node, state] : session.overrides()) {
            overrides[node] = net.node(node).states[static_cast<std::size_t>(state)];
        }
        const bayes::Moments m = session.metric();
        return {{"posteriors", std::move(list)},
                {"overrides", std::move(overrides)},
                {"metric", {{"node", assessment->derived.metric_node}, {"mean", m.mean}, {"sd", m.sd}}}};
    }

    void routes() {
        server.Get("/api/net", [this](const httplib::Request&, httplib::Response& res) { send_json(res, net_json); });

        server.Get("/api/report", [this](const httplib::Request&, httplib::Response& res) { send_json(res, report_json); });

        server.Get("/api/posteriors", [this](const httplib::Request& req, httplib::Response& res) {
            SessionSlot& s = slot(session_token(req));
            std::lock_guard lock(s.mutex);
            send_json(res, posteriors_json(s.session));
        });

        server.Post("/api/observations", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::parse_error& e) {
                return send_error(res, 400, "syntax", e.what());
            }
            if (!body.is_object() || !body.contains("node") || !body["node"].is_string() || !body.contains("state") ||
                !(body["state"].is_string() || body["state"].is_null())) {
                return send_error(res, 400, "syntax", R"(expected {"node": string, "state": string | null})");
            }
            SessionSlot& s = slot(session_token(req));
            std::lock_guard lock(s.mutex);
            try {
                const auto node = body["node"].get<std::string>();
                if (body["state"].is_null()) {
                    s.session.clear(node);
                } else {
                    s.session.set(node, body["state"].get<std::string>());
                }
                spdlog::debug("session {}: {} -> {}", session_token(req), node, body["state"].dump());
            } catch (const Error& e) {
                return send_error(res, status_for(e.code()), to_string(e.code()), e.what());
            }
            send_json(res, posteriors_json(s.session));
        });

        server.Delete("/api/observations", [this](const httplib::Request& req, httplib::Response& res) {
            SessionSlot& s = slot(session_token(req));
            std::lock_guard lock(s.mutex);
            s.session.clear_all();
            send_json(res, posteriors_json(s.session));
        });

        if (!options.webui_dir.empty() && std::filesystem::is_directory(options.webui_dir)) {
            server.set_mount_point("/", options.webui_dir);
        } else {
            server.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content(kFallbackPage, "text/html; charset=utf-8");
            });
        }
    }
};

WhatIfService::WhatIfService(std::shared_ptr<const assess::PreparedAssessment> assessment, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->assessment = std::move(assessment);
    impl_->options = std::move(options);
    impl_->net_json = derive::net_to_json(impl_->assessment->derived, impl_->assessment->bundle.model, false);
    json observed = json::object();
    for (const auto& [node, state] : impl_->assessment->evidence) {
        observed[node] = impl_->assessment->derived.net.node(node).states[static_cast<std::size_t>(state)];
    }
    impl_->net_json["observations"] = std::move(observed);
    impl_->report_json = assess::report_to_json(assess::make_report(*impl_->assessment));
    impl_->routes();
}

WhatIfService::~WhatIfService() { stop(); }

int WhatIfService::bind() {
    auto& o = impl_->options;
    if (o.port == 0) {
        const int port = impl_->server.bind_to_any_port(o.host);
        if (port < 0) throw Error(Errc::io, "cannot bind " + o.host);
        o.port = port;
    } else if (!impl_->server.bind_to_port(o.host, o.port)) {
        throw Error(Errc::io, "cannot bind " + o.host + ":" + std::to_string(o.port));
    }
    spdlog::info("what-if service bound to http://{}:{}", o.host, o.port);
    return o.port;
}

void WhatIfService::run() { impl_->server.listen_after_bind(); }

void WhatIfService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace qa::service
