#pragma once

// JSON-over-HTTP what-if service.
//
//   GET    /api/net           node list (ids, kinds, states, parents, names)
//   GET    /api/posteriors    current posteriors of the caller's session
//   POST   /api/observations  {"node": id, "state": label | null}
//   DELETE /api/observations  drop every override of the session
//   GET    /api/report        base assessment report
//   GET    /                  static web UI
//
// Sessions are keyed by the X-QA-Session header (or ?session=); requests
// without one share the "default" session. Requests on one session are
// serialised; distinct sessions run in parallel over the shared net.

#include <memory>
#include <string>

#include "qa/assess.hpp"

namespace qa::service {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string webui_dir;
};

class WhatIfService {
public:
    WhatIfService(std::shared_ptr<const assess::PreparedAssessment> assessment, ServiceOptions options);
    ~WhatIfService();

    WhatIfService(const WhatIfService&) = delete;
    WhatIfService& operator=(const WhatIfService&) = delete;

    // Binds the socket and returns the bound port. Throws Errc::io.
    int bind();
    // Blocks until stop(); call after bind().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qa::service
