#include "qa/error.hpp"

namespace qa {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::syntax: return "syntax";
        case Errc::reference: return "reference";
        case Errc::cycle: return "cycle";
        case Errc::invalid: return "invalid";
        case Errc::dimension: return "dimension";
        case Errc::inconsistent_evidence: return "inconsistent-evidence";
        case Errc::not_found: return "not-found";
        case Errc::guard: return "guard";
        case Errc::io: return "io";
    }
    return "unknown";
}

void rethrow_in_stage(std::string_view stage, const Error& e) {
    throw Error(e.code(), "[" + std::string(stage) + "] " + e.what());
}

}  // namespace qa
