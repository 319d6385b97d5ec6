#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qa {

enum class Errc {
    syntax,                 // malformed document
    reference,              // dangling id
    cycle,                  // hierarchy or graph cycle
    invalid,                // value out of range / invariant broken
    dimension,              // NPT shape mismatch
    inconsistent_evidence,  // P(evidence) == 0
    not_found,              // unknown id, adapter, node
    guard,                  // state-space guard exceeded
    io,                     // unreadable file, bind failure
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Re-raise `e` with a "[stage] " prefix, keeping its code.
[[noreturn]] void rethrow_in_stage(std::string_view stage, const Error& e);

}  // namespace qa
