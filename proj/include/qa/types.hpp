#pragma once

#include <string_view>

namespace qa {

// Direction of an influence. Negative influences reflect the parent level
// (v -> 1 - v) before it enters a weighted mean.
enum class Polarity { positive, negative };

inline std::string_view polarity_symbol(Polarity p) noexcept {
    return p == Polarity::positive ? "+" : "-";
}

// y = offset + scale * x
struct AffineMap {
    double offset = 0.0;
    double scale = 1.0;

    double operator()(double x) const noexcept { return offset + scale * x; }
    bool operator==(const AffineMap&) const = default;
};

}  // namespace qa
