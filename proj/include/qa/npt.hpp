#pragma once

// Node probability table generation for ranked nodes (weighted mean through a
// doubly truncated Normal), measure nodes (partitioned expressions) and
// discretised numeric nodes (arithmetic expressions).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qa/types.hpp"

namespace qa::npt {

// Ordinal scale mapped onto [0,1] in k equal-width intervals.
struct RankedScale {
    int states = 3;
    std::vector<std::string> labels;

    static RankedScale make(int states);

    double lower(int i) const noexcept { return static_cast<double>(i) / states; }
    double upper(int i) const noexcept { return static_cast<double>(i + 1) / states; }
    double midpoint(int i) const noexcept { return (i + 0.5) / states; }
    std::vector<double> midpoints() const;
};

// Equal-width bins over [lo, hi].
struct NumericScale {
    double lo = 0.0;
    double hi = 1.0;
    int bins = 2;

    double width() const noexcept { return (hi - lo) / bins; }
    double lower(int j) const noexcept { return lo + j * width(); }
    double upper(int j) const noexcept { return j + 1 == bins ? hi : lo + (j + 1) * width(); }
    double midpoint(int j) const noexcept { return lo + (j + 0.5) * width(); }
    std::vector<double> midpoints() const;
    std::vector<std::string> labels() const;
};

// Conditional table P(child | parents). Rows are parent-state combinations in
// mixed-radix order with the first parent most significant; an empty
// parent list has exactly one (prior) row.
class Npt {
public:
    Npt() = default;
    Npt(int child_states, std::vector<int> parent_cards);
    Npt(int child_states, std::vector<int> parent_cards, std::vector<double> table);

    int child_states() const noexcept { return child_states_; }
    const std::vector<int>& parent_cards() const noexcept { return parent_cards_; }
    std::size_t row_count() const noexcept { return rows_; }

    std::span<double> row(std::size_t r) { return {table_.data() + r * child_states_, static_cast<std::size_t>(child_states_)}; }
    std::span<const double> row(std::size_t r) const {
        return {table_.data() + r * child_states_, static_cast<std::size_t>(child_states_)};
    }
    double at(std::size_t r, int state) const { return table_[r * child_states_ + state]; }

    // Parent state tuple of row r.
    std::vector<int> combo(std::size_t r) const;
    // Row index of a parent state tuple.
    std::size_t row_of(std::span<const int> parent_states) const;

    const std::vector<double>& table() const noexcept { return table_; }

    bool operator==(const Npt&) const = default;

private:
    int child_states_ = 0;
    std::vector<int> parent_cards_;
    std::size_t rows_ = 0;
    std::vector<double> table_;
};

struct WmeanSpec {
    std::vector<double> weights;
    std::vector<Polarity> polarities;
    double sigma = 0.2;
    double prior_mean = 0.5;  // used when there are no parents
};

// Standard normal CDF via erfc.
double normal_cdf(double z) noexcept;

// CDF of Normal(mu, sigma^2) doubly truncated to [lo, hi].
// Throws Errc::invalid on non-finite input, sigma <= 0 or lo >= hi.
double tnormal_cdf(double x, double mu, double sigma, double lo = 0.0, double hi = 1.0);

// Probability mass of the truncated Normal inside each of `bins` given
// by consecutive edges; edges must span [lo, hi].
std::vector<double> tnormal_masses(double mu, double sigma, std::span<const double> edges);

Npt ranked_npt(std::span<const RankedScale> parents, const RankedScale& child, const WmeanSpec& spec);

// Child states {no, yes}; P(yes) interpolates linearly from 1 - epsilon at
// the lowest parent state to epsilon at the highest.
Npt partitioned_npt(const RankedScale& parent, double epsilon);

// Child states {no, yes} from an explicit P(yes) per parent state.
Npt partitioned_npt(std::span<const double> p_yes);

// Reverse the parent-state order of a single-parent table.
Npt reflect_parent(const Npt& npt);

Npt arithmetic_npt(const RankedScale& parent, const NumericScale& child, const AffineMap& expr, double sigma);

// Max absolute deviation of any row sum from 1.
double normalization_error(const Npt& npt) noexcept;

}  // namespace qa::npt
