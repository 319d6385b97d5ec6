#include "qa/npt.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "qa/error.hpp"

namespace qa::npt {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// P(a <= Z <= b) for standard normal Z, choosing the tail form that keeps
// precision when both bounds sit far out in the same tail.
double standard_mass(double a, double b) noexcept {
    if (a >= 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
    return 1.0 - 0.5 * std::erfc(-a * kInvSqrt2) - 0.5 * std::erfc(b * kInvSqrt2);
}

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw Error(Errc::invalid, std::string(name) + " must be finite");
}

void require_sigma(double sigma) {
    require_finite(sigma, "sigma");
    if (sigma <= 0.0) throw Error(Errc::invalid, "sigma must be > 0");
}

std::vector<double> ranked_edges(const RankedScale& s) {
    std::vector<double> edges(s.states + 1);
    for (int i = 0; i <= s.states; ++i) edges[i] = s.lower(i);
    edges.back() = 1.0;
    return edges;
}

std::vector<double> numeric_edges(const NumericScale& s) {
    std::vector<double> edges(s.bins + 1);
    for (int j = 0; j < s.bins; ++j) edges[j] = s.lower(j);
    edges.back() = s.hi;
    return edges;
}

std::size_t product(const std::vector<int>& cards) {
    return std::accumulate(cards.begin(), cards.end(), std::size_t{1},
                           [](std::size_t acc, int c) { return acc * static_cast<std::size_t>(c); });
}

}  // namespace

RankedScale RankedScale::make(int states) {
    if (states < 2) throw Error(Errc::invalid, "ranked scale needs at least 2 states");
    RankedScale s;
    s.states = states;
    switch (states) {
        case 2: s.labels = {"low", "high"}; break;
        case 3: s.labels = {"low", "medium", "high"}; break;
        case 5: s.labels = {"very-low", "low", "medium", "high", "very-high"}; break;
        default:
            for (int i = 0; i < states; ++i) s.labels.push_back("level-" + std::to_string(i));
    }
    return s;
}

std::vector<double> RankedScale::midpoints() const {
    std::vector<double> out(states);
    for (int i = 0; i < states; ++i) out[i] = midpoint(i);
    return out;
}

std::vector<double> NumericScale::midpoints() const {
    std::vector<double> out(bins);
    for (int j = 0; j < bins; ++j) out[j] = midpoint(j);
    return out;
}

std::vector<std::string> NumericScale::labels() const {
    std::vector<std::string> out;
    out.reserve(bins);
    char buf[64];
    for (int j = 0; j < bins; ++j) {
        std::snprintf(buf, sizeof buf, "[%.6g, %.6g)", lower(j), upper(j));
        out.emplace_back(buf);
    }
    return out;
}

Npt::Npt(int child_states, std::vector<int> parent_cards)
    : child_states_(child_states), parent_cards_(std::move(parent_cards)), rows_(product(parent_cards_)) {
    table_.assign(rows_ * static_cast<std::size_t>(child_states_), 0.0);
}

Npt::Npt(int child_states, std::vector<int> parent_cards, std::vector<double> table)
    : child_states_(child_states), parent_cards_(std::move(parent_cards)), rows_(product(parent_cards_)),
      table_(std::move(table)) {
    if (table_.size() != rows_ * static_cast<std::size_t>(child_states_)) {
        throw Error(Errc::dimension, "NPT has " + std::to_string(table_.size()) + " entries, expected " +
                                         std::to_string(rows_) + " rows x " + std::to_string(child_states_));
    }
}

std::vector<int> Npt::combo(std::size_t r) const {
    std::vector<int> states(parent_cards_.size());
    for (std::size_t k = parent_cards_.size(); k-- > 0;) {
        states[k] = static_cast<int>(r % parent_cards_[k]);
        r /= parent_cards_[k];
    }
    return states;
}

std::size_t Npt::row_of(std::span<const int> parent_states) const {
    std::size_t r = 0;
    for (std::size_t k = 0; k < parent_cards_.size(); ++k) r = r * parent_cards_[k] + parent_states[k];
    return r;
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z * kInvSqrt2); }

double tnormal_cdf(double x, double mu, double sigma, double lo, double hi) {
    require_finite(x, "x");
    require_finite(mu, "mu");
    require_finite(lo, "lo");
    require_finite(hi, "hi");
    require_sigma(sigma);
    if (!(lo < hi)) throw Error(Errc::invalid, "truncation range must satisfy lo < hi");
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;

    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    const double total = standard_mass(a, b);
    if (total <= 0.0) return mu > hi ? 0.0 : 1.0;  // all mass collapses onto the nearer bound
    return std::min(1.0, standard_mass(a, (x - mu) / sigma) / total);
}

std::vector<double> tnormal_masses(double mu, double sigma, std::span<const double> edges) {
    require_finite(mu, "mu");
    require_sigma(sigma);
    if (edges.size() < 2) throw Error(Errc::invalid, "need at least one bin");

    const std::size_t bins = edges.size() - 1;
    std::vector<double> out(bins);
    double total = 0.0;
    for (std::size_t j = 0; j < bins; ++j) {
        out[j] = standard_mass((edges[j] - mu) / sigma, (edges[j + 1] - mu) / sigma);
        total += out[j];
    }
    if (total <= 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        out[mu >= edges.back() ? bins - 1 : 0] = 1.0;
        return out;
    }
    for (double& p : out) p /= total;
    return out;
}

Npt ranked_npt(std::span<const RankedScale> parents, const RankedScale& child, const WmeanSpec& spec) {
    require_sigma(spec.sigma);
    if (spec.weights.size() != parents.size()) {
        throw Error(Errc::invalid, "wmean needs one weight per parent (" + std::to_string(parents.size()) +
                                       " parents, " + std::to_string(spec.weights.size()) + " weights)");
    }
    if (spec.polarities.size() != parents.size()) {
        throw Error(Errc::invalid, "wmean needs one polarity per parent");
    }
    double weight_sum = 0.0;
    for (double w : spec.weights) {
        if (!(std::isfinite(w) && w > 0.0)) throw Error(Errc::invalid, "wmean weights must be finite and > 0");
        weight_sum += w;
    }

    std::vector<int> cards;
    for (const auto& p : parents) cards.push_back(p.states);
    Npt out(child.states, cards);
    const std::vector<double> edges = ranked_edges(child);

    if (parents.empty()) {
        const auto row = tnormal_masses(spec.prior_mean, spec.sigma, edges);
        std::copy(row.begin(), row.end(), out.row(0).begin());
        return out;
    }

    const auto rows = static_cast<std::ptrdiff_t>(out.row_count());
#pragma omp parallel for schedule(static) if (rows >= 512)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const std::vector<int> combo = out.combo(static_cast<std::size_t>(r));
        double mu = 0.0;
        for (std::size_t k = 0; k < parents.size(); ++k) {
            double v = parents[k].midpoint(combo[k]);
            if (spec.polarities[k] == Polarity::negative) v = 1.0 - v;
            mu += spec.weights[k] * v;
        }
        mu /= weight_sum;
        const auto row = tnormal_masses(mu, spec.sigma, edges);
        std::copy(row.begin(), row.end(), out.row(static_cast<std::size_t>(r)).begin());
    }
    return out;
}

Npt partitioned_npt(const RankedScale& parent, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 0.5)) throw Error(Errc::invalid, "epsilon must lie in (0, 0.5]");
    std::vector<double> p_yes(parent.states);
    const double span = 1.0 - 2.0 * epsilon;
    for (int i = 0; i < parent.states; ++i) {
        p_yes[i] = (1.0 - epsilon) - span * static_cast<double>(i) / (parent.states - 1);
    }
    return partitioned_npt(p_yes);
}

Npt partitioned_npt(std::span<const double> p_yes) {
    if (p_yes.size() < 2) throw Error(Errc::invalid, "partitioned expression needs a ranked parent");
    Npt out(2, {static_cast<int>(p_yes.size())});
    for (std::size_t i = 0; i < p_yes.size(); ++i) {
        if (!(p_yes[i] >= 0.0 && p_yes[i] <= 1.0)) throw Error(Errc::invalid, "P(yes) must lie in [0,1]");
        out.row(i)[0] = 1.0 - p_yes[i];
        out.row(i)[1] = p_yes[i];
    }
    return out;
}

Npt reflect_parent(const Npt& npt) {
    if (npt.parent_cards().size() != 1) throw Error(Errc::invalid, "reflection needs exactly one parent");
    Npt out(npt.child_states(), npt.parent_cards());
    const std::size_t n = npt.row_count();
    for (std::size_t r = 0; r < n; ++r) {
        auto src = npt.row(n - 1 - r);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

Npt arithmetic_npt(const RankedScale& parent, const NumericScale& child, const AffineMap& expr, double sigma) {
    require_sigma(sigma);
    require_finite(child.lo, "lo");
    require_finite(child.hi, "hi");
    if (!(child.lo < child.hi)) throw Error(Errc::invalid, "numeric range must satisfy lo < hi");
    if (child.bins < 2) throw Error(Errc::invalid, "numeric node needs at least 2 bins");

    Npt out(child.bins, {parent.states});
    const std::vector<double> edges = numeric_edges(child);
    for (int i = 0; i < parent.states; ++i) {
        const auto row = tnormal_masses(expr(parent.midpoint(i)), sigma, edges);
        std::copy(row.begin(), row.end(), out.row(i).begin());
    }
    return out;
}

double normalization_error(const Npt& npt) noexcept {
    double worst = 0.0;
    for (std::size_t r = 0; r < npt.row_count(); ++r) {
        double s = 0.0;
        for (double p : npt.row(r)) s += p;
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

}  // namespace qa::npt
