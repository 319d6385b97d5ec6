#pragma once

// Shared helpers for the test suites, the acceptance binary and the
// benchmarks: fixture loading, random nets and numeric oracles.

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qa/assess.hpp"
#include "qa/bayes.hpp"

namespace qa::testing {

std::string fixture_path(std::string_view name);
std::string read_text(const std::string& path);

// Case-study bundle for "phpshop" or "zencart"; without findings when
// `with_findings` is false.
assess::Bundle case_study_bundle(std::string_view system, bool with_findings = true);

// Random DAG over n nodes (edges only from lower to higher index, at most
// three parents), 2..max_states states each, random normalised NPTs.
bayes::BayesNet random_net(std::mt19937_64& rng, int n, int max_states = 3);

// Random evidence on up to `max_observed` nodes.
bayes::Evidence random_evidence(std::mt19937_64& rng, const bayes::BayesNet& net, int max_observed);

// Layered net shaped like a derived assessment net, for benchmarking.
bayes::BayesNet layered_net(std::mt19937_64& rng, int factors, int activities, int measures);

// Truncated Normal CDF by compound Simpson integration of the density.
double simpson_tnormal_cdf(double x, double mu, double sigma, double lo, double hi, int panels = 10000);

// densityMean of the case study with the given votes overriding the base.
double density_with(const assess::PreparedAssessment& prepared, const bayes::Evidence& evidence);

}  // namespace qa::testing
