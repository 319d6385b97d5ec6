// Parallel query_all against the serial reference and the enumeration
// oracle. Set OMP_NUM_THREADS to vary the worker count.

#include <random>

#include <benchmark/benchmark.h>

#include "qa/assess.hpp"
#include "qa/bayes.hpp"
#include "support.hpp"

using namespace qa;

namespace {

bayes::BayesNet layered(int activities) {
    std::mt19937_64 rng(static_cast<unsigned>(activities));
    return testing::layered_net(rng, activities, activities, activities);
}

bayes::Evidence every_other_measure(int measures) {
    bayes::Evidence ev;
    for (int m = 0; m < measures; m += 2) ev["m" + std::to_string(m)] = 1;
    return ev;
}

void BM_QueryAllParallel(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto net = layered(n);
    const auto ev = every_other_measure(n);
    for (auto _ : state) benchmark::DoNotOptimize(bayes::query_all(net, ev));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(net.size()));
}

void BM_QueryAllSerial(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto net = layered(n);
    const auto ev = every_other_measure(n);
    for (auto _ : state) benchmark::DoNotOptimize(bayes::query_all_serial(net, ev));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(net.size()));
}

void BM_JointEnumerate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto net = layered(n);
    const auto ev = every_other_measure(n);
    for (auto _ : state) {
        for (const auto& node : net.nodes()) benchmark::DoNotOptimize(bayes::joint_enumerate(net, ev, node.id));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(net.size()));
}

void BM_CaseStudyAssessment(benchmark::State& state) {
    for (auto _ : state) {
        auto p = assess::prepare(testing::case_study_bundle("zencart"));
        benchmark::DoNotOptimize(assess::make_report(*p, "t"));
    }
}

}  // namespace

BENCHMARK(BM_QueryAllParallel)->Arg(3)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_QueryAllSerial)->Arg(3)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_JointEnumerate)->Arg(3)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CaseStudyAssessment)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
