#include <benchmark/benchmark.h>

#include <random>

#include "sbmcov/clustering.hpp"
#include "sbmcov/estimator.hpp"
#include "sbmcov/graph.hpp"
#include "sbmcov/simulate.hpp"
#include "sbmcov/spectral.hpp"

using namespace sbmcov;

namespace {

SbmSpec logit_spec() {
    SbmSpec s;
    s.K = 2;
    s.pi = VectorXd::Constant(2, 0.5);
    s.nu.resize(2, 1);
    s.nu << -1.5, 1.0;
    s.link = Link::logit();
    s.covariates.push_back(CovariateLaw::per_block({0.5, 0.5}));
    s.beta = {1.5};
    return s;
}

void BM_SampleGraph(benchmark::State& state) {
    const SbmSpec spec = logit_spec();
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(sample_graph(spec, static_cast<int>(state.range(0)), seed++));
}
BENCHMARK(BM_SampleGraph)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_TopEigenpairs(benchmark::State& state) {
    const SampledGraph g = sample_graph(logit_spec(), static_cast<int>(state.range(0)), 2);
    const Adjacency adj = g.graph.adjacency();
    const AdjacencyOperator op = regularize_degrees(adj, 0.0);
    EigenOptions o;
    o.method = EigenMethod::Iterative;
    for (auto _ : state) benchmark::DoNotOptimize(top_eigenpairs(op, 8, o));
}
BENCHMARK(BM_TopEigenpairs)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_Gmm(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0)), K = 8, d = 8;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = 4.0 * ((i % K) == j) + gauss(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(x, K));
}
BENCHMARK(BM_Gmm)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0)), K = 8, d = 8;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss;
    MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = 4.0 * ((i % K) == j) + gauss(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(fit_kmeans(x, K));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
    const SampledGraph g = sample_graph(logit_spec(), static_cast<int>(state.range(0)), 5);
    FitOptions o;
    o.K = 2;
    o.covariates = {"z1"};
    o.link = Link::logit();
    o.dim_rule = DimensionRule::Ktilde;
    for (auto _ : state) benchmark::DoNotOptimize(fit(g.graph, o));
}
BENCHMARK(BM_Fit)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
