// Serial reference kernels against their OpenMP counterparts. The thread count
// of the parallel variants is the benchmark argument.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "spm/graph.hpp"
#include "spm/model_select.hpp"
#include "spm/models.hpp"
#include "spm/nlds.hpp"
#include "spm/stochastic.hpp"

using namespace spm;

namespace {

const Graph& er_graph() {
    static const Graph g = generate(5000, ErParams{25000}, 11);
    return g;
}

const Graph& stats_graph() {
    static const Graph g = generate(1500, BaParams{3}, 12);
    return g;
}

NldsState half_infected(std::size_t n) {
    std::vector<NodeId> infected;
    for (std::size_t v = 0; v < n; v += 2) infected.push_back(static_cast<NodeId>(v));
    return NldsState::seeded(n, infected);
}

int max_threads() { return omp_get_num_procs(); }

void thread_args(benchmark::internal::Benchmark* b) {
    for (int t = 1; t <= max_threads(); t *= 2) b->Arg(t);
    if ((max_threads() & (max_threads() - 1)) != 0) b->Arg(max_threads());
}

void BM_NldsStepSerial(benchmark::State& state) {
    const auto& g = er_graph();
    const auto x = half_infected(g.node_count());
    const auto p = NldsParams::from_rates(0.05, 0.5, 0.5, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(reference::nlds_step(x, g, p));
}
BENCHMARK(BM_NldsStepSerial);

void BM_NldsStepParallel(benchmark::State& state) {
    omp_set_num_threads(static_cast<int>(state.range(0)));
    const auto& g = er_graph();
    const auto x = half_infected(g.node_count());
    const auto p = NldsParams::from_rates(0.05, 0.5, 0.5, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(nlds_step(x, g, p));
}
BENCHMARK(BM_NldsStepParallel)->Apply(thread_args);

void BM_GraphStatsSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(reference::stats(stats_graph()));
}
BENCHMARK(BM_GraphStatsSerial)->Unit(benchmark::kMillisecond);

void BM_GraphStatsParallel(benchmark::State& state) {
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(stats(stats_graph()));
}
BENCHMARK(BM_GraphStatsParallel)->Apply(thread_args)->Unit(benchmark::kMillisecond);

SweepConfig sweep_config() {
    SweepConfig c;
    c.runs = 20;
    c.seeds = 10;
    c.seed = 3;
    return c;
}

const std::vector<double> kSweepS{0.5, 1.0, 1.5, 2.0};

void BM_SweepSerial(benchmark::State& state) {
    const Graph g = generate(1000, ErParams{5054}, 13);
    const double lambda = leading_eigenvalue(g);
    for (auto _ : state) benchmark::DoNotOptimize(reference::phase_transition_sweep(g, lambda, kSweepS, sweep_config()));
}
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);

void BM_SweepParallel(benchmark::State& state) {
    omp_set_num_threads(static_cast<int>(state.range(0)));
    const Graph g = generate(1000, ErParams{5054}, 13);
    const double lambda = leading_eigenvalue(g);
    for (auto _ : state) benchmark::DoNotOptimize(phase_transition_sweep(g, lambda, kSweepS, sweep_config()));
}
BENCHMARK(BM_SweepParallel)->Apply(thread_args)->Unit(benchmark::kMillisecond);

FitTarget select_target() {
    RateParams p;
    p.beta = 0.4;
    p.mu = 0.1;
    p.gamma1 = 0.2;
    p.gamma2 = 0.2;
    p.dt = 0.5;
    const auto c = simulate_avg_cumulative(ModelSpec::get(ModelKind::SIIDR), p, std::vector<long>{49, 1, 0, 0}, 100,
                                           1, 10);
    FitTarget t;
    t.observed.assign(c.begin() + 1, c.end());
    t.dt = p.dt;
    t.population = 50;
    return t;
}

const GridSpec kSmallGrid = GridSpec::parse("beta=6,mu=6,gamma1=4,gamma2=4,sigma=4");

void BM_SelectSerial(benchmark::State& state) {
    const auto target = select_target();
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference::select_model(target, all_models(), kSmallGrid, {5, 1}));
    }
}
BENCHMARK(BM_SelectSerial)->Unit(benchmark::kMillisecond);

void BM_SelectParallel(benchmark::State& state) {
    omp_set_num_threads(static_cast<int>(state.range(0)));
    const auto target = select_target();
    for (auto _ : state) benchmark::DoNotOptimize(select_model(target, all_models(), kSmallGrid, {5, 1}));
}
BENCHMARK(BM_SelectParallel)->Apply(thread_args)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
