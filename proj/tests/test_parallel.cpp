// OpenMP kernels against their serial references, with more threads than cores.

#include <doctest.h>

#include <omp.h>

#include "spm/abc.hpp"
#include "spm/graph.hpp"
#include "spm/model_select.hpp"
#include "spm/nlds.hpp"
#include "spm/stochastic.hpp"

using namespace spm;

namespace {

struct Threads {
    explicit Threads(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
    ~Threads() { omp_set_num_threads(saved); }
    int saved;
};

}  // namespace

TEST_CASE("graph kernels") {
    Threads t(4);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Graph g = barabasi_albert(600, 3, seed);
        CHECK(leading_eigenvalue(g, 1e-10, seed) == reference::leading_eigenvalue(g, 1e-10, seed));
        const auto a = stats(g);
        const auto b = reference::stats(g);
        CHECK(a.diameter == b.diameter);
        CHECK(a.avg_path_length == b.avg_path_length);
        CHECK(a.transitivity == b.transitivity);
        CHECK(a.lambda_a == b.lambda_a);
    }
}

TEST_CASE("nlds step and sweep") {
    Threads t(4);
    const Graph g = erdos_renyi(500, 2500, 4);
    const auto params = NldsParams::from_rates(0.08, 0.5, 0.5, 0.5);
    NldsState a = NldsState::seeded(500, {1, 2, 3});
    NldsState b = a;
    for (int step = 0; step < 20; ++step) {
        a = nlds_step(a, g, params);
        b = reference::nlds_step(b, g, params);
    }
    for (std::size_t i = 0; i < 500; ++i) {
        CHECK(a[i].s == b[i].s);
        CHECK(a[i].i == b[i].i);
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].r == b[i].r);
    }

    SweepConfig cfg;
    cfg.runs = 12;
    cfg.seeds = 5;
    const double lambda = leading_eigenvalue(g, 1e-8);
    const auto par = phase_transition_sweep(g, lambda, {0.5, 1.5}, cfg);
    const auto ser = reference::phase_transition_sweep(g, lambda, {0.5, 1.5}, cfg);
    for (std::size_t k = 0; k < par.size(); ++k) {
        CHECK(par[k].mean_r == ser[k].mean_r);
        CHECK(par[k].q975 == ser[k].q975);
    }
}

TEST_CASE("stochastic ensemble") {
    Threads t(4);
    const auto& spec = ModelSpec::get(ModelKind::SIIDR);
    RateParams p;
    p.beta = 0.7;
    p.mu = 0.1;
    p.gamma1 = 0.2;
    p.gamma2 = 0.3;
    p.dt = 0.2;
    SimConfig cfg;
    cfg.steps = 200;
    cfg.seed = 5;
    cfg.realizations = 9;
    const CompartmentState init({490, 10, 0, 0}, 500);
    const auto avg = simulate_avg(spec, p, init, cfg);
    Threads one(1);
    const auto avg1 = simulate_avg(spec, p, init, cfg);
    CHECK(std::equal(avg.raw().begin(), avg.raw().end(), avg1.raw().begin()));
}

TEST_CASE("grid search and SMC are thread-count invariant") {
    RateParams p;
    p.beta = 0.6;
    p.mu = 0.2;
    p.gamma1 = 0.3;
    p.gamma2 = 0.3;
    p.dt = 0.5;
    const std::vector<long> init{36, 1, 0, 0};
    const auto c = simulate_cumulative(ModelSpec::get(ModelKind::SIIDR), p, init, 60, 8);
    FitTarget target;
    target.observed.assign(c.begin() + 1, c.end());
    target.dt = 0.5;
    target.population = 37;
    const auto grid = GridSpec::parse("beta=4,mu=4,gamma1=3,gamma2=3,sigma=3");
    const std::vector<ModelKind> models(all_models().begin(), all_models().end());

    AbcConfig abc;
    abc.particles = 30;
    abc.generations = 3;
    abc.neighbors = 10;
    abc.n_sims = 2;
    abc.pilot_draws = 100;
    abc.truncation_samples = 200;

    Threads t(4);
    const auto par = select_model(target, models, grid, {5, 3});
    const auto ser = reference::select_model(target, models, grid, {5, 3});
    const auto smc4 = abc_smc_mnn(target, abc);
    omp_set_num_threads(1);
    const auto smc1 = abc_smc_mnn(target, abc);
    CHECK(par.best == ser.best);
    for (std::size_t m = 0; m < models.size(); ++m) CHECK(par.per_model[m].aic == ser.per_model[m].aic);
    for (std::size_t g = 0; g < smc4.size(); ++g) {
        CHECK(smc4[g].epsilon == smc1[g].epsilon);
        for (std::size_t j = 0; j < smc4[g].particles.size(); ++j) {
            CHECK(smc4[g].particles[j].theta == smc1[g].particles[j].theta);
            CHECK(smc4[g].particles[j].weight == smc1[g].particles[j].weight);
        }
    }
}
