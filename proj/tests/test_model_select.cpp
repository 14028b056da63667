#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spm/errors.hpp"
#include "spm/model_select.hpp"
#include "spm/stochastic.hpp"

using namespace spm;

TEST_CASE("residuals and AIC") {
    const std::vector<double> sim{1, 2, 3}, real{1, 1, 2};
    CHECK(residuals(sim, real) == std::vector<double>{0, 1, 1});
    CHECK(residuals(sim, sim) == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(residuals(sim, std::vector<double>{1, 2}), InvalidInput);

    const std::vector<double> ones{1, 1, 1, 1};
    CHECK(aic(ones, 2).aic == 4.0);
    CHECK(aic(ones, 3).aic - aic(ones, 2).aic == 2.0);
    const std::vector<double> e{0.5, -1.5, 2.0};
    const double var = (0.25 + 2.25 + 4.0) / 3.0;
    CHECK(aic(e, 4).aic == doctest::Approx(8.0 + 3.0 * std::log(var)));
    CHECK(aic(e, 4).residual_variance == doctest::Approx(var));

    const auto perfect = aic(std::vector<double>{0, 0, 0, 0, 0}, 2);
    CHECK(perfect.perfect_fit);
    CHECK(perfect.aic == doctest::Approx(4.0 + 5.0 * std::log(kSigmaFloor)));
    CHECK_THROWS_AS(aic(std::vector<double>{}, 1), InvalidInput);
}

TEST_CASE("grids") {
    CHECK(equidistant_open_unit(1) == std::vector<double>{0.5});
    const auto g4 = equidistant_open_unit(4);
    CHECK(g4[0] == doctest::Approx(0.2));
    CHECK(g4[3] == doctest::Approx(0.8));
    const auto spec = GridSpec::parse("beta=20,mu=20,gamma1=10,gamma2=10");
    CHECK(spec.points(ModelKind::SIIDR, 0.1).size() == 40000);
    CHECK(spec.points(ModelKind::SI, 0.1).size() == 20);
    CHECK(spec.points(ModelKind::SIR, 0.1).size() == 400);
    CHECK(spec.points(ModelKind::SEIR, 0.1).size() == 4000);
    for (const auto& p : spec.points(ModelKind::SI, 0.1)) {
        CHECK(p.mu == 0.0);
        CHECK(p.dt == 0.1);
    }
    const auto small = GridSpec::parse("beta=2, mu=3");
    const auto pts = small.points(ModelKind::SIR, 1.0);
    REQUIRE(pts.size() == 6);
    // Lexicographic order, last parameter fastest.
    CHECK(pts[0].beta == pts[2].beta);
    CHECK(pts[0].mu < pts[1].mu);
    CHECK(pts[3].beta > pts[2].beta);
    CHECK_THROWS_AS(GridSpec::parse("beta=0"), InvalidInput);
    CHECK_THROWS_AS(GridSpec::parse("delta=3"), InvalidInput);
    CHECK_THROWS_AS(GridSpec::parse("beta"), InvalidInput);
    CHECK(GridSpec::parse(spec.to_string()).to_string() == spec.to_string());
}

namespace {

FitTarget synthetic(ModelKind kind, RateParams p, int steps, std::uint64_t seed) {
    const auto& spec = ModelSpec::get(kind);
    std::vector<long> init(spec.size(), 0);
    init[0] = 99;
    init[*spec.index_of("I")] = 1;
    const auto c = simulate_avg_cumulative(spec, p, init, steps, seed, 10);
    FitTarget t;
    t.observed.assign(c.begin() + 1, c.end());
    t.dt = p.dt;
    t.population = 100;
    t.initial_infected = 1;
    return t;
}

}  // namespace

TEST_CASE("degenerate grid evaluates each model once") {
    RateParams p;
    p.beta = 0.5;
    p.mu = 0.5;
    p.dt = 0.5;
    const auto target = synthetic(ModelKind::SIR, p, 60, 1);
    const auto grid = GridSpec::parse("beta=1,mu=1,gamma1=1,gamma2=1,sigma=1");
    const std::vector<ModelKind> models(all_models().begin(), all_models().end());
    const auto report = select_model(target, models, grid, {10, 1});
    CHECK(report.evaluations == models.size());
    CHECK(report.per_model.size() == models.size());
}

TEST_CASE("selection is exhaustive and deterministic") {
    RateParams p;
    p.beta = 0.6;
    p.mu = 0.2;
    p.dt = 0.5;
    const auto target = synthetic(ModelKind::SIR, p, 80, 5);
    const auto grid = GridSpec::parse("beta=5,mu=5,gamma1=3,gamma2=3,sigma=3");
    const std::vector<ModelKind> models{ModelKind::SIR, ModelKind::SIS, ModelKind::SIIDR};
    const SelectConfig cfg{4, 11};
    const auto a = select_model(target, models, grid, cfg);
    const auto b = select_model(target, models, grid, cfg);
    for (std::size_t m = 0; m < models.size(); ++m) {
        CHECK(a.per_model[m].aic == b.per_model[m].aic);
        for (const auto& pt : grid.points(models[m], target.dt)) {
            CHECK(a.per_model[m].aic <= evaluate_fit(target, models[m], pt, cfg).aic);
        }
    }
    const auto& best = a.best_fit();
    for (const auto& fit : a.per_model) CHECK(best.aic <= fit.aic);
    // Each fit carries the AIC of its own inputs.
    CHECK(best.aic == doctest::Approx(2.0 * ModelSpec::get(best.model).free_param_count +
                                      static_cast<double>(best.n) * std::log(best.residual_variance)));
}

TEST_CASE("ties go to the model with fewer parameters") {
    const FitResult si{ModelKind::SI, {}, -10.0, 0.1, 5, false};
    const FitResult sis{ModelKind::SIS, {}, -10.0, 0.1, 5, false};
    const FitResult sir{ModelKind::SIR, {}, -10.0, 0.1, 5, false};
    CHECK(ranks_before(si, sis));
    CHECK_FALSE(ranks_before(sis, si));
    CHECK(ranks_before(sir, sis));  // equal k: by name
    CHECK(ranks_before({ModelKind::SIIDR, {}, -10.5, 0.1, 5, false}, si));

    // An SI-generated trace is best explained by SI or SIS.
    RateParams p;
    p.beta = 0.5;
    p.dt = 0.2;
    const auto target = synthetic(ModelKind::SI, p, 60, 2);
    const std::vector<ModelKind> models(all_models().begin(), all_models().end());
    const auto report = select_model(target, models, GridSpec::parse("beta=9,mu=9,gamma1=3,gamma2=3,sigma=3"), {10, 2});
    CHECK((report.best_fit().model == ModelKind::SI || report.best_fit().model == ModelKind::SIS));
}

TEST_CASE("selection outputs") {
    SelectionReport r;
    r.per_model = {{ModelKind::SIR, {}, -3.5, 0.1, 10, false}, {ModelKind::SIIDR, {}, -7.25, 0.05, 10, false}};
    r.best = 1;
    std::ostringstream os;
    write_selection_csv(os, r, "trace_a");
    CHECK(os.str() == "trace,model,min_aic\ntrace_a,SIR,-3.5\ntrace_a,SIIDR,-7.25\n");
    const auto j = selection_json(r, "trace_a");
    CHECK(j["best_model"] == "SIIDR");
    CHECK(j["models"][1]["params"].size() == 4);
}
