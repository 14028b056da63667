// Acceptance run: one PASS/FAIL line per criterion, plus INFO lines for the
// statistical invariants measured along the way. Exit status is nonzero if any
// criterion fails.

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spm/abc.hpp"
#include "spm/graph.hpp"
#include "spm/model_select.hpp"
#include "spm/models.hpp"
#include "spm/nlds.hpp"
#include "spm/rng.hpp"
#include "spm/stochastic.hpp"
#include "spm/trace.hpp"
#include "spm/trajectory.hpp"
#include "synthetic.hpp"

using namespace spm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<std::string> info_lines;

// ---------------------------------------------------------------- 1

Outcome r0_formula() {
    RateParams p;
    p.beta = 0.2;
    p.mu = 0.1;
    p.gamma1 = 0.3;
    p.gamma2 = 0.2;
    const double r = r0(p, 1.0);
    const double rho = spectral_radius(next_generation_matrix(p));

    // Independent F V^-1: only I transmits; V holds the I <-> I_D flows and recovery.
    Eigen::Matrix2d F;
    F << p.beta, 0.0, 0.0, 0.0;
    Eigen::Matrix2d V;
    V << p.mu + p.gamma1, -p.gamma2, -p.gamma1, p.gamma2;
    const Eigen::Matrix2d K = F * V.inverse();
    const double oracle = Eigen::EigenSolver<Eigen::Matrix2d>(K).eigenvalues().cwiseAbs().maxCoeff();

    const bool pass = r == 2.0 && std::abs(rho - 2.0) <= 1e-12 && std::abs(oracle - 2.0) <= 1e-12;
    return {pass, fmt("r0=%.17g rho(NGM)=%.17g rho(FV^-1 oracle)=%.17g", r, rho, oracle)};
}

// ---------------------------------------------------------------- 2

Outcome lyapunov_monotone() {
    const ModelSpec& spec = ModelSpec::get(ModelKind::SIIDR);
    const std::size_t iI = *spec.index_of("I");
    const std::size_t iD = *spec.index_of("I_D");
    Engine e = make_engine(2024, 2);
    int ok = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100; ++k) {
        RateParams p;
        p.mu = 0.01 + 0.99 * uniform01(e);
        p.beta = p.mu * uniform01(e);  // beta <= mu
        p.gamma1 = uniform01(e);
        p.gamma2 = uniform01(e);
        p.dt = 0.1;
        const double n = 1000.0;
        const double infected = 1.0 + std::floor(200.0 * uniform01(e));
        const auto traj = integrate_ode(spec, p, CompartmentState::seeded(spec, n, infected), 2000);
        bool mono = true;
        for (std::size_t t = 1; t < traj.size(); ++t) {
            const double step = (traj.at(t, iI) + traj.at(t, iD)) - (traj.at(t - 1, iI) + traj.at(t - 1, iD));
            worst = std::max(worst, step);
            mono = mono && step <= 1e-9;
        }
        ok += mono;
    }
    return {ok == 100, fmt("%d/100 parameter sets nonincreasing; largest step change %.3g", ok, worst)};
}

// ---------------------------------------------------------------- 3

Outcome stochastic_vs_ode() {
    const ModelSpec& spec = ModelSpec::get(ModelKind::SIIDR);
    RateParams p;
    p.beta = 0.5;
    p.mu = 0.1;
    p.gamma1 = 0.2;
    p.gamma2 = 0.3;
    p.dt = 0.1;
    const auto init = CompartmentState::seeded(spec, 10000.0, 50.0);
    const int steps = 1500;
    const std::size_t iI = *spec.index_of("I");
    const auto ode = integrate_ode(spec, p, init, steps);
    SimConfig cfg;
    cfg.steps = steps;
    cfg.seed = 33;
    cfg.realizations = 200;
    const auto avg = simulate_avg(spec, p, init, cfg);
    double ode_peak = 0.0;
    double sim_peak = 0.0;
    for (std::size_t t = 0; t < ode.size(); ++t) {
        ode_peak = std::max(ode_peak, ode.at(t, iI));
        sim_peak = std::max(sim_peak, avg.at(t, iI));
    }
    const double rel = std::abs(sim_peak - ode_peak) / ode_peak;
    return {rel <= 0.05, fmt("ODE peak I %.1f, mean of 200 realizations %.1f, relative error %.4f", ode_peak,
                             sim_peak, rel)};
}

// ---------------------------------------------------------------- 4

NldsParams random_nlds_params(Engine& e) {
    return NldsParams::from_rates(uniform01(e), 2.0 * uniform01(e), 2.0 * uniform01(e), 2.0 * uniform01(e));
}

Graph random_graph(Engine& e, std::size_t n_min, std::size_t n_max) {
    const std::size_t n = n_min + static_cast<std::size_t>(uniform01(e) * static_cast<double>(n_max - n_min + 1));
    const std::size_t pairs = n * (n - 1) / 2;
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(uniform01(e) * static_cast<double>(pairs) / 3));
    return generate(n, ErParams{m}, e());
}

Outcome nlds_normalization() {
    Engine e = make_engine(4, 4);
    double worst = 0.0;
    int steps = 0;
    bool fixed = true;
    for (int gi = 0; gi < 10; ++gi) {
        const Graph g = random_graph(e, 2, 100);
        const std::size_t n = g.node_count();
        std::vector<NodeProbabilities> nodes(n);
        for (auto& p : nodes) {
            const double a = uniform01(e), b = uniform01(e), c = uniform01(e), d = uniform01(e);
            const double s = a + b + c + d;
            p = {a / s, b / s, c / s, d / s};
        }
        // Renormalize against rounding in the division above.
        for (auto& p : nodes) p.r = 1.0 - p.s - p.i - p.id;
        NldsState state(nodes);
        const NldsParams params = random_nlds_params(e);
        for (int t = 0; t < 100; ++t, ++steps) {
            state = nlds_step(state, g, params);
            for (std::size_t v = 0; v < n; ++v) {
                const auto& q = state[v];
                worst = std::max(worst, std::abs(q.s + q.i + q.id + q.r - 1.0));
            }
        }

        std::vector<NodeProbabilities> clean(n);
        for (auto& p : clean) {
            p.s = uniform01(e);
            p.r = 1.0 - p.s;
        }
        const NldsState eq(clean);
        const NldsState next = nlds_step(eq, g, params);
        for (std::size_t v = 0; v < n; ++v) {
            const auto& a = eq[v];
            const auto& b = next[v];
            fixed = fixed && a.s == b.s && a.i == b.i && a.id == b.id && a.r == b.r;
        }
    }
    return {worst <= 1e-12 && fixed,
            fmt("%d steps, max |sum - 1| = %.3g; infection-free states exactly fixed: %s", steps, worst,
                fixed ? "yes" : "no")};
}

// ---------------------------------------------------------------- 5

Outcome jacobian_unit_eigenvalue() {
    Engine e = make_engine(5, 5);
    int ok = 0;
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Graph g = random_graph(e, 5, 50);
        const auto report = jacobian(g, random_nlds_params(e), 1.0);
        const Eigen::MatrixXd& J = report.matrix;
        // Independent spectrum, plus the exact eigenvector e_S0 of eigenvalue 1.
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(J, false).eigenvalues();
        double dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < ev.size(); ++i) dist = std::min(dist, std::abs(ev[i] - 1.0));
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(J.rows());
        unit[0] = 1.0;
        const double residual = (J * unit - unit).cwiseAbs().maxCoeff();
        worst = std::max({worst, dist, residual});
        ok += dist <= 1e-8 && residual <= 1e-8 && report.has_unit_eigenvalue;
    }
    return {ok == 20, fmt("%d/20 graphs with an eigenvalue within 1e-8 of 1 (worst distance %.3g)", ok, worst)};
}

// ---------------------------------------------------------------- 6

Outcome phase_transition() {
    const Graph g = generate(1000, ErParams{5054}, 6);
    SweepConfig cfg;
    cfg.mu = cfg.gamma1 = cfg.gamma2 = 0.5;
    cfg.runs = 100;
    cfg.seeds = 50;
    cfg.init = {InitialInfection::Kind::Count, 1.0};
    cfg.seed = 6;
    std::vector<double> s;
    for (int i = 1; i <= 8; ++i) s.push_back(0.25 * i);
    const auto rows = phase_transition_sweep(g, s, cfg);
    auto at = [&](double v) {
        for (const auto& r : rows) {
            if (std::abs(r.s - v) < 1e-12) return r.mean_r;
        }
        return std::nan("");
    };
    const double low = at(0.5);
    const double high = at(1.5);
    double first = std::nan("");
    for (const auto& r : rows) {
        if (r.mean_r > 0.05) {
            first = r.s;
            break;
        }
    }
    std::ostringstream curve;
    for (const auto& r : rows) curve << ' ' << r.s << ':' << fmt("%.4f", r.mean_r);
    const bool a = low < 0.02;
    const bool b = high >= 5.0 * low;
    const bool c = first >= 0.8 && first <= 1.3;
    return {a && b && c, fmt("R(0.5)=%.4f [<0.02 %s], R(1.5)=%.4f [>=5x %s], first s with R>5%%: %.2f [in 0.8..1.3 %s]; "
                             "curve",
                             low, a ? "ok" : "no", high, b ? "ok" : "no", first, c ? "ok" : "no") +
                             curve.str()};
}

// ---------------------------------------------------------------- 7

Outcome eigen_desk_checks() {
    Engine e = make_engine(7, 7);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Graph g = random_graph(e, 2, 50);
        const std::size_t n = g.node_count();
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (const auto& edge : g.edges()) {
            A(edge.u, edge.v) = 1.0;
            A(edge.v, edge.u) = 1.0;
        }
        const double dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().maxCoeff();
        worst = std::max(worst, std::abs(leading_eigenvalue(g) - dense));
    }
    const double er = leading_eigenvalue(generate(1000, ErParams{5054}, 7));
    const bool pass = worst <= 1e-6 && std::abs(er - 11.0) <= 0.15 * 11.0;
    return {pass, fmt("max |power - dense| over 50 graphs = %.3g; ER(1000, 5054) lambda_A = %.4f", worst, er)};
}

// ---------------------------------------------------------------- 8

Outcome qcod_checks() {
    Engine e = make_engine(8, 8);
    std::exponential_distribution<double> expo(1.0 / 37.0);
    std::vector<double> x(100000);
    for (auto& v : x) v = expo(e);
    const double q = qcod(x);
    const double q_const = qcod(std::vector<double>(50, 3.5));
    const double ref = qcod_exponential_reference();
    return {std::abs(q - 0.656) <= 0.02 && q_const == 0.0,
            fmt("exponential sample %.4f (analytic %.4f), constant gaps %.3g", q, ref, q_const)};
}

// ---------------------------------------------------------------- 9

Outcome aic_values() {
    const std::vector<double> ones{1, 1, 1, 1};
    const double base = aic(ones, 2).aic;
    const std::vector<double> r{0.3, -1.2, 2.5, 0.7, -0.1};
    bool plus_two = true;
    for (int k = 1; k < 6; ++k) plus_two = plus_two && std::abs(aic(r, k + 1).aic - aic(r, k).aic - 2.0) < 1e-12;
    return {base == 4.0 && plus_two, fmt("AIC([1,1,1,1], k=2) = %.17g; +2 per parameter: %s", base,
                                         plus_two ? "yes" : "no")};
}

// ---------------------------------------------------------------- 10, 11

Outcome model_selection_recovery() {
    const std::vector<ModelKind> models(all_models().begin(), all_models().end());
    int siidr = 0;
    std::ostringstream picks;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto target = testing::synthetic_siidr_target(seed);
        const auto report = select_model(target, models, GridSpec{}, {10, seed});
        const auto best = report.best_fit().model;
        siidr += best == ModelKind::SIIDR;
        picks << ' ' << to_string(best);
    }
    return {siidr >= 8, fmt("SIIDR selected in %d/10 traces; picks:", siidr) + picks.str()};
}

Outcome abc_recovery() {
    const auto truth = testing::SyntheticSpec{}.rates;
    const Theta theta_true{truth.beta, truth.mu, truth.gamma1, truth.gamma2};
    AbcConfig cfg;  // N = 500, G = 8, M = 50, 10 simulations per proposal
    int good = 0;
    int eps_ok = 0;
    int contracted = 0;
    std::ostringstream betas;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        cfg.seed = seed;
        const auto history = abc_smc_mnn(testing::synthetic_siidr_target(seed), cfg);
        const auto first = posterior_summary(history.front());
        const auto last = posterior_summary(history.back());
        int covered = 0;
        for (int k = 0; k < 4; ++k) covered += last.q025[k] <= theta_true[k] && theta_true[k] <= last.q975[k];
        const bool beta_close = std::abs(last.mean[0] - truth.beta) <= 0.10;
        good += beta_close && covered >= 3;
        betas << fmt(" %.3f/%d", last.mean[0], covered);

        const double bound = history.front().epsilon * std::pow(cfg.tolerance_quantile, cfg.generations - 1);
        eps_ok += history.back().epsilon <= bound;
        bool all = true;
        for (int k = 0; k < 4; ++k) all = all && last.std[k] <= first.std[k];
        contracted += all;
    }
    info_lines.push_back(fmt("tolerance schedule final <= initial * 0.5^(G-1) in %d/10 runs", eps_ok));
    info_lines.push_back(fmt("posterior std of all four rates contracted from generation 0 in %d/10 runs (need 8)",
                             contracted));
    return {good >= 7, fmt("%d/10 seeds with |mean beta - 0.16| <= 0.10 and >= 3 of 4 rates in the 95%% interval; "
                           "per seed mean beta/covered:",
                           good) +
                           betas.str()};
}

// ---------------------------------------------------------------- 12

Outcome trace_rules() {
    std::istringstream log("ts,src_ip,dst_ip,dst_port\n"
                           "0,10.0.0.1,10.0.0.2,445\n"
                           "5,10.0.0.2,10.0.0.3,445\n"
                           "7,10.0.0.1,10.0.0.3,80\n");
    const auto parsed = parse_log(log, {LogFormat::CsvMinimal, true});
    const auto trace = reconstruct(parsed.records);
    const bool curve = trace.curve.size() == 2 && trace.curve[0].t == 0.0 && trace.curve[0].infected == 1 &&
                       trace.curve[1].t == 5.0 && trace.curve[1].infected == 2;
    const auto cut = truncate_plateau(trace);
    const bool pass = curve && trace.t_end == 7.0 && cut.duration() == 5.0 && cut.t_end == cut.last_infection();
    return {pass, fmt("curve %s, t_end %.3g, truncated duration %.3g", curve ? "[(0,1),(5,2)]" : "mismatch",
                      trace.t_end, cut.duration())};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "R0 formula and next-generation matrix", 1, r0_formula},
        {2, "Lyapunov monotonicity for beta <= mu", 10, lyapunov_monotone},
        {3, "stochastic mean matches ODE peak", 60, stochastic_vs_ode},
        {4, "NLDS normalization and fixed point", 30, nlds_normalization},
        {5, "Jacobian eigenvalue 1", 30, jacobian_unit_eigenvalue},
        {6, "spectral threshold phase transition", 300, phase_transition},
        {7, "leading eigenvalue desk checks", 60, eigen_desk_checks},
        {8, "QCoD reference values", 5, qcod_checks},
        {9, "AIC unit values", 1, aic_values},
        {10, "model-selection recovery of SIIDR", 600, model_selection_recovery},
        {11, "ABC-SMC-MNN rate recovery", 1800, abc_recovery},
        {12, "trace reconstruction rules", 1, trace_rules},
    };
    std::printf("threads: %d\n", omp_get_max_threads());
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& ex) {
            out = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = out.pass && in_time;
        failed += !pass;
        std::printf("%s [%d] %s: %s (%.1fs of %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(),
                    secs, c.budget_s, in_time ? "" : ", over budget");
        for (const auto& line : info_lines) std::printf("INFO [%d] %s\n", c.id, line.c_str());
        info_lines.clear();
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
