#include "spm/nlds.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <string>
#include <ostream>

#include "nlds_internal.hpp"
#include "parallel.hpp"
#include "spm/errors.hpp"
#include "spm/rng.hpp"
#include "spm/statistics.hpp"
#include "spm/stochastic.hpp"

namespace spm {

namespace {

constexpr double kProbabilitySlack = 1e-12;

void require_probability(double p, const char* name) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw InvalidInput(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

void NldsParams::validate() const {
    require_probability(beta_tilde, "beta_tilde");
    require_probability(alpha_ii, "alpha_ii");
    require_probability(alpha_iid, "alpha_iid");
    require_probability(alpha_idi, "alpha_idi");
    require_probability(alpha_idid, "alpha_idid");
    if (alpha_ii + alpha_iid > 1.0 + kProbabilitySlack) throw InvalidInput("alpha_ii + alpha_iid must be <= 1");
    if (alpha_idi + alpha_idid > 1.0 + kProbabilitySlack) throw InvalidInput("alpha_idi + alpha_idid must be <= 1");
}

NldsParams NldsParams::from_rates(double beta_tilde, double mu, double gamma1, double gamma2) {
    if (mu < 0.0 || gamma1 < 0.0 || gamma2 < 0.0) throw InvalidInput("rates must be >= 0");
    const CompetingExits from_i = competing_risks(mu, gamma1, 1.0);
    NldsParams p;
    p.beta_tilde = beta_tilde;
    p.alpha_iid = from_i.second;
    p.alpha_ii = std::exp(-(mu + gamma1));
    p.alpha_idi = transition_probability(gamma2, 1.0);
    p.alpha_idid = std::exp(-gamma2);
    p.validate();
    return p;
}

NldsState::NldsState(std::vector<NodeProbabilities> nodes) : nodes_(std::move(nodes)) {
    for (const auto& p : nodes_) {
        for (double v : {p.s, p.i, p.id, p.r}) {
            if (!(v >= -kProbabilitySlack && v <= 1.0 + kProbabilitySlack)) {
                throw InvalidInput("node probabilities must lie in [0, 1]");
            }
        }
        if (std::abs(p.s + p.i + p.id + p.r - 1.0) > 1e-9) throw InvalidInput("node probabilities must sum to 1");
    }
}

NldsState NldsState::seeded(std::size_t n, const std::vector<NodeId>& infected) {
    std::vector<NodeProbabilities> nodes(n);
    for (NodeId u : infected) {
        if (u >= n) throw InvalidInput("infected node outside graph");
        nodes[u] = {0.0, 1.0, 0.0, 0.0};
    }
    return NldsState(std::move(nodes));
}

double NldsState::normalization_error() const noexcept {
    double worst = 0.0;
    for (const auto& p : nodes_) worst = std::max(worst, std::abs(p.s + p.i + p.id + p.r - 1.0));
    return worst;
}

double zeta(const NldsState& state, const Graph& graph, double beta_tilde, NodeId node) {
    if (node >= state.size() || state.size() != graph.node_count()) throw InvalidInput("node outside graph");
    return detail::zeta_of(state, graph, beta_tilde, node);
}

NldsState nlds_step(const NldsState& state, const Graph& graph, const NldsParams& params) {
    if (state.size() != graph.node_count()) throw InvalidInput("state size does not match graph");
    std::vector<NodeProbabilities> next(state.size());
    const auto n = static_cast<std::int64_t>(next.size());
    // Reads come only from `state`, writes only to `next`.
#pragma omp parallel for schedule(static)
    for (std::int64_t u = 0; u < n; ++u) {
        next[static_cast<std::size_t>(u)] = detail::update_node(state, graph, params, static_cast<NodeId>(u));
    }
    return NldsState(std::move(next));
}

NldsTotals totals(const NldsState& state) {
    NldsTotals t;
    for (const auto& p : state.nodes()) {
        t.s += p.s;
        t.i += p.i;
        t.id += p.id;
        t.r += p.r;
    }
    return t;
}

NldsRun nlds_run(const NldsState& initial, const Graph& graph, const NldsParams& params, int steps,
                 double lyapunov_tolerance) {
    if (steps < 0) throw InvalidInput("steps must be >= 0");
    params.validate();
    NldsRun run;
    run.states.reserve(static_cast<std::size_t>(steps) + 1);
    run.states.push_back(initial);
    run.totals.push_back(totals(initial));
    for (int t = 0; t < steps; ++t) {
        run.states.push_back(nlds_step(run.states.back(), graph, params));
        run.totals.push_back(totals(run.states.back()));
        const auto& prev = run.totals[run.totals.size() - 2];
        if (run.totals.back().lyapunov() > prev.lyapunov() + lyapunov_tolerance) run.lyapunov_nonincreasing = false;
    }
    return run;
}

ThresholdReport stability_threshold(double lambda_a, double beta_tilde, double mu) {
    if (!(mu > 0.0)) throw InvalidInput("stability threshold needs mu > 0");
    ThresholdReport r;
    r.lambda_a = lambda_a;
    r.s = lambda_a * beta_tilde / mu;
    r.stable = r.s <= 1.0;
    return r;
}

ThresholdReport stability_threshold(const Graph& graph, double beta_tilde, double mu, double eigen_tol) {
    if (!(mu > 0.0)) throw InvalidInput("stability threshold needs mu > 0");
    return stability_threshold(leading_eigenvalue(graph, eigen_tol), beta_tilde, mu);
}

JacobianReport jacobian(const Graph& graph, const NldsParams& params, double x_s, double unit_tolerance) {
    const std::size_t n = graph.node_count();
    if (n > kJacobianMaxNodes) {
        throw InvalidInput("jacobian is limited to " + std::to_string(kJacobianMaxNodes) + " nodes");
    }
    if (n == 0) throw InvalidInput("jacobian of an empty graph");
    params.validate();
    const auto N = static_cast<Eigen::Index>(n);
    JacobianReport report;
    Eigen::MatrixXd& J = report.matrix;
    J.setZero(3 * N, 3 * N);
    const double coupling = x_s * params.beta_tilde;
    for (Eigen::Index u = 0; u < N; ++u) {
        J(u, u) = 1.0;                                 // dS'/dS
        J(N + u, N + u) = params.alpha_ii;             // dI'/dI
        J(N + u, 2 * N + u) = params.alpha_idi;        // dI'/dI_D
        J(2 * N + u, N + u) = params.alpha_iid;        // dI_D'/dI
        J(2 * N + u, 2 * N + u) = params.alpha_idid;   // dI_D'/dI_D
    }
    for (const Edge& e : graph.edges()) {
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        J(u, N + v) = -coupling;
        J(v, N + u) = -coupling;
        J(N + u, N + v) += coupling;
        J(N + v, N + u) += coupling;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(J, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
    const auto& ev = solver.eigenvalues();
    report.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    report.distance_to_one = std::numeric_limits<double>::infinity();
    for (const auto& l : report.eigenvalues) {
        report.distance_to_one = std::min(report.distance_to_one, std::abs(l - 1.0));
    }
    report.has_unit_eigenvalue = report.distance_to_one <= unit_tolerance;
    return report;
}

AgentRun agent_simulate(const Graph& graph, const NldsParams& params, const std::vector<NodeId>& initially_infected,
                        int steps, std::uint64_t seed, bool stop_when_extinct) {
    if (initially_infected.empty()) throw InvalidInput("at least one initially infected node is required");
    if (steps < 0) throw InvalidInput("steps must be >= 0");
    params.validate();
    const std::size_t n = graph.node_count();
    std::vector<AgentLabel> label(n, AgentLabel::S);
    for (NodeId u : initially_infected) {
        if (u >= n) throw InvalidInput("infected node outside graph");
        label[u] = AgentLabel::I;
    }
    Engine engine = make_engine(seed);
    const double escape = 1.0 - params.beta_tilde;
    const double p_recover = params.mu();
    const double p_dormant = params.alpha_iid;
    const double p_wake = params.alpha_idi;
    const double p_leak = 1.0 - params.alpha_idi - params.alpha_idid;

    auto count = [&] {
        std::array<std::size_t, 4> c{};
        for (AgentLabel l : label) ++c[static_cast<std::size_t>(l)];
        return c;
    };
    AgentRun run;
    run.counts.push_back(count());
    std::vector<AgentLabel> next(n);
    for (int t = 0; t < steps; ++t) {
        const auto& c = run.counts.back();
        if (stop_when_extinct && c[1] == 0 && c[2] == 0) break;
        for (std::size_t u = 0; u < n; ++u) {
            switch (label[u]) {
                case AgentLabel::S: {
                    int infected_neighbors = 0;
                    for (NodeId v : graph.neighbors(static_cast<NodeId>(u)))
                        infected_neighbors += label[v] == AgentLabel::I;
                    next[u] = AgentLabel::S;
                    if (infected_neighbors > 0) {
                        const double p = 1.0 - std::pow(escape, infected_neighbors);
                        if (uniform01(engine) < p) next[u] = AgentLabel::I;
                    }
                    break;
                }
                case AgentLabel::I: {
                    const double x = uniform01(engine);
                    next[u] = x < p_recover               ? AgentLabel::R
                              : x < p_recover + p_dormant ? AgentLabel::ID
                                                          : AgentLabel::I;
                    break;
                }
                case AgentLabel::ID: {
                    const double x = uniform01(engine);
                    next[u] = x < p_wake ? AgentLabel::I : x < p_wake + p_leak ? AgentLabel::R : AgentLabel::ID;
                    break;
                }
                case AgentLabel::R: next[u] = AgentLabel::R; break;
            }
        }
        label.swap(next);
        run.counts.push_back(count());
    }
    return run;
}

std::size_t InitialInfection::nodes(std::size_t n) const {
    if (!(value > 0.0)) throw InvalidInput("initial infection must be > 0");
    std::size_t k = kind == Kind::Count ? static_cast<std::size_t>(std::llround(value))
                                        : static_cast<std::size_t>(std::llround(value * static_cast<double>(n)));
    k = std::max<std::size_t>(k, 1);
    if (k > n) throw InvalidInput("more initially infected nodes than graph nodes");
    return k;
}

std::vector<NodeId> choose_initial_nodes(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count > n) throw InvalidInput("more initially infected nodes than graph nodes");
    Engine engine = make_engine(seed, 0x1417);
    std::vector<NodeId> all(n);
    for (NodeId u = 0; u < n; ++u) all[u] = u;
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(all[i], all[pick(engine)]);
    }
    all.resize(count);
    return all;
}

namespace {

std::vector<SweepRow> sweep_impl(const Graph& graph, double lambda_a, const std::vector<double>& s_values,
                                 const SweepConfig& config, bool parallel) {
    if (config.runs < 1) throw InvalidInput("runs must be >= 1");
    if (config.seeds < 1) throw InvalidInput("seeds must be >= 1");
    if (!(lambda_a > 0.0)) throw InvalidInput("graph has no edges; threshold undefined");
    const std::size_t n = graph.node_count();
    const std::size_t init_count = config.init.nodes(n);
    const NldsParams base = NldsParams::from_rates(0.0, config.mu, config.gamma1, config.gamma2);
    const double mu_step = base.mu();

    std::vector<std::vector<NodeId>> starts(static_cast<std::size_t>(config.seeds));
    for (int k = 0; k < config.seeds; ++k) {
        starts[static_cast<std::size_t>(k)] =
            choose_initial_nodes(n, init_count, derive_seed(config.seed, 0x1000000ULL + static_cast<std::uint64_t>(k)));
    }

    std::vector<SweepRow> rows;
    rows.reserve(s_values.size());
    for (std::size_t j = 0; j < s_values.size(); ++j) {
        const double s = s_values[j];
        if (s < 0.0) throw InvalidInput("s values must be >= 0");
        NldsParams params = base;
        params.beta_tilde = s * mu_step / lambda_a;
        if (params.beta_tilde > 1.0) throw InvalidInput("s too large: beta_tilde exceeds 1");
        std::vector<double> fractions(static_cast<std::size_t>(config.runs));
        auto one = [&](int r) {
            const auto& start = starts[static_cast<std::size_t>(r % config.seeds)];
            const std::uint64_t run_seed = derive_seed(derive_seed(config.seed, j), static_cast<std::uint64_t>(r));
            const AgentRun run = agent_simulate(graph, params, start, config.max_steps, run_seed, true);
            fractions[static_cast<std::size_t>(r)] = static_cast<double>(run.final_recovered()) / static_cast<double>(n);
        };
        if (parallel) {
            detail::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
            for (int r = 0; r < config.runs; ++r) slot.run([&] { one(r); });
            slot.rethrow();
        } else {
            for (int r = 0; r < config.runs; ++r) one(r);
        }
        SweepRow row;
        row.s = s;
        row.beta_tilde = params.beta_tilde;
        row.mean_r = mean(fractions);
        std::sort(fractions.begin(), fractions.end());
        row.q25 = quantile_sorted(fractions, 0.25);
        row.q75 = quantile_sorted(fractions, 0.75);
        row.q025 = quantile_sorted(fractions, 0.025);
        row.q975 = quantile_sorted(fractions, 0.975);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

std::vector<SweepRow> phase_transition_sweep(const Graph& graph, double lambda_a, const std::vector<double>& s_values,
                                             const SweepConfig& config) {
    return sweep_impl(graph, lambda_a, s_values, config, true);
}

std::vector<SweepRow> phase_transition_sweep(const Graph& graph, const std::vector<double>& s_values,
                                             const SweepConfig& config) {
    return sweep_impl(graph, leading_eigenvalue(graph, config.eigen_tol), s_values, config, true);
}

namespace reference {

std::vector<SweepRow> phase_transition_sweep(const Graph& graph, double lambda_a, const std::vector<double>& s_values,
                                             const SweepConfig& config) {
    return sweep_impl(graph, lambda_a, s_values, config, false);
}

}  // namespace reference

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    const auto precision = out.precision(10);
    out << "s,mean_R,q25,q75,q025,q975\n";
    for (const auto& r : rows) {
        out << r.s << ',' << r.mean_r << ',' << r.q25 << ',' << r.q75 << ',' << r.q025 << ',' << r.q975 << '\n';
    }
    out.precision(precision);
}

}  // namespace spm
