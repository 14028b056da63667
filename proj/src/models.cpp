#include "spm/models.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

#include "spm/errors.hpp"
#include "spm/trajectory.hpp"

namespace spm {

namespace {

const std::array<ModelKind, 5> kAllModels{ModelKind::SI, ModelKind::SIS, ModelKind::SIR, ModelKind::SEIR,
                                          ModelKind::SIIDR};

const std::array<ModelSpec, 5>& registry() {
    static const std::array<ModelSpec, 5> specs{{
        {ModelKind::SI, "SI", {"S", "I"}, 1},
        {ModelKind::SIS, "SIS", {"S", "I"}, 2},
        {ModelKind::SIR, "SIR", {"S", "I", "R"}, 2},
        {ModelKind::SEIR, "SEIR", {"S", "E", "I", "R"}, 3},
        {ModelKind::SIIDR, "SIIDR", {"S", "I", "I_D", "R"}, 4},
    }};
    return specs;
}

double conservation_tolerance(double population) { return 1e-9 * std::max(1.0, population); }

void require_finite_nonnegative(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput(std::string("rate ") + name + " must be finite and >= 0");
}

void axpy(std::vector<double>& out, const std::vector<double>& x, double a, const std::vector<double>& y) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * y[i];
}

}  // namespace

std::optional<std::size_t> ModelSpec::index_of(std::string_view label) const {
    auto it = std::find(compartments.begin(), compartments.end(), label);
    if (it == compartments.end()) return std::nullopt;
    return static_cast<std::size_t>(it - compartments.begin());
}

const ModelSpec& ModelSpec::get(ModelKind kind) { return registry().at(static_cast<std::size_t>(kind)); }

std::span<const ModelKind> all_models() noexcept { return kAllModels; }

std::string_view to_string(ModelKind kind) noexcept { return ModelSpec::get(kind).name; }

ModelKind parse_model(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (const auto& spec : registry()) {
        if (spec.name == upper) return spec.kind;
    }
    throw InvalidInput("unknown model '" + std::string(name) + "'");
}

void RateParams::validate() const {
    require_finite_nonnegative(beta, "beta");
    require_finite_nonnegative(mu, "mu");
    require_finite_nonnegative(gamma1, "gamma1");
    require_finite_nonnegative(gamma2, "gamma2");
    require_finite_nonnegative(sigma, "sigma");
    if (!std::isfinite(dt) || dt <= 0.0) throw InvalidInput("dt must be > 0");
}

CompartmentState::CompartmentState(std::vector<double> counts, double population)
    : counts_(std::move(counts)), population_(population) {
    if (!(population_ > 0.0) || !std::isfinite(population_)) throw InvalidInput("population must be > 0");
    for (double c : counts_) {
        if (!std::isfinite(c) || c < 0.0) throw InvalidInput("compartment counts must be finite and >= 0");
    }
    const double total = std::accumulate(counts_.begin(), counts_.end(), 0.0);
    if (std::abs(total - population_) > conservation_tolerance(population_)) {
        throw InvalidInput("compartment counts do not sum to the population");
    }
}

CompartmentState::CompartmentState(std::vector<double> counts)
    : CompartmentState(counts, std::accumulate(counts.begin(), counts.end(), 0.0)) {}

CompartmentState CompartmentState::seeded(const ModelSpec& model, double population, double infected) {
    if (infected < 0.0 || infected > population) throw InvalidInput("initial infected outside [0, N]");
    std::vector<double> counts(model.size(), 0.0);
    counts[0] = population - infected;
    counts[*model.index_of("I")] = infected;
    return CompartmentState(std::move(counts), population);
}

namespace {

// Vector field on raw counts; callers guarantee x has model.size() entries.
void vector_field(ModelKind kind, std::span<const double> x, double n, const RateParams& params,
                  std::span<double> d) {
    switch (kind) {
        case ModelKind::SI: {
            const double inf = params.beta * x[0] * x[1] / n;
            d[0] = -inf;
            d[1] = inf;
            break;
        }
        case ModelKind::SIS: {
            const double inf = params.beta * x[0] * x[1] / n;
            const double rec = params.mu * x[1];
            d[0] = -inf + rec;
            d[1] = inf - rec;
            break;
        }
        case ModelKind::SIR: {
            const double inf = params.beta * x[0] * x[1] / n;
            const double rec = params.mu * x[1];
            d[0] = -inf;
            d[1] = inf - rec;
            d[2] = rec;
            break;
        }
        case ModelKind::SEIR: {
            const double inf = params.beta * x[0] * x[2] / n;
            const double onset = params.sigma * x[1];
            const double rec = params.mu * x[2];
            d[0] = -inf;
            d[1] = inf - onset;
            d[2] = onset - rec;
            d[3] = rec;
            break;
        }
        case ModelKind::SIIDR: {
            const double inf = params.beta * x[0] * x[1] / n;
            const double rec = params.mu * x[1];
            const double dormant = params.gamma1 * x[1];
            const double wake = params.gamma2 * x[2];
            d[0] = -inf;
            d[1] = inf - rec - dormant + wake;
            d[2] = dormant - wake;
            d[3] = rec;
            break;
        }
    }
}

}  // namespace

std::vector<double> rhs(const ModelSpec& model, const CompartmentState& state, const RateParams& params) {
    if (state.size() != model.size()) {
        throw InvalidInput("state has " + std::to_string(state.size()) + " compartments, model " +
                           std::string(model.name) + " needs " + std::to_string(model.size()));
    }
    std::vector<double> d(model.size(), 0.0);
    vector_field(model.kind, state.counts(), state.population(), params, d);
    return d;
}

Trajectory integrate_ode(const ModelSpec& model, const RateParams& params, const CompartmentState& init, int steps) {
    if (steps < 1) throw InvalidInput("steps must be >= 1");
    if (init.size() != model.size()) throw InvalidInput("initial state does not match model");
    params.validate();

    const double n = init.population();
    const double h = params.dt;
    const double guard = conservation_tolerance(n);
    const std::size_t width = model.size();

    Trajectory traj(model.kind, h);
    traj.reserve(static_cast<std::size_t>(steps) + 1);
    std::vector<double> x(init.counts().begin(), init.counts().end());
    traj.push_back(x);

    auto f = [&](const std::vector<double>& y, std::vector<double>& out) {
        vector_field(model.kind, y, n, params, out);
    };

    std::vector<double> k1(width), k2(width), k3(width), k4(width), tmp(width);
    for (int step = 0; step < steps; ++step) {
        f(x, k1);
        axpy(tmp, x, 0.5 * h, k1);
        f(tmp, k2);
        axpy(tmp, x, 0.5 * h, k2);
        f(tmp, k3);
        axpy(tmp, x, h, k3);
        f(tmp, k4);
        for (std::size_t i = 0; i < width; ++i) {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (x[i] < 0.0) {
                if (x[i] < -guard) {
                    throw NumericalError("compartment " + std::string(model.compartments[i]) +
                                         " went negative; reduce dt");
                }
                x[i] = 0.0;
            }
        }
        traj.push_back(x);
    }
    return traj;
}

CompartmentState EquilibriumFamily::point(double population, double recovered) const {
    const ModelSpec& spec = ModelSpec::get(model);
    if (recovered < 0.0 || recovered > population) throw InvalidInput("recovered outside [0, N]");
    if (!has_recovered && recovered != 0.0) throw InvalidInput("model has no recovered compartment");
    std::vector<double> counts(spec.size(), 0.0);
    counts[0] = population - recovered;
    if (has_recovered) counts[*spec.index_of("R")] = recovered;
    return CompartmentState(std::move(counts), population);
}

EquilibriumFamily dfe_points(ModelKind model) {
    EquilibriumFamily fam;
    fam.model = model;
    const ModelSpec& spec = ModelSpec::get(model);
    for (std::size_t i = 1; i < spec.size(); ++i) {
        if (spec.compartments[i] != "R") fam.zero_compartments.push_back(i);
    }
    fam.has_recovered = spec.index_of("R").has_value();
    switch (model) {
        case ModelKind::SI:
        case ModelKind::SIS: fam.description = "(N, 0)"; break;
        case ModelKind::SIR: fam.description = "(S, 0, R) with S + R = N"; break;
        case ModelKind::SEIR: fam.description = "(S, 0, 0, R) with S + R = N"; break;
        case ModelKind::SIIDR:
            fam.description =
                "(S, 0, 0, R) with S + R = N; for mu = 0 (SIID) also the endemic point "
                "(0, I*, gamma1 I*/gamma2, 0)";
            break;
    }
    return fam;
}

CompartmentState siid_endemic_point(double infected, double gamma1, double gamma2) {
    if (!(gamma2 > 0.0)) throw InvalidInput("gamma2 must be > 0 for the SIID endemic point");
    if (!(infected > 0.0)) throw InvalidInput("I* must be > 0");
    const double dormant = gamma1 * infected / gamma2;
    return CompartmentState({0.0, infected, dormant, 0.0}, infected + dormant);
}

Matrix2 next_generation_matrix(const RateParams& params) {
    if (params.mu == 0.0 || params.gamma2 == 0.0) {
        throw SingularMatrix("V is singular: mu and gamma2 must both be nonzero");
    }
    // F = [[beta, 0], [0, 0]]; V = [[mu + gamma1, -gamma2], [-gamma1, gamma2]].
    const double det = (params.mu + params.gamma1) * params.gamma2 - params.gamma1 * params.gamma2;
    const Matrix2 v_inv{{{params.gamma2 / det, params.gamma2 / det},
                         {params.gamma1 / det, (params.mu + params.gamma1) / det}}};
    Matrix2 g{};
    for (std::size_t j = 0; j < 2; ++j) g[0][j] = params.beta * v_inv[0][j];
    return g;
}

double spectral_radius(const Matrix2& m) {
    const double tr = m[0][0] + m[1][1];
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double disc = tr * tr / 4.0 - det;
    if (disc < 0.0) throw InvalidInput("matrix has complex eigenvalues");
    const double root = std::sqrt(disc);
    return std::max(std::abs(tr / 2.0 + root), std::abs(tr / 2.0 - root));
}

double r0(const RateParams& params, double susceptible_fraction) {
    if (params.mu == 0.0) throw InvalidInput("R0 undefined for mu = 0");
    if (susceptible_fraction < 0.0 || susceptible_fraction > 1.0) {
        throw InvalidInput("susceptible fraction must lie in [0, 1]");
    }
    return params.beta / params.mu * susceptible_fraction;
}

LyapunovSeries lyapunov_series(const Trajectory& trajectory, const RateParams& params, double tolerance) {
    if (trajectory.model() != ModelKind::SIIDR) throw InvalidInput("Lyapunov series needs an SIIDR trajectory");
    LyapunovSeries out;
    out.value.reserve(trajectory.size());
    out.derivative.reserve(trajectory.size());
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
        const auto x = trajectory.row(t);
        const double n = x[0] + x[1] + x[2] + x[3];
        out.value.push_back(x[1] + x[2]);
        const double ldot = n > 0.0 ? params.beta * x[0] * x[1] / n - params.mu * x[1] : 0.0;
        out.derivative.push_back(ldot);
        if (ldot > 0.0) out.derivative_nonpositive = false;
        if (t > 0 && out.value[t] > out.value[t - 1] + tolerance) out.nonincreasing = false;
    }
    return out;
}

}  // namespace spm
