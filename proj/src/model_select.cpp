#include "spm/model_select.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "parallel.hpp"
#include "spm/errors.hpp"
#include "spm/stochastic.hpp"

namespace spm {

void FitTarget::validate() const {
    if (observed.empty()) throw InvalidInput("fit target is empty");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("fit target dt must be > 0");
    if (population < 1) throw InvalidInput("population must be >= 1");
    if (initial_infected < 1 || initial_infected > population) {
        throw InvalidInput("initial infected must lie in [1, population]");
    }
}

FitTarget make_target(const EpidemicTrace& trace, int T, long population, long initial_infected) {
    FitTarget target;
    target.dt = compute_dt(trace, T);
    if (!(target.dt > 0.0)) throw InvalidInput("trace has zero duration");
    target.observed = resample_cumulative(trace, target.dt, T);
    target.population = population > 0 ? population : static_cast<long>(trace.contacted_ips);
    target.initial_infected = initial_infected;
    target.validate();
    return target;
}

std::vector<double> residuals(std::span<const double> simulated, std::span<const double> observed) {
    if (simulated.size() != observed.size()) throw InvalidInput("residuals need equal-length series");
    std::vector<double> e(simulated.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = simulated[i] - observed[i];
    return e;
}

AicValue aic(std::span<const double> residuals, int k) {
    if (residuals.empty()) throw InvalidInput("AIC needs at least one residual");
    if (k < 1) throw InvalidInput("AIC needs k >= 1");
    double sse = 0.0;
    for (double e : residuals) sse += e * e;
    const double n = static_cast<double>(residuals.size());
    AicValue v;
    v.residual_variance = sse / n;
    v.perfect_fit = v.residual_variance < kSigmaFloor;
    v.aic = 2.0 * k + n * std::log(std::max(v.residual_variance, kSigmaFloor));
    return v;
}

std::vector<double> equidistant_open_unit(int n) {
    if (n < 1) throw InvalidInput("grid needs at least one value");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) v[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) / (n + 1);
    return v;
}

GridSpec GridSpec::parse(std::string_view text) {
    GridSpec g;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view item = text.substr(start, end - start);
        start = end + 1;
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw InvalidInput("grid entry '" + std::string(item) + "' lacks '='");
        const std::string_view key = item.substr(0, eq);
        const std::string_view value = item.substr(eq + 1);
        int count = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), count);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            throw InvalidInput("grid count for '" + std::string(key) + "' is not an integer");
        }
        if (key == "beta") g.beta = count;
        else if (key == "mu") g.mu = count;
        else if (key == "gamma1") g.gamma1 = count;
        else if (key == "gamma2") g.gamma2 = count;
        else if (key == "sigma") g.sigma = count;
        else throw InvalidInput("unknown grid parameter '" + std::string(key) + "'");
    }
    g.validate();
    return g;
}

std::string GridSpec::to_string() const {
    std::ostringstream os;
    os << "beta=" << beta << ",mu=" << mu << ",gamma1=" << gamma1 << ",gamma2=" << gamma2 << ",sigma=" << sigma;
    return os.str();
}

void GridSpec::validate() const {
    for (int c : {beta, mu, gamma1, gamma2, sigma}) {
        if (c < 1) throw InvalidInput("grid counts must be >= 1");
    }
}

std::vector<std::string_view> free_parameter_names(ModelKind model) {
    switch (model) {
        case ModelKind::SI: return {"beta"};
        case ModelKind::SIS:
        case ModelKind::SIR: return {"beta", "mu"};
        case ModelKind::SEIR: return {"beta", "sigma", "mu"};
        case ModelKind::SIIDR: return {"beta", "mu", "gamma1", "gamma2"};
    }
    return {};
}

namespace {

double* field(RateParams& p, std::string_view name) {
    if (name == "beta") return &p.beta;
    if (name == "mu") return &p.mu;
    if (name == "gamma1") return &p.gamma1;
    if (name == "gamma2") return &p.gamma2;
    return &p.sigma;
}

int grid_count(const GridSpec& g, std::string_view name) {
    if (name == "beta") return g.beta;
    if (name == "mu") return g.mu;
    if (name == "gamma1") return g.gamma1;
    if (name == "gamma2") return g.gamma2;
    return g.sigma;
}

std::vector<long> initial_counts(ModelKind model, const FitTarget& target) {
    const ModelSpec& spec = ModelSpec::get(model);
    std::vector<long> x(spec.size(), 0);
    x[0] = target.population - target.initial_infected;
    x[*spec.index_of("I")] = target.initial_infected;
    return x;
}

struct WorkItem {
    std::size_t model_slot;
    RateParams params;
};

SelectionReport select_impl(const FitTarget& target, std::span<const ModelKind> models, const GridSpec& grid,
                            const SelectConfig& config, bool parallel) {
    target.validate();
    grid.validate();
    if (models.empty()) throw InvalidInput("no models to select from");
    if (config.realizations < 1) throw InvalidInput("realizations must be >= 1");

    std::vector<WorkItem> work;
    for (std::size_t m = 0; m < models.size(); ++m) {
        for (const auto& p : grid.points(models[m], target.dt)) work.push_back({m, p});
    }
    std::vector<FitResult> fits(work.size());
    const auto count = static_cast<std::int64_t>(work.size());
    if (parallel) {
        detail::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 4)
        for (std::int64_t i = 0; i < count; ++i) {
            slot.run([&] {
                const auto& w = work[static_cast<std::size_t>(i)];
                fits[static_cast<std::size_t>(i)] = evaluate_fit(target, models[w.model_slot], w.params, config);
            });
        }
        slot.rethrow();
    } else {
        for (std::int64_t i = 0; i < count; ++i) {
            const auto& w = work[static_cast<std::size_t>(i)];
            fits[static_cast<std::size_t>(i)] = evaluate_fit(target, models[w.model_slot], w.params, config);
        }
    }

    // Points are enumerated in lexicographic parameter order, so keeping the first
    // strict minimum realises the (aic, params) ordering.
    SelectionReport report;
    report.per_model.resize(models.size());
    std::vector<bool> seen(models.size(), false);
    for (std::size_t i = 0; i < work.size(); ++i) {
        const std::size_t m = work[i].model_slot;
        if (!seen[m] || fits[i].aic < report.per_model[m].aic) {
            report.per_model[m] = fits[i];
            seen[m] = true;
        }
    }
    for (std::size_t m = 1; m < models.size(); ++m) {
        if (ranks_before(report.per_model[m], report.per_model[report.best])) report.best = m;
    }
    report.evaluations = work.size();
    return report;
}

}  // namespace

bool ranks_before(const FitResult& a, const FitResult& b) {
    if (a.aic != b.aic) return a.aic < b.aic;
    const int ka = ModelSpec::get(a.model).free_param_count;
    const int kb = ModelSpec::get(b.model).free_param_count;
    if (ka != kb) return ka < kb;
    return to_string(a.model) < to_string(b.model);
}

std::vector<double> free_parameter_values(ModelKind model, const RateParams& params) {
    std::vector<double> v;
    RateParams copy = params;
    for (auto name : free_parameter_names(model)) v.push_back(*field(copy, name));
    return v;
}

std::vector<RateParams> GridSpec::points(ModelKind model, double dt) const {
    validate();
    const auto names = free_parameter_names(model);
    std::vector<std::vector<double>> axes;
    for (auto name : names) axes.push_back(equidistant_open_unit(grid_count(*this, name)));
    std::vector<RateParams> out;
    std::vector<std::size_t> idx(names.size(), 0);
    while (true) {
        RateParams p;
        p.dt = dt;
        for (std::size_t a = 0; a < names.size(); ++a) *field(p, names[a]) = axes[a][idx[a]];
        out.push_back(p);
        // Odometer increment, last axis fastest.
        std::size_t a = names.size();
        while (a > 0) {
            --a;
            if (++idx[a] < axes[a].size()) break;
            idx[a] = 0;
            if (a == 0) return out;
        }
    }
}

FitResult evaluate_fit(const FitTarget& target, ModelKind model, const RateParams& params, const SelectConfig& config) {
    const ModelSpec& spec = ModelSpec::get(model);
    const auto init = initial_counts(model, target);
    RateParams p = params;
    p.dt = target.dt;
    const auto sim = simulate_avg_cumulative(spec, p, init, target.steps(), config.seed, config.realizations);
    // sim[0] is t0; the target starts at t0 + dt.
    const auto e = residuals(std::span<const double>(sim).subspan(1), target.observed);
    const AicValue v = aic(e, spec.free_param_count);
    return {model, p, v.aic, v.residual_variance, e.size(), v.perfect_fit};
}

SelectionReport select_model(const FitTarget& target, std::span<const ModelKind> models, const GridSpec& grid,
                             const SelectConfig& config) {
    return select_impl(target, models, grid, config, true);
}

SelectionReport reference::select_model(const FitTarget& target, std::span<const ModelKind> models,
                                        const GridSpec& grid, const SelectConfig& config) {
    return select_impl(target, models, grid, config, false);
}

nlohmann::ordered_json selection_json(const SelectionReport& report, const std::string& trace_name) {
    nlohmann::ordered_json j;
    j["trace"] = trace_name;
    j["best_model"] = std::string(to_string(report.best_fit().model));
    j["evaluations"] = report.evaluations;
    auto& models = j["models"] = nlohmann::ordered_json::array();
    for (const auto& fit : report.per_model) {
        nlohmann::ordered_json m;
        m["model"] = std::string(to_string(fit.model));
        m["k"] = ModelSpec::get(fit.model).free_param_count;
        m["min_aic"] = fit.aic;
        m["residual_variance"] = fit.residual_variance;
        m["n"] = fit.n;
        m["perfect_fit"] = fit.perfect_fit;
        nlohmann::ordered_json params;
        const auto names = free_parameter_names(fit.model);
        const auto values = free_parameter_values(fit.model, fit.params);
        for (std::size_t i = 0; i < names.size(); ++i) params[std::string(names[i])] = values[i];
        m["params"] = params;
        models.push_back(m);
    }
    return j;
}

void write_selection_csv(std::ostream& out, const SelectionReport& report, const std::string& trace_name,
                         bool header) {
    const auto precision = out.precision(10);
    if (header) out << "trace,model,min_aic\n";
    for (const auto& fit : report.per_model) out << trace_name << ',' << to_string(fit.model) << ',' << fit.aic << '\n';
    out.precision(precision);
}

}  // namespace spm
