#include "spm/stochastic.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spm/errors.hpp"
#include "spm/rng.hpp"

namespace spm {

namespace {

constexpr long kInfectionTableLimit = 200000;

// Chain-binomial update with all per-step probabilities precomputed.
class ChainBinomial {
public:
    ChainBinomial(ModelKind kind, const RateParams& params, long population)
        : kind_(kind), beta_dt_(params.beta * params.dt), population_(population) {
        params.validate();
        switch (kind) {
            case ModelKind::SI: break;
            case ModelKind::SIS:
            case ModelKind::SIR: p_recover_ = transition_probability(params.mu, params.dt); break;
            case ModelKind::SEIR:
                p_recover_ = transition_probability(params.mu, params.dt);
                p_onset_ = transition_probability(params.sigma, params.dt);
                break;
            case ModelKind::SIIDR: {
                const auto exits = competing_risks(params.mu, params.gamma1, params.dt);
                p_recover_ = exits.first;
                p_dormant_ = exits.second;
                p_wake_ = transition_probability(params.gamma2, params.dt);
                break;
            }
        }
        if (population_ <= kInfectionTableLimit) {
            infection_.resize(static_cast<std::size_t>(population_) + 1);
            for (long i = 0; i <= population_; ++i) infection_[i] = infection_probability(i);
        }
    }

    double infection_probability(long infectious) const {
        return -std::expm1(-beta_dt_ * static_cast<double>(infectious) / static_cast<double>(population_));
    }

    // Index of the infectious compartment.
    std::size_t infectious_index() const { return kind_ == ModelKind::SEIR ? 2 : 1; }

    bool absorbing(const long* x) const {
        switch (kind_) {
            case ModelKind::SI:
            case ModelKind::SIS:
            case ModelKind::SIR: return x[1] == 0;
            case ModelKind::SEIR: return x[1] == 0 && x[2] == 0;
            case ModelKind::SIIDR: return x[1] == 0 && x[2] == 0;
        }
        return true;
    }

    void step(Engine& engine, long* x) const {
        const long infectious = x[infectious_index()];
        const double p_inf = infectious == 0 ? 0.0
                             : infection_.empty() ? infection_probability(infectious)
                                                  : infection_[static_cast<std::size_t>(infectious)];
        const long infected = binomial(engine, x[0], p_inf);
        switch (kind_) {
            case ModelKind::SI:
                x[0] -= infected;
                x[1] += infected;
                break;
            case ModelKind::SIS: {
                const long recovered = binomial(engine, x[1], p_recover_);
                x[0] += recovered - infected;
                x[1] += infected - recovered;
                break;
            }
            case ModelKind::SIR: {
                const long recovered = binomial(engine, x[1], p_recover_);
                x[0] -= infected;
                x[1] += infected - recovered;
                x[2] += recovered;
                break;
            }
            case ModelKind::SEIR: {
                const long onset = binomial(engine, x[1], p_onset_);
                const long recovered = binomial(engine, x[2], p_recover_);
                x[0] -= infected;
                x[1] += infected - onset;
                x[2] += onset - recovered;
                x[3] += recovered;
                break;
            }
            case ModelKind::SIIDR: {
                const auto exits = multinomial2(engine, x[1], p_recover_, p_dormant_);
                const long woke = binomial(engine, x[2], p_wake_);
                x[0] -= infected;
                x[1] += infected - exits.first - exits.second + woke;
                x[2] += exits.second - woke;
                x[3] += exits.first;
                break;
            }
        }
    }

    // Calls emit(step, x) for step = 0..steps.
    template <class Emit>
    void run(Engine& engine, long* x, int steps, Emit&& emit) const {
        emit(0, x);
        for (int t = 1; t <= steps; ++t) {
            if (absorbing(x)) {
                for (; t <= steps; ++t) emit(t, x);
                return;
            }
            step(engine, x);
            emit(t, x);
        }
    }

private:
    ModelKind kind_;
    double beta_dt_;
    long population_;
    double p_recover_ = 0.0;
    double p_dormant_ = 0.0;
    double p_wake_ = 0.0;
    double p_onset_ = 0.0;
    std::vector<double> infection_;
};

long checked_population(const ModelSpec& model, std::span<const long> init) {
    if (init.size() != model.size()) throw InvalidInput("initial counts do not match model");
    long total = 0;
    for (long c : init) {
        if (c < 0) throw InvalidInput("initial counts must be >= 0");
        total += c;
    }
    if (total <= 0) throw InvalidInput("population must be > 0");
    return total;
}

double cumulative_of(ModelKind kind, const long* x) {
    switch (kind) {
        case ModelKind::SI:
        case ModelKind::SIS: return static_cast<double>(x[1]);
        case ModelKind::SIR: return static_cast<double>(x[1] + x[2]);
        case ModelKind::SEIR: return static_cast<double>(x[2] + x[3]);
        case ModelKind::SIIDR: return static_cast<double>(x[1] + x[2] + x[3]);
    }
    return 0.0;
}

Trajectory run_one(const ModelSpec& model, const ChainBinomial& kernel, std::span<const long> init, int steps,
                   std::uint64_t seed, double dt) {
    Engine engine = make_engine(seed);
    std::vector<long> x(init.begin(), init.end());
    Trajectory traj(model.kind, dt);
    traj.resize(static_cast<std::size_t>(steps) + 1);
    auto out = traj.raw_mut();
    const std::size_t width = model.size();
    kernel.run(engine, x.data(), steps, [&](int t, const long* state) {
        for (std::size_t c = 0; c < width; ++c) out[static_cast<std::size_t>(t) * width + c] = static_cast<double>(state[c]);
    });
    return traj;
}

}  // namespace

void SimConfig::validate() const {
    if (steps < 1) throw InvalidInput("steps must be >= 1");
    if (realizations < 1) throw InvalidInput("realizations must be >= 1");
}

double transition_probability(double rate, double dt) {
    if (rate <= 0.0) return 0.0;
    return -std::expm1(-rate * dt);
}

CompetingExits competing_risks(double rate1, double rate2, double dt) {
    const double total = rate1 + rate2;
    if (total <= 0.0) return {};
    const double exit = -std::expm1(-total * dt);
    CompetingExits out{rate1 / total * exit, rate2 / total * exit};
    return out;
}

double CompartmentExits::stay() const noexcept {
    double p = 1.0;
    for (const auto& e : exits) p -= e.probability;
    return p;
}

std::vector<CompartmentExits> step_probabilities(const ModelSpec& model, const RateParams& params,
                                                 std::span<const double> x) {
    if (x.size() != model.size()) throw InvalidInput("state does not match model");
    params.validate();
    const double n = std::accumulate(x.begin(), x.end(), 0.0);
    if (!(n > 0.0)) throw InvalidInput("population must be > 0");
    std::vector<CompartmentExits> out(model.size());
    const std::size_t inf_idx = model.kind == ModelKind::SEIR ? 2 : 1;
    const double p_inf = transition_probability(params.beta * x[inf_idx] / n, params.dt);
    switch (model.kind) {
        case ModelKind::SI: out[0].exits = {{1, p_inf}}; break;
        case ModelKind::SIS:
            out[0].exits = {{1, p_inf}};
            out[1].exits = {{0, transition_probability(params.mu, params.dt)}};
            break;
        case ModelKind::SIR:
            out[0].exits = {{1, p_inf}};
            out[1].exits = {{2, transition_probability(params.mu, params.dt)}};
            break;
        case ModelKind::SEIR:
            out[0].exits = {{1, p_inf}};
            out[1].exits = {{2, transition_probability(params.sigma, params.dt)}};
            out[2].exits = {{3, transition_probability(params.mu, params.dt)}};
            break;
        case ModelKind::SIIDR: {
            const auto exits = competing_risks(params.mu, params.gamma1, params.dt);
            out[0].exits = {{1, p_inf}};
            out[1].exits = {{3, exits.first}, {2, exits.second}};
            out[2].exits = {{1, transition_probability(params.gamma2, params.dt)}};
            break;
        }
    }
    return out;
}

std::vector<long> integer_counts(const CompartmentState& state) {
    std::vector<long> out;
    out.reserve(state.size());
    for (double c : state.counts()) {
        const double r = std::round(c);
        if (std::abs(c - r) > 1e-9) throw InvalidInput("stochastic simulation needs integer counts");
        out.push_back(static_cast<long>(r));
    }
    return out;
}

Trajectory simulate(const ModelSpec& model, const RateParams& params, const CompartmentState& init,
                    const SimConfig& config) {
    config.validate();
    const auto counts = integer_counts(init);
    const ChainBinomial kernel(model.kind, params, checked_population(model, counts));
    return run_one(model, kernel, counts, config.steps, config.seed, params.dt);
}

std::vector<Trajectory> simulate_ensemble(const ModelSpec& model, const RateParams& params,
                                          const CompartmentState& init, const SimConfig& config) {
    config.validate();
    const auto counts = integer_counts(init);
    const ChainBinomial kernel(model.kind, params, checked_population(model, counts));
    std::vector<Trajectory> runs(static_cast<std::size_t>(config.realizations), Trajectory(model.kind, params.dt));
    detail::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < config.realizations; ++r) {
        slot.run([&] {
            runs[static_cast<std::size_t>(r)] =
                run_one(model, kernel, counts, config.steps, config.seed + static_cast<std::uint64_t>(r), params.dt);
        });
    }
    slot.rethrow();
    return runs;
}

Trajectory simulate_avg(const ModelSpec& model, const RateParams& params, const CompartmentState& init,
                        const SimConfig& config) {
    const auto runs = simulate_ensemble(model, params, init, config);
    Trajectory mean(model.kind, params.dt);
    mean.resize(runs.front().size());
    auto out = mean.raw_mut();
    // Summed in realization order so the result does not depend on scheduling.
    for (const auto& run : runs) {
        const auto src = run.raw();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += src[i];
    }
    const double h = static_cast<double>(runs.size());
    for (double& v : out) v /= h;
    return mean;
}

std::vector<double> simulate_cumulative(const ModelSpec& model, const RateParams& params,
                                        std::span<const long> init, int steps, std::uint64_t seed) {
    return simulate_avg_cumulative(model, params, init, steps, seed, 1);
}

std::vector<double> simulate_avg_cumulative(const ModelSpec& model, const RateParams& params,
                                            std::span<const long> init, int steps, std::uint64_t seed,
                                            int realizations) {
    if (steps < 1) throw InvalidInput("steps must be >= 1");
    if (realizations < 1) throw InvalidInput("realizations must be >= 1");
    const ChainBinomial kernel(model.kind, params, checked_population(model, init));
    std::vector<double> acc(static_cast<std::size_t>(steps) + 1, 0.0);
    std::vector<long> x(init.size());
    for (int r = 0; r < realizations; ++r) {
        Engine engine = make_engine(seed + static_cast<std::uint64_t>(r));
        std::copy(init.begin(), init.end(), x.begin());
        kernel.run(engine, x.data(), steps,
                   [&](int t, const long* state) { acc[static_cast<std::size_t>(t)] += cumulative_of(model.kind, state); });
    }
    if (realizations > 1) {
        const double h = static_cast<double>(realizations);
        for (double& v : acc) v /= h;
    }
    return acc;
}

}  // namespace spm
