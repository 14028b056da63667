#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spm/models.hpp"
#include "spm/trajectory.hpp"

namespace spm {

/// Number of steps T, base seed, and realizations h per averaged run.
struct SimConfig {
    int steps = 1;
    std::uint64_t seed = 0;
    int realizations = 10;

    void validate() const;
};

/// 1 - exp(-rate * dt): probability that a constant-hazard transition fires within dt.
double transition_probability(double rate, double dt);

/// Split of the exit probability of a compartment with two competing hazards.
struct CompetingExits {
    double first = 0.0;
    double second = 0.0;
    double stay() const noexcept { return 1.0 - first - second; }
};

/// Competing-risks discretisation: total exit 1 - exp(-(r1 + r2) dt), shared in
/// proportion to the rates. first + second <= 1 always.
CompetingExits competing_risks(double rate1, double rate2, double dt);

struct Exit {
    std::size_t to;
    double probability;
};

struct CompartmentExits {
    std::vector<Exit> exits;
    double stay() const noexcept;
};

/// Per-step exit probabilities of every compartment given the current counts.
/// Infection uses 1 - exp(-beta (I/N) dt).
std::vector<CompartmentExits> step_probabilities(const ModelSpec& model, const RateParams& params,
                                                 std::span<const double> state);

/// One chain-binomial realization driven by stream `config.seed`.
Trajectory simulate(const ModelSpec& model, const RateParams& params, const CompartmentState& init,
                    const SimConfig& config);

/// Realizations seeded seed, seed+1, ..., seed+h-1 (computed in parallel).
std::vector<Trajectory> simulate_ensemble(const ModelSpec& model, const RateParams& params,
                                          const CompartmentState& init, const SimConfig& config);

/// Pointwise mean of simulate_ensemble. Identical for any thread count.
Trajectory simulate_avg(const ModelSpec& model, const RateParams& params, const CompartmentState& init,
                        const SimConfig& config);

/// Cumulative-infected series (steps+1 values) of a single realization with
/// seed `seed`. Bit-identical to simulate(...).cumulative_series().
std::vector<double> simulate_cumulative(const ModelSpec& model, const RateParams& params,
                                        std::span<const long> init, int steps, std::uint64_t seed);

/// Mean cumulative series over `realizations` seeds starting at `seed`, computed
/// serially. This is the inner kernel of grid search and ABC.
std::vector<double> simulate_avg_cumulative(const ModelSpec& model, const RateParams& params,
                                            std::span<const long> init, int steps, std::uint64_t seed,
                                            int realizations);

/// Integer counts of a state; throws InvalidInput if any count is fractional.
std::vector<long> integer_counts(const CompartmentState& state);

}  // namespace spm
