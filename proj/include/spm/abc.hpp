#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spm/model_select.hpp"

namespace spm {

/// SIIDR rates (beta, mu, gamma1, gamma2); the prior is Uniform(0, 1) on each.
using Theta = std::array<double, 4>;
inline constexpr std::array<const char*, 4> kThetaNames{"beta", "mu", "gamma1", "gamma2"};

RateParams to_rates(const Theta& theta, double dt);

struct Particle {
    Theta theta{};
    double weight = 0.0;
    double distance = 0.0;  ///< best (smallest) distance among its simulations
};

struct ParticlePopulation {
    int generation = 0;
    std::vector<Particle> particles;
    double epsilon = 0.0;
    double acceptance_rate = 0.0;
    std::size_t draws = 0;

    double weight_sum() const;
};

/// Sum of squared differences of two cumulative curves on the same grid.
double distance(std::span<const double> simulated, std::span<const double> observed);

/// Distance of one SIIDR realization (seed `seed`) to the target.
double simulate_distance(const FitTarget& target, const Theta& theta, std::uint64_t seed);

/// Draws from the prior until `n` particles have distance <= epsilon. Throws
/// BudgetExhausted once `budget` draws fail to produce them.
ParticlePopulation abc_rejection(const FitTarget& target, double epsilon, int n, std::uint64_t seed,
                                 std::size_t budget);

struct AbcConfig {
    int particles = 500;             ///< N
    int generations = 8;             ///< G
    int neighbors = 50;              ///< M
    int n_sims = 10;
    int budget_factor = 200;         ///< proposals per generation = budget_factor * N
    int pilot_draws = 1000;
    double pilot_quantile = 0.2;     ///< epsilon of generation 0
    double tolerance_quantile = 0.5; ///< epsilon_{g+1} from generation g distances
    int truncation_samples = 4000;   ///< Monte Carlo draws for kernel truncation mass
    std::uint64_t seed = 0;

    void validate() const;
};

/// 2x the empirical covariance of the M nearest neighbours (Euclidean, including
/// the particle itself) of `center` among `particles`; a 1e-10 ridge is added when
/// the result is not positive definite.
Eigen::Matrix4d mnn_covariance(const std::vector<Particle>& particles, const Theta& center, int neighbors);

/// Sequential Monte Carlo ABC with multivariate-normal nearest-neighbour kernels.
/// Returns one population per generation. A particle is accepted when at least one
/// of its n_sims simulations falls below epsilon; its unnormalised weight is that
/// fraction divided by the kernel mixture density of the previous generation.
std::vector<ParticlePopulation> abc_smc_mnn(const FitTarget& target, const AbcConfig& config);

struct PosteriorSummary {
    Theta mean{};
    Theta std{};
    Theta q025{};
    Theta q975{};
    Theta median{};
    std::array<std::array<double, 4>, 4> correlation{};
    double effective_sample_size = 0.0;

    /// Pairs with |rho| > 0.8.
    std::vector<std::pair<int, int>> strongly_correlated(double threshold = 0.8) const;
};

/// Smallest value whose cumulative weight reaches q.
double weighted_quantile(std::vector<std::pair<double, double>> value_weight, double q);

PosteriorSummary posterior_summary(const ParticlePopulation& population);

/// beta_mean / mu_mean; throws InvalidInput when mu_mean <= 0.
double r0_from_posterior(const PosteriorSummary& summary);

/// `generation,beta,mu,gamma1,gamma2,weight,distance`
void write_population_csv(std::ostream& out, const std::vector<ParticlePopulation>& populations);

nlohmann::ordered_json posterior_json(const PosteriorSummary& summary, const std::vector<ParticlePopulation>& history,
                                      double dt);

}  // namespace spm
