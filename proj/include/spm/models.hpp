#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spm {

enum class ModelKind { SI, SIS, SIR, SEIR, SIIDR };

/// Compartment layout of one of the supported models.
struct ModelSpec {
    ModelKind kind;
    std::string_view name;
    std::vector<std::string_view> compartments;
    int free_param_count;

    std::size_t size() const noexcept { return compartments.size(); }
    std::optional<std::size_t> index_of(std::string_view label) const;

    static const ModelSpec& get(ModelKind kind);
};

std::span<const ModelKind> all_models() noexcept;
std::string_view to_string(ModelKind kind) noexcept;
/// Case-insensitive model lookup; throws InvalidInput on unknown names.
ModelKind parse_model(std::string_view name);

/// Transition rates. `sigma` is the E->I rate of SEIR. Rates a model does not
/// use are never read.
struct RateParams {
    double beta = 0.0;
    double mu = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double sigma = 0.0;
    double dt = 1.0;

    /// Throws InvalidInput on negative or non-finite rates, or dt <= 0.
    void validate() const;
};

/// Per-compartment counts with the population they must sum to.
class CompartmentState {
public:
    CompartmentState(std::vector<double> counts, double population);
    /// Population inferred from the counts.
    explicit CompartmentState(std::vector<double> counts);

    std::span<const double> counts() const noexcept { return counts_; }
    double operator[](std::size_t i) const { return counts_.at(i); }
    double population() const noexcept { return population_; }
    std::size_t size() const noexcept { return counts_.size(); }

    /// Everyone susceptible except `infected` individuals in the I compartment.
    static CompartmentState seeded(const ModelSpec& model, double population, double infected);

private:
    std::vector<double> counts_;
    double population_;
};

/// Right-hand side dX/dt of the model's ODE system.
std::vector<double> rhs(const ModelSpec& model, const CompartmentState& state, const RateParams& params);

class Trajectory;

/// Fixed-step RK4 solution with step params.dt; returns steps+1 states.
Trajectory integrate_ode(const ModelSpec& model, const RateParams& params, const CompartmentState& init,
                         int steps);

/// Disease-free equilibria: every infected compartment is zero and the rest
/// is split between S and (if the model has one) R.
struct EquilibriumFamily {
    ModelKind model;
    std::vector<std::size_t> zero_compartments;
    bool has_recovered = false;
    std::string description;

    /// Member of the family with `recovered` individuals in R (0 when the model
    /// has no R compartment).
    CompartmentState point(double population, double recovered = 0.0) const;
};

EquilibriumFamily dfe_points(ModelKind model);

/// Endemic point of SIIDR with mu = 0: (0, I*, gamma1 I*/gamma2, 0).
CompartmentState siid_endemic_point(double infected, double gamma1, double gamma2);

using Matrix2 = std::array<std::array<double, 2>, 2>;

/// F V^-1 for the (I, I_D) block at the DFE (N, 0, 0, 0).
/// Throws SingularMatrix if mu = 0 or gamma2 = 0.
Matrix2 next_generation_matrix(const RateParams& params);

/// Largest eigenvalue of a real 2x2 matrix with real spectrum.
double spectral_radius(const Matrix2& m);

/// (beta / mu) * susceptible_fraction. Throws InvalidInput if mu = 0.
double r0(const RateParams& params, double susceptible_fraction = 1.0);

struct LyapunovSeries {
    std::vector<double> value;       ///< L_t = I + I_D
    std::vector<double> derivative;  ///< beta S I / N - mu I
    bool derivative_nonpositive = true;
    bool nonincreasing = true;
};

/// L = I + I_D along an SIIDR trajectory. `tolerance` is the per-step slack
/// allowed before `nonincreasing` is cleared.
LyapunovSeries lyapunov_series(const Trajectory& trajectory, const RateParams& params,
                               double tolerance = 1e-9);

}  // namespace spm
