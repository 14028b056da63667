#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spm/models.hpp"
#include "spm/trace.hpp"

namespace spm {

/// Observed cumulative curve on the simulation grid t0 + k dt, k = 1..T.
struct FitTarget {
    std::vector<double> observed;
    double dt = 1.0;
    long population = 0;
    long initial_infected = 1;

    int steps() const noexcept { return static_cast<int>(observed.size()); }
    void validate() const;
};

/// Resamples the trace onto T points with dt = (t_end - t0) / T. Population defaults
/// to the number of contacted IPs.
FitTarget make_target(const EpidemicTrace& trace, int T, long population = 0, long initial_infected = 1);

/// sim - real, elementwise. Throws InvalidInput on length mismatch.
std::vector<double> residuals(std::span<const double> simulated, std::span<const double> observed);

inline constexpr double kSigmaFloor = 1e-12;

struct AicValue {
    double aic = 0.0;
    double residual_variance = 0.0;  ///< sum(e^2) / n before flooring
    bool perfect_fit = false;        ///< variance fell below the floor
};

/// 2k + n ln(max(sum(e^2)/n, floor)).
AicValue aic(std::span<const double> residuals, int k);

/// i / (n + 1) for i = 1..n.
std::vector<double> equidistant_open_unit(int n);

/// Number of equidistant values per rate. Only the rates a model uses are varied.
struct GridSpec {
    int beta = 20;
    int mu = 20;
    int gamma1 = 10;
    int gamma2 = 10;
    int sigma = 10;

    /// "beta=20,mu=20,gamma1=10,gamma2=10"; unspecified rates keep their defaults.
    static GridSpec parse(std::string_view text);
    std::string to_string() const;
    void validate() const;

    /// Grid points of `model`, in lexicographic order of its free parameters.
    std::vector<RateParams> points(ModelKind model, double dt) const;
};

/// Free parameters of `model` in canonical order, e.g. SIIDR: beta, mu, gamma1, gamma2.
std::vector<std::string_view> free_parameter_names(ModelKind model);
std::vector<double> free_parameter_values(ModelKind model, const RateParams& params);

struct FitResult {
    ModelKind model = ModelKind::SI;
    RateParams params{};
    double aic = 0.0;
    double residual_variance = 0.0;
    std::size_t n = 0;
    bool perfect_fit = false;
};

/// Cross-model ordering: lower AIC, then fewer free parameters, then model name.
bool ranks_before(const FitResult& a, const FitResult& b);

struct SelectConfig {
    int realizations = 10;  ///< h
    std::uint64_t seed = 0;
};

/// Mean of h chain-binomial realizations (seeds seed..seed+h-1) against the target.
FitResult evaluate_fit(const FitTarget& target, ModelKind model, const RateParams& params, const SelectConfig& config);

struct SelectionReport {
    std::vector<FitResult> per_model;  ///< minimum-AIC fit per model, in input order
    std::size_t best = 0;              ///< index into per_model
    std::size_t evaluations = 0;

    const FitResult& best_fit() const { return per_model.at(best); }
};

/// Exhaustive grid search. Every grid point uses the same seeds, so models and
/// points are compared on common random numbers. Ties: lower AIC, then fewer
/// parameters, then model name; within a model, lexicographically smaller params.
SelectionReport select_model(const FitTarget& target, std::span<const ModelKind> models, const GridSpec& grid,
                             const SelectConfig& config);

namespace reference {
SelectionReport select_model(const FitTarget& target, std::span<const ModelKind> models, const GridSpec& grid,
                             const SelectConfig& config);
}

nlohmann::ordered_json selection_json(const SelectionReport& report, const std::string& trace_name);
/// `trace,model,min_aic`
void write_selection_csv(std::ostream& out, const SelectionReport& report, const std::string& trace_name,
                         bool header = true);

}  // namespace spm
