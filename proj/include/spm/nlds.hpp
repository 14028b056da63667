#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spm/graph.hpp"

namespace spm {

/// Per-step probabilities of the graph SIIDR system.
///   alpha_ii    stay infected          alpha_iid   I -> I_D
///   alpha_idi   I_D -> I               alpha_idid  stay dormant
/// The per-step recovery probability is mu = 1 - alpha_ii - alpha_iid.
struct NldsParams {
    double beta_tilde = 0.0;
    double alpha_ii = 1.0;
    double alpha_iid = 0.0;
    double alpha_idi = 0.0;
    double alpha_idid = 1.0;

    double mu() const noexcept { return 1.0 - alpha_ii - alpha_iid; }
    void validate() const;

    /// Unit-step competing-risks discretisation of the rates mu, gamma1 (leaving I)
    /// and gamma2 (leaving I_D).
    static NldsParams from_rates(double beta_tilde, double mu, double gamma1, double gamma2);
};

struct NodeProbabilities {
    double s = 1.0;
    double i = 0.0;
    double id = 0.0;
    double r = 0.0;
};

class NldsState {
public:
    NldsState() = default;
    explicit NldsState(std::vector<NodeProbabilities> nodes);

    /// Everyone susceptible, then the listed nodes set to P_I = 1.
    static NldsState seeded(std::size_t n, const std::vector<NodeId>& infected);

    std::size_t size() const noexcept { return nodes_.size(); }
    const NodeProbabilities& operator[](std::size_t i) const { return nodes_[i]; }
    NodeProbabilities& operator[](std::size_t i) { return nodes_[i]; }
    const std::vector<NodeProbabilities>& nodes() const noexcept { return nodes_; }

    /// Largest |P_S + P_I + P_ID + P_R - 1| over nodes.
    double normalization_error() const noexcept;

private:
    std::vector<NodeProbabilities> nodes_;
};

/// Probability that `node` is not infected this step: prod_j (1 - beta_tilde P_I,j).
double zeta(const NldsState& state, const Graph& graph, double beta_tilde, NodeId node);

/// One synchronous step of the probability system; nodes updated in parallel.
NldsState nlds_step(const NldsState& state, const Graph& graph, const NldsParams& params);

struct NldsTotals {
    double s = 0.0;
    double i = 0.0;
    double id = 0.0;
    double r = 0.0;
    /// Sum of P_I + P_ID over nodes.
    double lyapunov() const noexcept { return i + id; }
};

NldsTotals totals(const NldsState& state);

struct NldsRun {
    std::vector<NldsState> states;  ///< steps + 1 states
    std::vector<NldsTotals> totals;
    /// Whether sum(P_I + P_ID) never rose by more than the tolerance between steps.
    bool lyapunov_nonincreasing = true;
};

NldsRun nlds_run(const NldsState& initial, const Graph& graph, const NldsParams& params, int steps,
                 double lyapunov_tolerance = 1e-10);

struct ThresholdReport {
    double s = 0.0;
    double lambda_a = 0.0;
    bool stable = true;  ///< s <= 1
};

/// s = lambda_A * beta_tilde / mu. Throws InvalidInput if mu <= 0.
ThresholdReport stability_threshold(const Graph& graph, double beta_tilde, double mu, double eigen_tol = 1e-8);
ThresholdReport stability_threshold(double lambda_a, double beta_tilde, double mu);

inline constexpr std::size_t kJacobianMaxNodes = 200;

struct JacobianReport {
    Eigen::MatrixXd matrix;  ///< 3n x 3n, blocks ordered (S, I, I_D)
    std::vector<std::complex<double>> eigenvalues;
    double distance_to_one = 0.0;  ///< min |lambda - 1|
    bool has_unit_eigenvalue = false;
};

/// Jacobian of the reduced (S, I, I_D) system at the equilibrium with P_S = x_s,
/// P_I = P_ID = 0, with its full spectrum. Throws InvalidInput when n > 200.
JacobianReport jacobian(const Graph& graph, const NldsParams& params, double x_s = 1.0,
                        double unit_tolerance = 1e-8);

enum class AgentLabel : std::uint8_t { S = 0, I = 1, ID = 2, R = 3 };

struct AgentRun {
    std::vector<std::array<std::size_t, 4>> counts;  ///< per step: S, I, I_D, R
    std::size_t final_recovered() const { return counts.back()[3]; }
};

/// Discrete-state Monte Carlo of the graph SIIDR process. A susceptible node with
/// k infected neighbours is infected with probability 1 - (1 - beta_tilde)^k.
/// When stop_when_extinct is set, the run ends early once no node is I or I_D.
AgentRun agent_simulate(const Graph& graph, const NldsParams& params, const std::vector<NodeId>& initially_infected,
                        int steps, std::uint64_t seed, bool stop_when_extinct = false);

/// Initial infection for sweeps: an absolute node count or a fraction of nodes.
struct InitialInfection {
    enum class Kind { Count, Fraction } kind = Kind::Count;
    double value = 1.0;

    std::size_t nodes(std::size_t n) const;
};

/// `count` distinct nodes drawn uniformly with the given seed.
std::vector<NodeId> choose_initial_nodes(std::size_t n, std::size_t count, std::uint64_t seed);

struct SweepConfig {
    double mu = 0.5;
    double gamma1 = 0.5;
    double gamma2 = 0.5;
    int runs = 100;          ///< realizations per s value
    int seeds = 50;          ///< distinct initial-infection draws, reused round robin
    InitialInfection init{};
    int max_steps = 100000;
    std::uint64_t seed = 1;
    double eigen_tol = 1e-8;
};

struct SweepRow {
    double s = 0.0;
    double beta_tilde = 0.0;
    double mean_r = 0.0;  ///< mean final recovered fraction
    double q25 = 0.0;
    double q75 = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
};

/// For each s sets beta_tilde = s * mu_step / lambda_A, where mu_step is the per-step
/// recovery probability of the discretised rates, and aggregates final R fractions.
std::vector<SweepRow> phase_transition_sweep(const Graph& graph, const std::vector<double>& s_values,
                                             const SweepConfig& config);

/// Same, with a precomputed leading eigenvalue.
std::vector<SweepRow> phase_transition_sweep(const Graph& graph, double lambda_a, const std::vector<double>& s_values,
                                             const SweepConfig& config);

/// `s,mean_R,q25,q75,q025,q975`
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

namespace reference {

/// Serial nlds_step with the same per-node arithmetic.
NldsState nlds_step(const NldsState& state, const Graph& graph, const NldsParams& params);

/// Serial sweep, one realization after another.
std::vector<SweepRow> phase_transition_sweep(const Graph& graph, double lambda_a, const std::vector<double>& s_values,
                                             const SweepConfig& config);

}  // namespace reference

}  // namespace spm
