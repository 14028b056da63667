#include "spm/abc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "parallel.hpp"
#include "spm/errors.hpp"
#include "spm/rng.hpp"
#include "spm/statistics.hpp"
#include "spm/stochastic.hpp"

namespace spm {

namespace {

// RNG stream tags; each proposal index gets its own substream.
constexpr std::uint64_t kRejectionStream = 0xA0;
constexpr std::uint64_t kPilotStream = 0xA1;
constexpr std::uint64_t kGenerationStream = 0xB000;
constexpr std::uint64_t kTruncationStream = 0xC000;

// Proposals are simulated in fixed-size batches and accepted in index order, so the
// result does not depend on the thread count.
constexpr std::size_t kBatch = 256;

Theta prior_draw(Engine& e) {
    Theta t;
    for (double& v : t) v = uniform01(e);
    return t;
}

bool in_unit_box(const Eigen::Vector4d& x) {
    return (x.array() >= 0.0).all() && (x.array() <= 1.0).all();
}

Eigen::Vector4d as_vector(const Theta& t) { return Eigen::Vector4d(t[0], t[1], t[2], t[3]); }

Eigen::Vector4d standard_normal(Engine& e) {
    std::normal_distribution<double> n;
    return Eigen::Vector4d(n(e), n(e), n(e), n(e));
}

std::vector<long> siidr_init(const FitTarget& target) {
    return {target.population - target.initial_infected, target.initial_infected, 0, 0};
}

// Truncated-normal kernel centred on one particle of the previous generation.
struct Kernel {
    Eigen::Vector4d center;
    Eigen::Matrix4d chol;      // lower factor L, covariance = L L^T
    double log_norm = 0.0;     // log of 1 / ((2 pi)^2 |L| Z)
};

Kernel make_kernel(const Theta& center, const Eigen::Matrix4d& cov, Engine& truncation_engine, int samples) {
    Kernel k;
    k.center = as_vector(center);
    Eigen::LLT<Eigen::Matrix4d> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("kernel covariance is not positive definite");
    k.chol = llt.matrixL();
    int inside = 0;
    for (int s = 0; s < samples; ++s) inside += in_unit_box(k.center + k.chol * standard_normal(truncation_engine));
    const double z = static_cast<double>(std::max(inside, 1)) / samples;
    const double log_det_l = k.chol.diagonal().array().log().sum();
    k.log_norm = -2.0 * std::log(2.0 * M_PI) - log_det_l - std::log(z);
    return k;
}

double kernel_log_density(const Kernel& k, const Eigen::Vector4d& x) {
    const Eigen::Vector4d y = k.chol.triangularView<Eigen::Lower>().solve(x - k.center);
    return k.log_norm - 0.5 * y.squaredNorm();
}

struct Proposal {
    Theta theta{};
    double p_hat = 0.0;
    double distance = 0.0;
};

}  // namespace

RateParams to_rates(const Theta& theta, double dt) {
    RateParams p;
    p.beta = theta[0];
    p.mu = theta[1];
    p.gamma1 = theta[2];
    p.gamma2 = theta[3];
    p.dt = dt;
    return p;
}

double ParticlePopulation::weight_sum() const {
    double s = 0.0;
    for (const auto& p : particles) s += p.weight;
    return s;
}

double distance(std::span<const double> simulated, std::span<const double> observed) {
    if (simulated.size() != observed.size()) throw InvalidInput("distance needs curves on the same grid");
    double d = 0.0;
    for (std::size_t i = 0; i < simulated.size(); ++i) {
        const double e = simulated[i] - observed[i];
        d += e * e;
    }
    return d;
}

double simulate_distance(const FitTarget& target, const Theta& theta, std::uint64_t seed) {
    const auto init = siidr_init(target);
    const auto sim = simulate_cumulative(ModelSpec::get(ModelKind::SIIDR), to_rates(theta, target.dt), init,
                                         target.steps(), seed);
    return distance(std::span<const double>(sim).subspan(1), target.observed);
}

ParticlePopulation abc_rejection(const FitTarget& target, double epsilon, int n, std::uint64_t seed,
                                 std::size_t budget) {
    if (n < 1) throw InvalidInput("number of particles must be >= 1");
    if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
    target.validate();
    ParticlePopulation pop;
    pop.epsilon = epsilon;
    std::vector<Proposal> batch(kBatch);
    std::size_t next = 0;
    while (pop.particles.size() < static_cast<std::size_t>(n)) {
        if (next >= budget) throw BudgetExhausted("rejection sampler exhausted its draw budget", epsilon);
        const std::size_t size = std::min(kBatch, budget - next);
        detail::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t b = 0; b < static_cast<std::int64_t>(size); ++b) {
            slot.run([&] {
                Engine e = make_engine(seed, kRejectionStream, next + static_cast<std::uint64_t>(b));
                auto& prop = batch[static_cast<std::size_t>(b)];
                prop.theta = prior_draw(e);
                prop.distance = simulate_distance(target, prop.theta, e());
            });
        }
        slot.rethrow();
        for (std::size_t b = 0; b < size && pop.particles.size() < static_cast<std::size_t>(n); ++b) {
            ++pop.draws;
            if (batch[b].distance <= epsilon) pop.particles.push_back({batch[b].theta, 0.0, batch[b].distance});
        }
        next += size;
    }
    for (auto& p : pop.particles) p.weight = 1.0 / n;
    pop.acceptance_rate = static_cast<double>(n) / static_cast<double>(pop.draws);
    return pop;
}

void AbcConfig::validate() const {
    if (generations < 1) throw InvalidInput("generations must be >= 1");
    if (particles < 2) throw InvalidInput("particles must be >= 2");
    if (neighbors < 2 || neighbors > particles) throw InvalidInput("neighbors must lie in [2, particles]");
    if (n_sims < 1) throw InvalidInput("n_sims must be >= 1");
    if (budget_factor < 1) throw InvalidInput("budget factor must be >= 1");
    if (pilot_draws < 1) throw InvalidInput("pilot draws must be >= 1");
    if (!(pilot_quantile > 0.0 && pilot_quantile <= 1.0)) throw InvalidInput("pilot quantile must lie in (0, 1]");
    if (!(tolerance_quantile > 0.0 && tolerance_quantile < 1.0)) {
        throw InvalidInput("tolerance quantile must lie in (0, 1)");
    }
    if (truncation_samples < 1) throw InvalidInput("truncation samples must be >= 1");
}

Eigen::Matrix4d mnn_covariance(const std::vector<Particle>& particles, const Theta& center, int neighbors) {
    if (neighbors < 2 || static_cast<std::size_t>(neighbors) > particles.size()) {
        throw InvalidInput("neighbors must lie in [2, particles]");
    }
    const Eigen::Vector4d c = as_vector(center);
    std::vector<std::pair<double, std::size_t>> order(particles.size());
    for (std::size_t i = 0; i < particles.size(); ++i) {
        order[i] = {(as_vector(particles[i].theta) - c).squaredNorm(), i};
    }
    const auto m = static_cast<std::size_t>(neighbors);
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m - 1), order.end());
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    for (std::size_t k = 0; k < m; ++k) mean += as_vector(particles[order[k].second].theta);
    mean /= static_cast<double>(m);
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
    for (std::size_t k = 0; k < m; ++k) {
        const Eigen::Vector4d d = as_vector(particles[order[k].second].theta) - mean;
        cov += d * d.transpose();
    }
    cov *= 2.0 / static_cast<double>(m - 1);
    if (Eigen::LLT<Eigen::Matrix4d>(cov).info() != Eigen::Success) cov += 1e-10 * Eigen::Matrix4d::Identity();
    return cov;
}

std::vector<ParticlePopulation> abc_smc_mnn(const FitTarget& target, const AbcConfig& config) {
    config.validate();
    target.validate();
    const auto n = static_cast<std::size_t>(config.particles);
    const std::size_t budget = static_cast<std::size_t>(config.budget_factor) * n;

    // Pilot run fixes the first tolerance.
    std::vector<double> pilot(static_cast<std::size_t>(config.pilot_draws));
    detail::ExceptionSlot pilot_slot;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < config.pilot_draws; ++i) {
        pilot_slot.run([&] {
            Engine e = make_engine(config.seed, kPilotStream, static_cast<std::uint64_t>(i));
            const Theta theta = prior_draw(e);
            pilot[static_cast<std::size_t>(i)] = simulate_distance(target, theta, e());
        });
    }
    pilot_slot.rethrow();
    double epsilon = quantile(pilot, config.pilot_quantile);
    if (!(epsilon > 0.0)) {
        // All-zero pilot quantile: fall back to the smallest positive pilot distance.
        double smallest = std::numeric_limits<double>::infinity();
        for (double d : pilot) {
            if (d > 0.0) smallest = std::min(smallest, d);
        }
        epsilon = std::isfinite(smallest) ? smallest : 1.0;
    }

    std::vector<ParticlePopulation> history;
    std::vector<Kernel> kernels;
    std::vector<double> cumulative_weight;
    std::vector<Proposal> batch(kBatch);

    for (int g = 0; g < config.generations; ++g) {
        const ParticlePopulation* prev = history.empty() ? nullptr : &history.back();
        if (prev) {
            // One kernel per source particle, its covariance from that particle's neighbours.
            kernels.assign(n, Kernel{});
            detail::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
            for (std::int64_t l = 0; l < static_cast<std::int64_t>(n); ++l) {
                slot.run([&] {
                    const auto& src = prev->particles[static_cast<std::size_t>(l)];
                    Engine te = make_engine(config.seed, kTruncationStream + static_cast<std::uint64_t>(g),
                                            static_cast<std::uint64_t>(l));
                    kernels[static_cast<std::size_t>(l)] =
                        make_kernel(src.theta, mnn_covariance(prev->particles, src.theta, config.neighbors), te,
                                    config.truncation_samples);
                });
            }
            slot.rethrow();
            cumulative_weight.resize(n);
            double acc = 0.0;
            for (std::size_t l = 0; l < n; ++l) cumulative_weight[l] = acc += prev->particles[l].weight;
        }

        ParticlePopulation pop;
        pop.generation = g;
        pop.epsilon = epsilon;
        std::vector<double> p_hat;
        std::size_t next = 0;
        const std::uint64_t stream = kGenerationStream + static_cast<std::uint64_t>(g);
        while (pop.particles.size() < n) {
            if (next >= budget) {
                throw BudgetExhausted("generation " + std::to_string(g) + " could not accept " + std::to_string(n) +
                                          " particles within " + std::to_string(budget) + " proposals",
                                      epsilon);
            }
            const std::size_t size = std::min(kBatch, budget - next);
            detail::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
            for (std::int64_t b = 0; b < static_cast<std::int64_t>(size); ++b) {
                slot.run([&] {
                    Engine e = make_engine(config.seed, stream, next + static_cast<std::uint64_t>(b));
                    Proposal& prop = batch[static_cast<std::size_t>(b)];
                    if (!prev) {
                        prop.theta = prior_draw(e);
                    } else {
                        const double u = uniform01(e) * cumulative_weight.back();
                        const auto it = std::upper_bound(cumulative_weight.begin(), cumulative_weight.end(), u);
                        const std::size_t l = std::min<std::size_t>(
                            static_cast<std::size_t>(it - cumulative_weight.begin()), n - 1);
                        const Kernel& k = kernels[l];
                        Eigen::Vector4d x;
                        int tries = 0;
                        do {
                            if (++tries > 1000000) throw NumericalError("kernel truncation never hit the prior box");
                            x = k.center + k.chol * standard_normal(e);
                        } while (!in_unit_box(x));
                        prop.theta = {x[0], x[1], x[2], x[3]};
                    }
                    int hits = 0;
                    double best = std::numeric_limits<double>::infinity();
                    for (int s = 0; s < config.n_sims; ++s) {
                        const double d = simulate_distance(target, prop.theta, e());
                        hits += d < epsilon;
                        best = std::min(best, d);
                    }
                    prop.p_hat = static_cast<double>(hits) / config.n_sims;
                    prop.distance = best;
                });
            }
            slot.rethrow();
            for (std::size_t b = 0; b < size && pop.particles.size() < n; ++b) {
                ++pop.draws;
                if (batch[b].p_hat > 0.0) {
                    pop.particles.push_back({batch[b].theta, 0.0, batch[b].distance});
                    p_hat.push_back(batch[b].p_hat);
                }
            }
            next += size;
        }
        pop.acceptance_rate = static_cast<double>(n) / static_cast<double>(pop.draws);

        // Uniform prior: weight = P_hat / sum_l w_l K_l(theta), evaluated in log space.
#pragma omp parallel for schedule(static)
        for (std::int64_t j = 0; j < static_cast<std::int64_t>(n); ++j) {
            auto& particle = pop.particles[static_cast<std::size_t>(j)];
            const double ph = p_hat[static_cast<std::size_t>(j)];
            if (!prev) {
                particle.weight = ph;
                continue;
            }
            const Eigen::Vector4d x = as_vector(particle.theta);
            double max_log = -std::numeric_limits<double>::infinity();
            std::vector<double> terms(n);
            for (std::size_t l = 0; l < n; ++l) {
                const double w = prev->particles[l].weight;
                terms[l] = w > 0.0 ? std::log(w) + kernel_log_density(kernels[l], x)
                                   : -std::numeric_limits<double>::infinity();
                max_log = std::max(max_log, terms[l]);
            }
            double s = 0.0;
            for (double t : terms) s += std::exp(t - max_log);
            particle.weight = std::log(ph) - (max_log + std::log(s));  // log weight for now
        }
        if (prev) {
            // Normalise from log weights without overflow.
            double max_log = -std::numeric_limits<double>::infinity();
            for (const auto& p : pop.particles) max_log = std::max(max_log, p.weight);
            for (auto& p : pop.particles) p.weight = std::exp(p.weight - max_log);
        }
        const double total = pop.weight_sum();
        for (auto& p : pop.particles) p.weight /= total;

        std::vector<double> distances(n);
        for (std::size_t j = 0; j < n; ++j) distances[j] = pop.particles[j].distance;
        epsilon = quantile(distances, config.tolerance_quantile);
        history.push_back(std::move(pop));
    }
    return history;
}

std::vector<std::pair<int, int>> PosteriorSummary::strongly_correlated(double threshold) const {
    std::vector<std::pair<int, int>> out;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            if (std::abs(correlation[a][b]) > threshold) out.emplace_back(a, b);
        }
    }
    return out;
}

double weighted_quantile(std::vector<std::pair<double, double>> value_weight, double q) {
    if (value_weight.empty()) throw InvalidInput("weighted quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile must lie in [0, 1]");
    std::sort(value_weight.begin(), value_weight.end());
    double total = 0.0;
    for (const auto& [v, w] : value_weight) total += w;
    if (!(total > 0.0)) throw InvalidInput("weights must have a positive sum");
    double acc = 0.0;
    for (const auto& [v, w] : value_weight) {
        acc += w / total;
        if (acc >= q - 1e-12) return v;
    }
    return value_weight.back().first;
}

PosteriorSummary posterior_summary(const ParticlePopulation& population) {
    const auto& ps = population.particles;
    if (ps.empty()) throw InvalidInput("posterior summary of an empty population");
    const double total = population.weight_sum();
    if (!(total > 0.0)) throw InvalidInput("population weights must have a positive sum");
    PosteriorSummary s;
    double sum_sq = 0.0;
    for (const auto& p : ps) {
        const double w = p.weight / total;
        sum_sq += w * w;
        for (int a = 0; a < 4; ++a) s.mean[a] += w * p.theta[a];
    }
    s.effective_sample_size = 1.0 / sum_sq;
    std::array<std::array<double, 4>, 4> cov{};
    for (const auto& p : ps) {
        const double w = p.weight / total;
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) cov[a][b] += w * (p.theta[a] - s.mean[a]) * (p.theta[b] - s.mean[b]);
        }
    }
    for (int a = 0; a < 4; ++a) s.std[a] = std::sqrt(std::max(0.0, cov[a][a]));
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            const double denom = s.std[a] * s.std[b];
            s.correlation[a][b] = a == b ? 1.0 : denom > 0.0 ? cov[a][b] / denom : 0.0;
        }
    }
    for (int a = 0; a < 4; ++a) {
        std::vector<std::pair<double, double>> vw;
        vw.reserve(ps.size());
        for (const auto& p : ps) vw.emplace_back(p.theta[a], p.weight);
        s.q025[a] = weighted_quantile(vw, 0.025);
        s.median[a] = weighted_quantile(vw, 0.5);
        s.q975[a] = weighted_quantile(std::move(vw), 0.975);
    }
    return s;
}

double r0_from_posterior(const PosteriorSummary& summary) {
    if (!(summary.mean[1] > 0.0)) throw InvalidInput("posterior mean of mu must be > 0");
    return summary.mean[0] / summary.mean[1];
}

void write_population_csv(std::ostream& out, const std::vector<ParticlePopulation>& populations) {
    const auto precision = out.precision(12);
    out << "generation,beta,mu,gamma1,gamma2,weight,distance\n";
    for (const auto& pop : populations) {
        for (const auto& p : pop.particles) {
            out << pop.generation << ',' << p.theta[0] << ',' << p.theta[1] << ',' << p.theta[2] << ',' << p.theta[3]
                << ',' << p.weight << ',' << p.distance << '\n';
        }
    }
    out.precision(precision);
}

nlohmann::ordered_json posterior_json(const PosteriorSummary& summary, const std::vector<ParticlePopulation>& history,
                                      double dt) {
    nlohmann::ordered_json j;
    j["dt"] = dt;
    auto& params = j["parameters"];
    for (int a = 0; a < 4; ++a) {
        params[kThetaNames[a]] = {{"mean", summary.mean[a]},
                                  {"std", summary.std[a]},
                                  {"q025", summary.q025[a]},
                                  {"median", summary.median[a]},
                                  {"q975", summary.q975[a]}};
    }
    try {
        j["r0"] = r0_from_posterior(summary);
    } catch (const Error&) {
        j["r0"] = nullptr;
    }
    j["effective_sample_size"] = summary.effective_sample_size;
    j["correlation"] = summary.correlation;
    auto& flagged = j["correlated_pairs"] = nlohmann::ordered_json::array();
    for (const auto& [a, b] : summary.strongly_correlated()) {
        flagged.push_back({{"a", kThetaNames[a]}, {"b", kThetaNames[b]}, {"rho", summary.correlation[a][b]}});
    }
    auto& gens = j["generations"] = nlohmann::ordered_json::array();
    for (const auto& pop : history) {
        gens.push_back({{"generation", pop.generation},
                        {"epsilon", pop.epsilon},
                        {"acceptance_rate", pop.acceptance_rate},
                        {"draws", pop.draws}});
    }
    return j;
}

}  // namespace spm
