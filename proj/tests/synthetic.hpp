#pragma once

// Synthetic SIIDR traces shaped like the small single-thread WannaCry runs:
// 37 hosts, one initial infection, and an observed outbreak of at least 5 hosts.

#include <cstdint>

#include "spm/model_select.hpp"
#include "spm/rng.hpp"
#include "spm/stochastic.hpp"

namespace spm::testing {

struct SyntheticSpec {
    RateParams rates = [] {
        RateParams p;
        p.beta = 0.16;
        p.mu = 0.11;
        p.gamma1 = 0.79;
        p.gamma2 = 0.06;
        p.dt = 0.09;
        return p;
    }();
    long population = 37;
    long initial_infected = 1;
    int steps = 2000;
    double min_final = 5.0;
};

/// First outbreak realization in the stream of `seed`.
inline FitTarget synthetic_siidr_target(std::uint64_t seed, const SyntheticSpec& spec = {}) {
    const std::vector<long> init{spec.population - spec.initial_infected, spec.initial_infected, 0, 0};
    for (std::uint64_t k = 0;; ++k) {
        const auto c = simulate_cumulative(ModelSpec::get(ModelKind::SIIDR), spec.rates, init, spec.steps,
                                           derive_seed(seed, 0x5EED0000 + k));
        if (c.back() >= spec.min_final) {
            FitTarget t;
            t.observed.assign(c.begin() + 1, c.end());
            t.dt = spec.rates.dt;
            t.population = spec.population;
            t.initial_infected = spec.initial_infected;
            return t;
        }
    }
}

}  // namespace spm::testing
