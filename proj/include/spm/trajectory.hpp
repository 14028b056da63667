#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "spm/models.hpp"

namespace spm {

/// Dense per-step compartment counts of one model run (or an ensemble mean).
class Trajectory {
public:
    Trajectory(ModelKind model, double dt);

    ModelKind model() const noexcept { return model_; }
    double dt() const noexcept { return dt_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return width_ ? data_.size() / width_ : 0; }
    bool empty() const noexcept { return data_.empty(); }

    double time(std::size_t step) const noexcept { return static_cast<double>(step) * dt_; }
    std::span<const double> row(std::size_t step) const;
    double at(std::size_t step, std::size_t compartment) const { return row(step)[compartment]; }

    void reserve(std::size_t steps) { data_.reserve(steps * width_); }
    void push_back(std::span<const double> counts);

    /// Individuals who have ever been observed infectious up to `step`.
    double cumulative_infected(std::size_t step) const;
    std::vector<double> cumulative_series() const;

    std::span<const double> raw() const noexcept { return data_; }
    std::span<double> raw_mut() noexcept { return data_; }
    void resize(std::size_t steps) { data_.resize(steps * width_); }

    /// CSV with header `t,<labels>`; adds a leading `realization` column when given.
    void write_csv(std::ostream& out, std::optional<int> realization = std::nullopt,
                   bool header = true) const;

private:
    ModelKind model_;
    double dt_;
    std::size_t width_;
    std::vector<double> data_;
};

/// Cumulative-infected count for a single row: I for SI/SIS, I+R for SIR/SEIR,
/// I+I_D+R for SIIDR.
double cumulative_infected(ModelKind model, std::span<const double> counts);

}  // namespace spm
