#include "spm/trajectory.hpp"

#include <iomanip>
#include <ostream>

#include "spm/errors.hpp"

namespace spm {

Trajectory::Trajectory(ModelKind model, double dt)
    : model_(model), dt_(dt), width_(ModelSpec::get(model).size()) {}

std::span<const double> Trajectory::row(std::size_t step) const {
    if (step >= size()) throw InvalidInput("trajectory step out of range");
    return std::span<const double>(data_).subspan(step * width_, width_);
}

void Trajectory::push_back(std::span<const double> counts) {
    if (counts.size() != width_) throw InvalidInput("row width does not match model");
    data_.insert(data_.end(), counts.begin(), counts.end());
}

double cumulative_infected(ModelKind model, std::span<const double> x) {
    switch (model) {
        case ModelKind::SI:
        case ModelKind::SIS: return x[1];
        case ModelKind::SIR: return x[1] + x[2];
        case ModelKind::SEIR: return x[2] + x[3];
        case ModelKind::SIIDR: return x[1] + x[2] + x[3];
    }
    return 0.0;
}

double Trajectory::cumulative_infected(std::size_t step) const {
    return spm::cumulative_infected(model_, row(step));
}

std::vector<double> Trajectory::cumulative_series() const {
    std::vector<double> out(size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = cumulative_infected(t);
    return out;
}

void Trajectory::write_csv(std::ostream& out, std::optional<int> realization, bool header) const {
    const ModelSpec& spec = ModelSpec::get(model_);
    const auto precision = out.precision(12);
    if (header) {
        if (realization) out << "realization,";
        out << 't';
        for (auto label : spec.compartments) out << ',' << label;
        out << '\n';
    }
    for (std::size_t t = 0; t < size(); ++t) {
        if (realization) out << *realization << ',';
        out << time(t);
        for (double v : row(t)) out << ',' << v;
        out << '\n';
    }
    out.precision(precision);
}

}  // namespace spm
