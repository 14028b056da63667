// Serial reference kernels for graph-engine. Kept for differential tests and
// the benchmark target; they must follow the same arithmetic order as the
// OpenMP versions.

#include <cmath>

#include "../graph_internal.hpp"
#include "spm/errors.hpp"
#include "spm/graph.hpp"

namespace spm::reference {

double leading_eigenvalue(const Graph& graph, double tol, std::uint64_t seed) {
    const std::size_t n = graph.node_count();
    if (n == 0) throw InvalidInput("leading eigenvalue of an empty graph");
    if (!(tol > 0.0)) throw InvalidInput("tolerance must be > 0");
    std::vector<double> x = detail::power_start_vector(n, seed);
    detail::normalize(x);
    std::vector<double> y(n);
    double previous = 0.0;
    for (int iter = 0; iter < kPowerIterationMaxIter; ++iter) {
        for (std::size_t u = 0; u < n; ++u) y[u] = detail::adjacency_row_product(graph, static_cast<NodeId>(u), x);
        const double rayleigh = detail::dot(x, y);
        if (iter > 0 && std::abs(rayleigh - previous) <= tol) return rayleigh;
        previous = rayleigh;
        for (std::size_t i = 0; i < n; ++i) x[i] += y[i];
        detail::normalize(x);
    }
    throw ConvergenceError("power iteration did not converge");
}

GraphStats stats(const Graph& graph, double eigen_tol) {
    GraphStats s;
    std::vector<std::size_t> component_of;
    std::vector<NodeId> largest;
    detail::basic_stats(graph, s, component_of, largest);
    if (s.nodes == 0) return s;
    std::vector<int> dist(s.nodes, -1);
    std::vector<NodeId> queue;
    std::uint64_t total = 0;
    for (NodeId source : largest) {
        const auto r = detail::bfs_from(graph, source, dist, queue);
        s.diameter = std::max(s.diameter, r.eccentricity);
        total += r.distance_sum;
    }
    const double c = static_cast<double>(largest.size());
    s.avg_path_length = largest.size() > 1 ? static_cast<double>(total) / (c * (c - 1.0)) : 0.0;
    s.lambda_a = reference::leading_eigenvalue(graph, eigen_tol);
    return s;
}

}  // namespace spm::reference
