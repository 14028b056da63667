#pragma once

// Kernels shared by the OpenMP and serial reference paths of graph-engine.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <vector>

#include "spm/graph.hpp"
#include "spm/rng.hpp"

namespace spm::detail {

inline std::vector<double> power_start_vector(std::size_t n, std::uint64_t seed) {
    Engine engine = make_engine(seed, 0x5eed);
    std::vector<double> x(n);
    for (double& v : x) v = 0.5 + uniform01(engine);
    return x;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void normalize(std::vector<double>& x) {
    const double norm = std::sqrt(dot(x, x));
    for (double& v : x) v /= norm;
}

inline double adjacency_row_product(const Graph& g, NodeId u, const std::vector<double>& x) {
    double s = 0.0;
    for (NodeId v : g.neighbors(u)) s += x[v];
    return s;
}

struct BfsResult {
    std::size_t eccentricity = 0;
    std::uint64_t distance_sum = 0;
};

/// BFS from `source`; `dist` is caller-owned scratch of size n filled with -1.
inline BfsResult bfs_from(const Graph& g, NodeId source, std::vector<int>& dist, std::vector<NodeId>& queue) {
    BfsResult r;
    queue.clear();
    queue.push_back(source);
    dist[source] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId u = queue[head];
        const int du = dist[u];
        r.distance_sum += static_cast<std::uint64_t>(du);
        r.eccentricity = std::max<std::size_t>(r.eccentricity, static_cast<std::size_t>(du));
        for (NodeId v : g.neighbors(u)) {
            if (dist[v] < 0) {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    for (NodeId u : queue) dist[u] = -1;
    return r;
}

/// Fills the fields of GraphStats that do not need BFS or eigenvalues.
void basic_stats(const Graph& g, GraphStats& s, std::vector<std::size_t>& component_of,
                 std::vector<NodeId>& largest);

}  // namespace spm::detail
