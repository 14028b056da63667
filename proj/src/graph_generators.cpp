#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "spm/errors.hpp"
#include "spm/graph.hpp"
#include "spm/rng.hpp"

namespace spm {

namespace {

std::uint64_t pair_key(NodeId u, NodeId v, std::size_t n) {
    if (u > v) std::swap(u, v);
    return static_cast<std::uint64_t>(u) * n + v;
}

NodeId uniform_node(Engine& engine, std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return static_cast<NodeId>(dist(engine));
}

}  // namespace

Graph erdos_renyi(std::size_t n, std::size_t m, std::uint64_t seed) {
    const std::size_t max_edges = n * (n - (n > 0)) / 2;
    if (m > max_edges) throw InvalidInput("G(n, m): m exceeds n(n-1)/2");
    Engine engine = make_engine(seed);
    // Dense requests sample the (smaller) complement instead.
    const bool complement = m > max_edges / 2;
    const std::size_t draws = complement ? max_edges - m : m;
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(draws * 2);
    std::vector<Edge> edges;
    edges.reserve(m);
    while (chosen.size() < draws) {
        const NodeId u = uniform_node(engine, n);
        const NodeId v = uniform_node(engine, n);
        if (u == v) continue;
        if (chosen.insert(pair_key(u, v, n)).second && !complement) {
            edges.push_back({std::min(u, v), std::max(u, v)});
        }
    }
    if (complement) {
        for (NodeId u = 0; u < n; ++u)
            for (NodeId v = u + 1; v < n; ++v)
                if (!chosen.count(pair_key(u, v, n))) edges.push_back({u, v});
    }
    return Graph::from_edges(n, std::move(edges));
}

Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m < 1 || m >= n) throw InvalidInput("Barabasi-Albert requires 1 <= m < n");
    Engine engine = make_engine(seed);
    std::vector<Edge> edges;
    edges.reserve(m * (n - m));
    std::vector<NodeId> targets(m);
    for (NodeId i = 0; i < m; ++i) targets[i] = i;
    std::vector<NodeId> repeated;
    repeated.reserve(2 * m * (n - m));
    std::vector<NodeId> picked;
    for (auto source = static_cast<NodeId>(m); source < n; ++source) {
        for (NodeId t : targets) edges.push_back({t, source});
        repeated.insert(repeated.end(), targets.begin(), targets.end());
        repeated.insert(repeated.end(), m, source);
        // m distinct targets, each chosen with probability proportional to degree.
        picked.clear();
        std::uniform_int_distribution<std::size_t> pick(0, repeated.size() - 1);
        while (picked.size() < m) {
            const NodeId t = repeated[pick(engine)];
            if (std::find(picked.begin(), picked.end(), t) == picked.end()) picked.push_back(t);
        }
        targets = picked;
    }
    return Graph::from_edges(n, std::move(edges));
}

Graph watts_strogatz(std::size_t n, std::size_t k, double p, std::uint64_t seed) {
    if (k % 2 != 0) throw InvalidInput("Watts-Strogatz requires even k");
    if (k >= n) throw InvalidInput("Watts-Strogatz requires k < n");
    if (p < 0.0 || p > 1.0) throw InvalidInput("rewiring probability must lie in [0, 1]");
    Engine engine = make_engine(seed);
    std::vector<std::unordered_set<NodeId>> adj(n);
    auto link = [&](NodeId u, NodeId v) {
        adj[u].insert(v);
        adj[v].insert(u);
    };
    for (std::size_t j = 1; j <= k / 2; ++j)
        for (NodeId u = 0; u < n; ++u) link(u, static_cast<NodeId>((u + j) % n));
    for (std::size_t j = 1; j <= k / 2; ++j) {
        for (NodeId u = 0; u < n; ++u) {
            const auto v = static_cast<NodeId>((u + j) % n);
            if (uniform01(engine) >= p) continue;
            if (adj[u].size() >= n - 1) continue;
            NodeId w = uniform_node(engine, n);
            while (w == u || adj[u].count(w)) w = uniform_node(engine, n);
            adj[u].erase(v);
            adj[v].erase(u);
            link(u, w);
        }
    }
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v : adj[u])
            if (u < v) edges.push_back({u, v});
    return Graph::from_edges(n, std::move(edges));
}

bool is_graphical(std::vector<std::size_t> degrees) {
    std::uint64_t sum = 0;
    for (auto d : degrees) {
        if (d >= degrees.size() && !degrees.empty()) return false;
        sum += d;
    }
    if (sum % 2 != 0) return false;
    std::sort(degrees.begin(), degrees.end(), std::greater<>());
    const std::size_t n = degrees.size();
    std::vector<std::uint64_t> suffix(n + 1, 0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + degrees[i];
    // Erdos-Gallai: sum_{i<=k} d_i <= k(k-1) + sum_{i>k} min(d_i, k) for every k.
    std::uint64_t left = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        left += degrees[k - 1];
        // First index whose degree is below k (degrees are non-increasing).
        const auto below = static_cast<std::size_t>(
            std::partition_point(degrees.begin(), degrees.end(), [k](std::size_t d) { return d >= k; }) -
            degrees.begin());
        const std::size_t split = std::max(below, k);
        const std::uint64_t right = static_cast<std::uint64_t>(k) * (k - 1) +
                                    static_cast<std::uint64_t>(split - k) * k + suffix[split];
        if (left > right) return false;
    }
    return true;
}

Graph configuration_model(const std::vector<std::size_t>& degrees, std::uint64_t seed) {
    if (!is_graphical(degrees)) throw InvalidInput("degree sequence is not graphical");
    Engine engine = make_engine(seed);
    std::vector<NodeId> stubs;
    for (NodeId u = 0; u < degrees.size(); ++u) stubs.insert(stubs.end(), degrees[u], u);
    std::shuffle(stubs.begin(), stubs.end(), engine);
    std::vector<Edge> edges;
    edges.reserve(stubs.size() / 2);
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) edges.push_back({stubs[i], stubs[i + 1]});
    return Graph::from_edges(degrees.size(), std::move(edges));
}

std::vector<std::size_t> power_law_degrees(std::size_t n, double exponent, std::size_t min_degree,
                                           std::uint64_t seed) {
    if (n < 2) throw InvalidInput("power-law degree sequence needs n >= 2");
    if (min_degree < 1 || min_degree >= n) throw InvalidInput("min_degree must lie in [1, n-1]");
    if (!(exponent > 1.0)) throw InvalidInput("power-law exponent must be > 1");
    Engine engine = make_engine(seed);
    std::vector<double> cdf;
    double total = 0.0;
    for (std::size_t k = min_degree; k < n; ++k) {
        total += std::pow(static_cast<double>(k), -exponent);
        cdf.push_back(total);
    }
    for (double& c : cdf) c /= total;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<std::size_t> degrees(n);
        std::size_t sum = 0;
        for (auto& d : degrees) {
            const double u = uniform01(engine);
            d = min_degree + static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            d = std::min(d, n - 1);
            sum += d;
        }
        if (sum % 2 != 0) {
            auto& d = degrees[uniform_node(engine, n)];
            d = d + 1 < n ? d + 1 : d - 1;
        }
        if (is_graphical(degrees)) return degrees;
    }
    throw InvalidInput("could not draw a graphical power-law degree sequence");
}

Graph generate(std::size_t n, const GeneratorParams& params, std::uint64_t seed) {
    struct Visitor {
        std::size_t n;
        std::uint64_t seed;
        Graph operator()(const ErParams& p) const { return erdos_renyi(n, p.m, seed); }
        Graph operator()(const BaParams& p) const { return barabasi_albert(n, p.m, seed); }
        Graph operator()(const WsParams& p) const { return watts_strogatz(n, p.k, p.p, seed); }
        Graph operator()(const CmParams& p) const {
            if (p.degrees.size() != n) throw InvalidInput("degree sequence length must equal n");
            return configuration_model(p.degrees, seed);
        }
        Graph operator()(const SfParams& p) const {
            return configuration_model(power_law_degrees(n, p.exponent, p.min_degree, seed), seed + 1);
        }
    };
    return std::visit(Visitor{n, seed}, params);
}

}  // namespace spm
