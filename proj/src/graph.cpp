#include "spm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "graph_internal.hpp"
#include "spm/errors.hpp"

namespace spm {

Graph Graph::from_edges(std::size_t n, std::vector<Edge> edges, std::size_t* dropped) {
    std::size_t removed = 0;
    std::vector<Edge> clean;
    clean.reserve(edges.size());
    for (Edge e : edges) {
        if (e.u >= n || e.v >= n) throw InvalidInput("edge endpoint outside [0, n)");
        if (e.u == e.v) {
            ++removed;
            continue;
        }
        if (e.u > e.v) std::swap(e.u, e.v);
        clean.push_back(e);
    }
    std::sort(clean.begin(), clean.end());
    const auto last = std::unique(clean.begin(), clean.end());
    removed += static_cast<std::size_t>(clean.end() - last);
    clean.erase(last, clean.end());
    if (dropped) *dropped += removed;

    Graph g;
    g.offsets_.assign(n + 1, 0);
    for (const Edge& e : clean) {
        ++g.offsets_[e.u + 1];
        ++g.offsets_[e.v + 1];
    }
    std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
    g.adjacency_.resize(2 * clean.size());
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const Edge& e : clean) {
        g.adjacency_[fill[e.u]++] = e.v;
        g.adjacency_[fill[e.v]++] = e.u;
    }
    for (std::size_t u = 0; u < n; ++u) {
        std::sort(g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[u]),
                  g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[u + 1]));
    }
    g.edges_ = std::move(clean);
    return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

double Graph::average_degree() const noexcept {
    const std::size_t n = node_count();
    return n == 0 ? 0.0 : 2.0 * static_cast<double>(edge_count()) / static_cast<double>(n);
}

std::size_t Graph::max_degree() const noexcept {
    std::size_t best = 0;
    for (std::size_t u = 0; u + 1 < offsets_.size(); ++u) best = std::max(best, offsets_[u + 1] - offsets_[u]);
    return best;
}

Graph complete_graph(std::size_t n) {
    std::vector<Edge> edges;
    edges.reserve(n * (n - (n > 0)) / 2);
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v) edges.push_back({u, v});
    return Graph::from_edges(n, std::move(edges));
}

Graph star_graph(std::size_t n) {
    std::vector<Edge> edges;
    for (NodeId v = 1; v < n; ++v) edges.push_back({0, v});
    return Graph::from_edges(n, std::move(edges));
}

Graph path_graph(std::size_t n) {
    std::vector<Edge> edges;
    for (NodeId v = 1; v < n; ++v) edges.push_back({v - 1, v});
    return Graph::from_edges(n, std::move(edges));
}

Graph empty_graph(std::size_t n) { return Graph::from_edges(n, {}); }

EdgelistLoad parse_edgelist(std::istream& in) {
    std::vector<Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    std::size_t lines = 0;
    NodeId max_id = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string a, b;
        if (!(ss >> a)) continue;
        if (!(ss >> b)) throw ParseError("expected two node ids", lineno);
        auto to_id = [&](const std::string& tok) {
            std::size_t pos = 0;
            unsigned long long v = 0;
            try {
                v = std::stoull(tok, &pos);
            } catch (const std::exception&) {
                throw ParseError("invalid node id '" + tok + "'", lineno);
            }
            if (pos != tok.size() || tok.front() == '-' || v > 0xFFFFFFFEULL) {
                throw ParseError("invalid node id '" + tok + "'", lineno);
            }
            return static_cast<NodeId>(v);
        };
        const Edge e{to_id(a), to_id(b)};
        max_id = std::max({max_id, e.u, e.v});
        any = true;
        edges.push_back(e);
        ++lines;
    }
    EdgelistLoad out;
    out.lines = lines;
    out.graph = Graph::from_edges(any ? static_cast<std::size_t>(max_id) + 1 : 0, std::move(edges), &out.dropped);
    return out;
}

EdgelistLoad load_edgelist(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open edge list '" + path.string() + "'");
    return parse_edgelist(in);
}

void write_edgelist(std::ostream& out, const Graph& graph) {
    out << "# nodes " << graph.node_count() << " edges " << graph.edge_count() << '\n';
    for (const Edge& e : graph.edges()) out << e.u << ' ' << e.v << '\n';
}

double leading_eigenvalue(const Graph& graph, double tol, std::uint64_t seed) {
    const std::size_t n = graph.node_count();
    if (n == 0) throw InvalidInput("leading eigenvalue of an empty graph");
    if (!(tol > 0.0)) throw InvalidInput("tolerance must be > 0");
    std::vector<double> x = detail::power_start_vector(n, seed);
    detail::normalize(x);
    std::vector<double> y(n);
    double previous = 0.0;
    const auto count = static_cast<std::int64_t>(n);
    for (int iter = 0; iter < kPowerIterationMaxIter; ++iter) {
#pragma omp parallel for schedule(static)
        for (std::int64_t u = 0; u < count; ++u) {
            y[static_cast<std::size_t>(u)] = detail::adjacency_row_product(graph, static_cast<NodeId>(u), x);
        }
        const double rayleigh = detail::dot(x, y);
        if (iter > 0 && std::abs(rayleigh - previous) <= tol) return rayleigh;
        previous = rayleigh;
        for (std::size_t i = 0; i < n; ++i) x[i] += y[i];
        detail::normalize(x);
    }
    throw ConvergenceError("power iteration did not converge in " + std::to_string(kPowerIterationMaxIter) +
                           " iterations");
}

std::vector<std::size_t> connected_components(const Graph& graph, std::size_t* count) {
    const std::size_t n = graph.node_count();
    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label(n, unset);
    std::vector<NodeId> queue;
    std::size_t next = 0;
    for (NodeId s = 0; s < n; ++s) {
        if (label[s] != unset) continue;
        queue.assign(1, s);
        label[s] = next;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            for (NodeId v : graph.neighbors(queue[head])) {
                if (label[v] == unset) {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        ++next;
    }
    if (count) *count = next;
    return label;
}

TriangleCount count_triangles(const Graph& graph) {
    const auto n = static_cast<std::int64_t>(graph.node_count());
    std::uint64_t triangles = 0;
    std::uint64_t triples = 0;
    // Each triangle u < v < w is found once from its smallest vertex.
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : triangles, triples)
    for (std::int64_t ui = 0; ui < n; ++ui) {
        const auto u = static_cast<NodeId>(ui);
        const auto nu = graph.neighbors(u);
        const std::uint64_t d = nu.size();
        triples += d * (d - (d > 0)) / 2;
        for (NodeId v : nu) {
            if (v <= u) continue;
            const auto nv = graph.neighbors(v);
            auto a = std::upper_bound(nu.begin(), nu.end(), v);
            auto b = std::upper_bound(nv.begin(), nv.end(), v);
            while (a != nu.end() && b != nv.end()) {
                if (*a < *b) {
                    ++a;
                } else if (*b < *a) {
                    ++b;
                } else {
                    ++triangles;
                    ++a;
                    ++b;
                }
            }
        }
    }
    return {triangles, triples};
}

namespace detail {

void basic_stats(const Graph& g, GraphStats& s, std::vector<std::size_t>& component_of,
                 std::vector<NodeId>& largest) {
    s.nodes = g.node_count();
    s.edges = g.edge_count();
    const double n = static_cast<double>(s.nodes);
    s.density = s.nodes > 1 ? 2.0 * static_cast<double>(s.edges) / (n * (n - 1.0)) : 0.0;
    s.density_ordered = s.density / 2.0;
    s.average_degree = g.average_degree();
    s.max_degree = g.max_degree();
    component_of = connected_components(g, &s.components);
    std::vector<std::size_t> sizes(s.components, 0);
    for (std::size_t c : component_of) ++sizes[c];
    std::size_t best = 0;
    for (std::size_t c = 1; c < sizes.size(); ++c)
        if (sizes[c] > sizes[best]) best = c;
    largest.clear();
    if (!sizes.empty()) {
        s.largest_component = sizes[best];
        for (NodeId u = 0; u < s.nodes; ++u)
            if (component_of[u] == best) largest.push_back(u);
    }
    const TriangleCount tc = count_triangles(g);
    s.transitivity = tc.triples ? 3.0 * static_cast<double>(tc.triangles) / static_cast<double>(tc.triples) : 0.0;
}

}  // namespace detail

GraphStats stats(const Graph& graph, double eigen_tol) {
    GraphStats s;
    std::vector<std::size_t> component_of;
    std::vector<NodeId> largest;
    detail::basic_stats(graph, s, component_of, largest);
    if (s.nodes == 0) return s;

    std::size_t diameter = 0;
    std::uint64_t total = 0;
    const auto count = static_cast<std::int64_t>(largest.size());
#pragma omp parallel reduction(max : diameter) reduction(+ : total)
    {
        std::vector<int> dist(s.nodes, -1);
        std::vector<NodeId> queue;
        queue.reserve(largest.size());
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < count; ++i) {
            const auto r = detail::bfs_from(graph, largest[static_cast<std::size_t>(i)], dist, queue);
            diameter = std::max(diameter, r.eccentricity);
            total += r.distance_sum;
        }
    }
    s.diameter = diameter;
    const double c = static_cast<double>(largest.size());
    s.avg_path_length = largest.size() > 1 ? static_cast<double>(total) / (c * (c - 1.0)) : 0.0;
    s.lambda_a = leading_eigenvalue(graph, eigen_tol);
    return s;
}

std::string stats_json(const GraphStats& s, const std::string& label) {
    nlohmann::ordered_json j;
    j["graph"] = label;
    j["nodes"] = s.nodes;
    j["edges"] = s.edges;
    j["lambda_A"] = s.lambda_a;
    j["diameter"] = s.diameter;
    j["transitivity"] = s.transitivity;
    j["density"] = s.density;
    j["density_ordered"] = s.density_ordered;
    j["avg_path_length"] = s.avg_path_length;
    j["components"] = s.components;
    j["largest_component"] = s.largest_component;
    j["average_degree"] = s.average_degree;
    j["max_degree"] = s.max_degree;
    return j.dump(2);
}

std::string stats_csv_header() { return "graph,nodes,edges,lambda_A,diameter,transitivity,density,avg_path_length"; }

std::string stats_csv_row(const GraphStats& s, const std::string& label) {
    std::ostringstream out;
    out << std::setprecision(10) << label << ',' << s.nodes << ',' << s.edges << ',' << s.lambda_a << ','
        << s.diameter << ',' << s.transitivity << ',' << s.density << ',' << s.avg_path_length;
    return out.str();
}

}  // namespace spm
