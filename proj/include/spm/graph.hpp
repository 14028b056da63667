#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace spm {

using NodeId = std::uint32_t;

struct Edge {
    NodeId u;
    NodeId v;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable simple undirected graph in CSR form. Edges are stored with u < v.
class Graph {
public:
    Graph() = default;

    /// Builds a simple graph on nodes [0, n). Self-loops and duplicate edges
    /// (in either orientation) are dropped; their count is added to *dropped.
    static Graph from_edges(std::size_t n, std::vector<Edge> edges, std::size_t* dropped = nullptr);

    std::size_t node_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    std::span<const NodeId> neighbors(NodeId u) const {
        return std::span<const NodeId>(adjacency_).subspan(offsets_[u], offsets_[u + 1] - offsets_[u]);
    }
    std::size_t degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
    bool has_edge(NodeId u, NodeId v) const;

    double average_degree() const noexcept;
    std::size_t max_degree() const noexcept;

private:
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> adjacency_;
    std::vector<Edge> edges_;
};

// Generators. All are deterministic given the seed.

/// G(n, m): exactly m distinct edges chosen uniformly.
Graph erdos_renyi(std::size_t n, std::size_t m, std::uint64_t seed);
/// Preferential attachment with m edges per new node; m(n - m) edges.
Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed);
/// Ring lattice with k (even) nearest neighbours, each edge rewired with probability p.
Graph watts_strogatz(std::size_t n, std::size_t k, double p, std::uint64_t seed);
/// Stub matching on a graphical degree sequence; self-loops and multi-edges are
/// removed after matching. Throws InvalidInput on a non-graphical sequence.
Graph configuration_model(const std::vector<std::size_t>& degrees, std::uint64_t seed);
/// Power-law degree sequence P(k) ~ k^-exponent on [min_degree, n-1], even sum.
std::vector<std::size_t> power_law_degrees(std::size_t n, double exponent, std::size_t min_degree,
                                           std::uint64_t seed);
/// Erdos-Gallai test.
bool is_graphical(std::vector<std::size_t> degrees);

Graph complete_graph(std::size_t n);
Graph star_graph(std::size_t n);
Graph path_graph(std::size_t n);
Graph empty_graph(std::size_t n);

struct ErParams {
    std::size_t m = 0;
};
struct BaParams {
    std::size_t m = 1;
};
struct WsParams {
    std::size_t k = 2;
    double p = 0.0;
};
struct CmParams {
    std::vector<std::size_t> degrees;
};
/// Scale-free graph: configuration model on a power-law degree sequence.
struct SfParams {
    double exponent = 2.5;
    std::size_t min_degree = 1;
};

using GeneratorParams = std::variant<ErParams, BaParams, WsParams, CmParams, SfParams>;

Graph generate(std::size_t n, const GeneratorParams& params, std::uint64_t seed);

struct EdgelistLoad {
    Graph graph;
    std::size_t dropped = 0;  ///< duplicate and self-loop lines
    std::size_t lines = 0;    ///< edge lines read
};

/// Whitespace-separated `u v` lines; `#` starts a comment. Node count is max id + 1.
EdgelistLoad load_edgelist(const std::filesystem::path& path);
EdgelistLoad parse_edgelist(std::istream& in);
void write_edgelist(std::ostream& out, const Graph& graph);

inline constexpr int kPowerIterationMaxIter = 10000;

/// Spectral radius of the adjacency matrix by shifted power iteration (A + I),
/// stopping when successive Rayleigh quotients differ by at most tol. Start
/// vector is drawn from `seed`. Throws InvalidInput on an empty graph and
/// ConvergenceError after kPowerIterationMaxIter iterations.
double leading_eigenvalue(const Graph& graph, double tol = 1e-10, std::uint64_t seed = 1);

struct GraphStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t diameter = 0;       ///< over the largest component
    double transitivity = 0.0;
    double density = 0.0;           ///< 2m / (n(n-1))
    double density_ordered = 0.0;   ///< m / (n(n-1)), the ordered-pair convention
    double avg_path_length = 0.0;   ///< over ordered pairs of the largest component
    double lambda_a = 0.0;
    std::size_t components = 0;
    std::size_t largest_component = 0;
    double average_degree = 0.0;
    std::size_t max_degree = 0;
};

/// Size, diameter, transitivity, density, path length and lambda_A. BFS sources run in parallel.
GraphStats stats(const Graph& graph, double eigen_tol = 1e-10);

std::string stats_json(const GraphStats& stats, const std::string& label);
/// `graph,nodes,edges,lambda_A,diameter,transitivity,density,avg_path_length`
std::string stats_csv_header();
std::string stats_csv_row(const GraphStats& stats, const std::string& label);

/// Number of triangles and connected triples (paths of length two).
struct TriangleCount {
    std::uint64_t triangles = 0;
    std::uint64_t triples = 0;
};
TriangleCount count_triangles(const Graph& graph);

/// Component label per node, labels in order of first appearance.
std::vector<std::size_t> connected_components(const Graph& graph, std::size_t* count = nullptr);

namespace reference {

/// Serial power iteration; same start vector and stopping rule as leading_eigenvalue.
double leading_eigenvalue(const Graph& graph, double tol = 1e-10, std::uint64_t seed = 1);
/// Serial all-sources BFS statistics.
GraphStats stats(const Graph& graph, double eigen_tol = 1e-10);

}  // namespace reference

}  // namespace spm
