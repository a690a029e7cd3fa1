#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace diffbal {

using Vertex = std::size_t;

// Undirected, simple, connected graph on vertices 0..n-1.
//
// Neighbor lists are sorted ascending with no duplicates or self-loops, and the
// adjacency relation is symmetric. All of this, plus connectivity, is checked
// when the graph is built; a Graph value is immutable afterwards.
class Graph {
public:
    // Validates and takes ownership of the adjacency lists. Lists need not be
    // sorted on input; duplicates are collapsed. Throws Error(Validation) on a
    // self-loop, an out-of-range index, an asymmetric entry, or a disconnected graph.
    explicit Graph(std::vector<std::vector<Vertex>> adjacency);

    // Builds from an undirected edge list. Duplicate edges are collapsed.
    static Graph from_edges(std::size_t n, std::span<const std::pair<Vertex, Vertex>> edges);

    std::size_t size() const noexcept { return adjacency_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }

    std::span<const Vertex> neighbors(Vertex v) const { return adjacency_[v]; }
    std::size_t degree(Vertex v) const { return adjacency_[v].size(); }
    std::size_t max_degree() const noexcept { return max_degree_; }
    std::size_t min_degree() const noexcept { return min_degree_; }
    bool is_regular() const noexcept { return max_degree_ == min_degree_; }
    bool has_edge(Vertex u, Vertex v) const;

private:
    std::vector<std::vector<Vertex>> adjacency_;
    std::size_t edge_count_ = 0;
    std::size_t max_degree_ = 0;
    std::size_t min_degree_ = 0;
};

// Number of vertices reachable from `start` by BFS.
std::size_t reachable_count(const std::vector<std::vector<Vertex>>& adjacency, Vertex start);

Graph gen_cycle(std::size_t n);
Graph gen_hypercube(std::size_t dim);
Graph gen_star(std::size_t n);
Graph gen_complete(std::size_t n);
Graph gen_torus(std::size_t a, std::size_t b);
Graph gen_path(std::size_t n);

// Simple connected d-regular graph from the pairing (configuration) model with
// full restarts on self-loops, multi-edges, or disconnection. At most
// `kRandomRegularMaxRestarts` attempts are made before Error(GenerationFailure).
inline constexpr int kRandomRegularMaxRestarts = 1'000'000;
Graph gen_random_regular(std::size_t n, std::size_t d, std::uint64_t seed);

// Irregular connected fixture: a uniformly random recursive spanning tree plus
// each remaining pair independently with probability `extra_edge_prob`.
Graph gen_random_connected(std::size_t n, double extra_edge_prob, std::uint64_t seed);

// Parses the edge-list text format: one "u v" pair per line, 0-based indices,
// '#' comment lines and blank lines ignored. n is one more than the largest
// index seen. Errors carry the 1-based line number.
Graph load_edge_list(std::string_view text);

}  // namespace diffbal
