#include "diffbal/graph.hpp"

#include "diffbal/error.hpp"
#include "diffbal/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <numeric>
#include <queue>
#include <string>

namespace diffbal {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace

std::size_t reachable_count(const std::vector<std::vector<Vertex>>& adjacency, Vertex start) {
    if (adjacency.empty()) return 0;
    std::vector<char> seen(adjacency.size(), 0);
    std::queue<Vertex> frontier;
    frontier.push(start);
    seen[start] = 1;
    std::size_t count = 1;
    while (!frontier.empty()) {
        const Vertex v = frontier.front();
        frontier.pop();
        for (Vertex u : adjacency[v]) {
            if (!seen[u]) {
                seen[u] = 1;
                ++count;
                frontier.push(u);
            }
        }
    }
    return count;
}

Graph::Graph(std::vector<std::vector<Vertex>> adjacency) : adjacency_(std::move(adjacency)) {
    const std::size_t n = adjacency_.size();
    if (n == 0) fail(ErrorKind::Validation, "graph has no vertices");

    std::size_t degree_sum = 0;
    for (Vertex v = 0; v < n; ++v) {
        auto& list = adjacency_[v];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
        for (Vertex u : list) {
            if (u >= n) fail(ErrorKind::Validation, fmt::format("vertex {} has out-of-range neighbor {}", v, u));
            if (u == v) fail(ErrorKind::Validation, fmt::format("self-loop at vertex {}", v));
        }
        degree_sum += list.size();
    }
    for (Vertex v = 0; v < n; ++v) {
        for (Vertex u : adjacency_[v]) {
            if (!std::binary_search(adjacency_[u].begin(), adjacency_[u].end(), v)) {
                fail(ErrorKind::Validation, fmt::format("asymmetric adjacency: {} -> {} without {} -> {}", v, u, u, v));
            }
        }
    }
    if (reachable_count(adjacency_, 0) != n) fail(ErrorKind::Validation, "graph is disconnected");

    edge_count_ = degree_sum / 2;
    auto [lo, hi] = std::minmax_element(adjacency_.begin(), adjacency_.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    min_degree_ = lo->size();
    max_degree_ = hi->size();
}

Graph Graph::from_edges(std::size_t n, std::span<const std::pair<Vertex, Vertex>> edges) {
    std::vector<std::vector<Vertex>> adjacency(n);
    for (auto [u, v] : edges) {
        if (u >= n || v >= n) fail(ErrorKind::Validation, fmt::format("edge ({}, {}) out of range for n={}", u, v, n));
        adjacency[u].push_back(v);
        adjacency[v].push_back(u);
    }
    return Graph(std::move(adjacency));
}

bool Graph::has_edge(Vertex u, Vertex v) const {
    const auto& list = adjacency_[u];
    return std::binary_search(list.begin(), list.end(), v);
}

Graph gen_cycle(std::size_t n) {
    if (n < 3) fail(ErrorKind::InvalidParameter, fmt::format("cycle needs n >= 3, got {}", n));
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (Vertex i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return Graph::from_edges(n, edges);
}

Graph gen_path(std::size_t n) {
    if (n < 2) fail(ErrorKind::InvalidParameter, fmt::format("path needs n >= 2, got {}", n));
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (Vertex i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return Graph::from_edges(n, edges);
}

Graph gen_hypercube(std::size_t dim) {
    if (dim == 0) fail(ErrorKind::InvalidParameter, "hypercube needs dim >= 1");
    if (dim > 20) fail(ErrorKind::InvalidParameter, fmt::format("hypercube dim {} too large", dim));
    const std::size_t n = std::size_t{1} << dim;
    std::vector<std::vector<Vertex>> adjacency(n);
    for (Vertex v = 0; v < n; ++v) {
        for (std::size_t b = 0; b < dim; ++b) adjacency[v].push_back(v ^ (std::size_t{1} << b));
    }
    return Graph(std::move(adjacency));
}

Graph gen_star(std::size_t n) {
    if (n < 2) fail(ErrorKind::InvalidParameter, fmt::format("star needs n >= 2, got {}", n));
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (Vertex i = 1; i < n; ++i) edges.emplace_back(0, i);
    return Graph::from_edges(n, edges);
}

Graph gen_complete(std::size_t n) {
    if (n < 2) fail(ErrorKind::InvalidParameter, fmt::format("complete graph needs n >= 2, got {}", n));
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (Vertex i = 0; i < n; ++i)
        for (Vertex j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return Graph::from_edges(n, edges);
}

Graph gen_torus(std::size_t a, std::size_t b) {
    if (a < 3 || b < 3) fail(ErrorKind::InvalidParameter, fmt::format("torus needs both sides >= 3, got {}x{}", a, b));
    std::vector<std::pair<Vertex, Vertex>> edges;
    auto id = [b](std::size_t i, std::size_t j) { return i * b + j; };
    for (std::size_t i = 0; i < a; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            edges.emplace_back(id(i, j), id((i + 1) % a, j));
            edges.emplace_back(id(i, j), id(i, (j + 1) % b));
        }
    }
    return Graph::from_edges(a * b, edges);
}

Graph gen_random_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
    if (d >= n) fail(ErrorKind::InvalidParameter, fmt::format("random regular needs d < n, got n={} d={}", n, d));
    if ((n * d) % 2 != 0) fail(ErrorKind::InvalidParameter, fmt::format("n*d must be even, got n={} d={}", n, d));
    if (d == 0) fail(ErrorKind::InvalidParameter, "d = 0 gives a disconnected graph");

    Rng rng(seed);
    std::vector<Vertex> points(n * d);
    std::vector<std::vector<Vertex>> adjacency(n);
    for (int attempt = 0; attempt < kRandomRegularMaxRestarts; ++attempt) {
        for (std::size_t i = 0; i < points.size(); ++i) points[i] = i / d;
        // Fisher-Yates; consecutive points are then paired.
        for (std::size_t i = points.size(); i > 1; --i) {
            std::swap(points[i - 1], points[uniform_below(rng, i)]);
        }
        for (auto& list : adjacency) list.clear();
        bool simple = true;
        for (std::size_t i = 0; i < points.size() && simple; i += 2) {
            const Vertex u = points[i];
            const Vertex v = points[i + 1];
            if (u == v || std::find(adjacency[u].begin(), adjacency[u].end(), v) != adjacency[u].end()) {
                simple = false;
                break;
            }
            adjacency[u].push_back(v);
            adjacency[v].push_back(u);
        }
        if (!simple || reachable_count(adjacency, 0) != n) continue;
        return Graph(adjacency);
    }
    fail(ErrorKind::GenerationFailure,
         fmt::format("no simple connected {}-regular graph on {} vertices after {} restarts", d, n,
                     kRandomRegularMaxRestarts));
}

Graph gen_random_connected(std::size_t n, double extra_edge_prob, std::uint64_t seed) {
    if (n < 2) fail(ErrorKind::InvalidParameter, fmt::format("random connected graph needs n >= 2, got {}", n));
    if (!(extra_edge_prob >= 0.0 && extra_edge_prob <= 1.0)) {
        fail(ErrorKind::InvalidParameter, fmt::format("edge probability {} outside [0, 1]", extra_edge_prob));
    }
    Rng rng(seed);
    std::vector<std::pair<Vertex, Vertex>> edges;
    for (Vertex v = 1; v < n; ++v) edges.emplace_back(static_cast<Vertex>(uniform_below(rng, v)), v);
    for (Vertex u = 0; u < n; ++u) {
        for (Vertex v = u + 1; v < n; ++v) {
            if (uniform01(rng) < extra_edge_prob) edges.emplace_back(u, v);
        }
    }
    return Graph::from_edges(n, edges);
}

Graph load_edge_list(std::string_view text) {
    std::vector<std::pair<Vertex, Vertex>> edges;
    std::size_t n = 0;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') continue;
        line = line.substr(first);

        Vertex ends[2];
        for (auto& e : ends) {
            const auto start = line.find_first_not_of(" \t\r");
            if (start == std::string_view::npos) {
                fail(ErrorKind::Parse, fmt::format("line {}: expected two vertex indices", line_no));
            }
            line = line.substr(start);
            auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), e);
            if (ec != std::errc{} || (ptr != line.data() + line.size() && *ptr != ' ' && *ptr != '\t' && *ptr != '\r')) {
                fail(ErrorKind::Parse, fmt::format("line {}: non-numeric token", line_no));
            }
            line = line.substr(static_cast<std::size_t>(ptr - line.data()));
        }
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            fail(ErrorKind::Parse, fmt::format("line {}: trailing tokens after edge", line_no));
        }
        if (ends[0] == ends[1]) fail(ErrorKind::Validation, fmt::format("line {}: self-loop at vertex {}", line_no, ends[0]));
        edges.emplace_back(ends[0], ends[1]);
        n = std::max({n, ends[0] + 1, ends[1] + 1});
    }
    if (edges.empty()) fail(ErrorKind::Validation, "edge list contains no edges");
    return Graph::from_edges(n, edges);
}

}  // namespace diffbal
