#include "diffbal/round_matrix.hpp"

#include "diffbal/error.hpp"
#include "diffbal/rng.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <string>

namespace diffbal {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

bool strongly_connected(const std::vector<std::vector<MatrixEntry>>& rows) {
    const std::size_t n = rows.size();
    std::vector<std::vector<Vertex>> forward(n), backward(n);
    for (Vertex v = 0; v < n; ++v) {
        for (const auto& e : rows[v]) {
            if (e.target == v) continue;
            forward[v].push_back(e.target);
            backward[e.target].push_back(v);
        }
    }
    // reachable_count treats lists as directed adjacency, which is what we want here.
    return reachable_count(forward, 0) == n && reachable_count(backward, 0) == n;
}

std::vector<double> row_times(std::span<const double> x, const std::vector<std::vector<MatrixEntry>>& rows) {
    std::vector<double> out(rows.size(), 0.0);
    for (Vertex v = 0; v < rows.size(); ++v) {
        const double xv = x[v];
        if (xv == 0.0) continue;
        for (const auto& e : rows[v]) out[e.target] += xv * e.probability;
    }
    return out;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

StationaryDistribution solve_stationary(const std::vector<std::vector<MatrixEntry>>& rows) {
    const std::size_t n = rows.size();
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));

    // Power iteration on (P + I)/2, which has the same stationary vector as P
    // but is aperiodic.
    constexpr int kMaxIterations = 200'000;
    for (int it = 0; it < kMaxIterations; ++it) {
        auto next = row_times(pi, rows);
        const double residual = sup_distance(next, pi);
        for (std::size_t i = 0; i < n; ++i) next[i] = 0.5 * (next[i] + pi[i]);
        pi = std::move(next);
        if (residual <= 1e-16) break;
    }
    double total = 0.0;
    for (double p : pi) total += p;
    for (double& p : pi) p /= total;

    if (sup_distance(row_times(pi, rows), pi) > kStationaryResidual && n <= kDenseSizeLimit) {
        // Slow mixing; solve (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Vertex v = 0; v < n; ++v) {
            for (const auto& e : rows[v]) a(static_cast<Eigen::Index>(e.target), static_cast<Eigen::Index>(v)) += e.probability;
        }
        a -= Eigen::MatrixXd::Identity(a.rows(), a.cols());
        a.row(a.rows() - 1).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.rows());
        rhs(rhs.size() - 1) = 1.0;
        Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
        for (std::size_t i = 0; i < n; ++i) pi[i] = std::max(0.0, sol(static_cast<Eigen::Index>(i)));
        total = 0.0;
        for (double p : pi) total += p;
        for (double& p : pi) p /= total;
    }
    const double residual = sup_distance(row_times(pi, rows), pi);
    if (residual > kStationaryResidual) {
        throw NonConvergedError(fmt::format("stationary distribution residual {:.3e} above {:.0e}", residual,
                                            kStationaryResidual),
                                0.0, residual);
    }
    return {std::move(pi)};
}

}  // namespace

RoundMatrix::RoundMatrix(std::size_t n, std::span<const Triplet> entries) : rows_(n), prefix_(n) {
    if (n == 0) fail(ErrorKind::Validation, "matrix has dimension 0");
    std::vector<double> self(n, 0.0);
    std::vector<char> has_self(n, 0);
    for (const auto& t : entries) {
        if (t.from >= n || t.to >= n) {
            fail(ErrorKind::Validation, fmt::format("entry ({}, {}) out of range for n={}", t.from, t.to, n));
        }
        if (!(t.probability >= 0.0) || !std::isfinite(t.probability)) {
            fail(ErrorKind::Validation, fmt::format("row {}: invalid entry {} at column {}", t.from, t.probability, t.to));
        }
        if (t.from == t.to) {
            if (has_self[t.from]) fail(ErrorKind::Validation, fmt::format("row {}: duplicate diagonal entry", t.from));
            has_self[t.from] = 1;
            self[t.from] = t.probability;
        } else if (t.probability > 0.0) {
            rows_[t.from].push_back({t.to, t.probability});
        }
    }
    for (Vertex v = 0; v < n; ++v) {
        auto& row = rows_[v];
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.target < b.target; });
        for (std::size_t i = 1; i < row.size(); ++i) {
            if (row[i].target == row[i - 1].target) {
                fail(ErrorKind::Validation, fmt::format("row {}: duplicate entry at column {}", v, row[i].target));
            }
        }
        if (self[v] > 0.0) row.push_back({v, self[v]});

        auto& pre = prefix_[v];
        pre.reserve(row.size() + 1);
        pre.push_back(0.0);
        double sum = 0.0;
        for (const auto& e : row) {
            sum += e.probability;
            pre.push_back(sum);
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            fail(ErrorKind::Validation, fmt::format("row {} sums to {:.17g}, expected 1", v, sum));
        }
        pre.back() = 1.0;
        nonzeros_ += row.size();
    }
    classify();
}

double RoundMatrix::probability(Vertex v, Vertex u) const {
    const auto& row = rows_[v];
    if (u == v) return (!row.empty() && row.back().target == v) ? row.back().probability : 0.0;
    const auto end = (!row.empty() && row.back().target == v) ? row.end() - 1 : row.end();
    auto it = std::lower_bound(row.begin(), end, u, [](const MatrixEntry& e, Vertex x) { return e.target < x; });
    return (it != end && it->target == u) ? it->probability : 0.0;
}

void RoundMatrix::classify() {
    const std::size_t n = size();
    flags_ = {};
    flags_.symmetric = true;
    flags_.lazy = true;
    for (Vertex v = 0; v < n && (flags_.symmetric || flags_.lazy); ++v) {
        if (self_probability(v) < 0.5 - kLazyTolerance) flags_.lazy = false;
        for (const auto& e : rows_[v]) {
            if (std::abs(e.probability - probability(e.target, v)) > kSymmetryTolerance) flags_.symmetric = false;
        }
    }
    flags_.irreducible = strongly_connected(rows_);
    if (!flags_.irreducible) return;

    if (flags_.symmetric) {
        stationary_ = StationaryDistribution{std::vector<double>(n, 1.0 / static_cast<double>(n))};
    } else {
        stationary_ = solve_stationary(rows_);
    }
    const auto& pi = stationary_->pi;
    flags_.reversible = true;
    for (Vertex v = 0; v < n && flags_.reversible; ++v) {
        for (const auto& e : rows_[v]) {
            if (std::abs(pi[v] * e.probability - pi[e.target] * probability(e.target, v)) > kDetailedBalanceTolerance) {
                flags_.reversible = false;
                break;
            }
        }
    }
}

const StationaryDistribution& RoundMatrix::stationary() const {
    if (!stationary_) fail(ErrorKind::NotIrreducible, "stationary distribution requested for a reducible chain");
    return *stationary_;
}

double RoundMatrix::min_positive_entry() const {
    double m = 1.0;
    for (const auto& row : rows_)
        for (const auto& e : row) m = std::min(m, e.probability);
    return m;
}

double RoundMatrix::min_positive_flow() const {
    const auto& pi = stationary().pi;
    double m = 1.0;
    for (Vertex v = 0; v < rows_.size(); ++v)
        for (const auto& e : rows_[v]) m = std::min(m, pi[v] * e.probability);
    return m;
}

std::vector<Triplet> RoundMatrix::triplets() const {
    std::vector<Triplet> out;
    out.reserve(nonzeros_);
    for (Vertex v = 0; v < rows_.size(); ++v)
        for (const auto& e : rows_[v]) out.push_back({v, e.target, e.probability});
    return out;
}

std::vector<double> RoundMatrix::dense() const {
    const std::size_t n = size();
    std::vector<double> out(n * n, 0.0);
    for (Vertex v = 0; v < n; ++v)
        for (const auto& e : rows_[v]) out[v * n + e.target] = e.probability;
    return out;
}

RoundMatrix lazy_rw_matrix(const Graph& g) {
    if (!g.is_regular()) {
        fail(ErrorKind::InvalidInput,
             fmt::format("lazy-rw requires a regular graph (degrees range {}..{})", g.min_degree(), g.max_degree()));
    }
    const double edge = 1.0 / (2.0 * static_cast<double>(g.max_degree()));
    std::vector<Triplet> entries;
    for (Vertex v = 0; v < g.size(); ++v) {
        for (Vertex u : g.neighbors(v)) entries.push_back({v, u, edge});
        entries.push_back({v, v, 0.5});
    }
    return RoundMatrix(g.size(), entries);
}

RoundMatrix metropolis_matrix(const Graph& g) {
    std::vector<Triplet> entries;
    for (Vertex v = 0; v < g.size(); ++v) {
        double out = 0.0;
        for (Vertex u : g.neighbors(v)) {
            const double p = 1.0 / (2.0 * static_cast<double>(std::max(g.degree(v), g.degree(u))));
            entries.push_back({v, u, p});
            out += p;
        }
        entries.push_back({v, v, 1.0 - out});
    }
    return RoundMatrix(g.size(), entries);
}

RoundMatrix custom_matrix(std::size_t n, std::span<const Triplet> entries) { return RoundMatrix(n, entries); }

RoundMatrix identity_matrix(std::size_t n) {
    std::vector<Triplet> entries;
    for (Vertex v = 0; v < n; ++v) entries.push_back({v, v, 1.0});
    return RoundMatrix(n, entries);
}

namespace {

struct WeightedGraph {
    Graph graph;
    std::vector<std::vector<double>> weights;  // parallel to graph.neighbors(v)
};

WeightedGraph random_weighted_graph(std::size_t n, Rng& rng) {
    const double extra = 0.1 + 0.4 * uniform01(rng);
    Graph g = gen_random_connected(n, extra, rng());
    // Symmetric weights keyed by unordered pair.
    std::vector<std::vector<double>> w(n);
    for (Vertex v = 0; v < n; ++v) w[v].assign(g.degree(v), 0.0);
    for (Vertex v = 0; v < n; ++v) {
        const auto nb = g.neighbors(v);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            const Vertex u = nb[i];
            if (u < v) continue;
            const double weight = 0.1 + 0.9 * uniform01(rng);
            w[v][i] = weight;
            const auto back = g.neighbors(u);
            w[u][static_cast<std::size_t>(std::lower_bound(back.begin(), back.end(), v) - back.begin())] = weight;
        }
    }
    return {std::move(g), std::move(w)};
}

}  // namespace

RoundMatrix random_symmetric_lazy_chain(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    auto [g, w] = random_weighted_graph(n, rng);
    double max_strength = 0.0;
    for (const auto& row : w) {
        double s = 0.0;
        for (double x : row) s += x;
        max_strength = std::max(max_strength, s);
    }
    const double scale = 1.0 / (2.0 * max_strength * (1.0 + uniform01(rng)));
    std::vector<Triplet> entries;
    for (Vertex v = 0; v < n; ++v) {
        const auto nb = g.neighbors(v);
        double out = 0.0;
        for (std::size_t i = 0; i < nb.size(); ++i) {
            entries.push_back({v, nb[i], w[v][i] * scale});
            out += w[v][i] * scale;
        }
        entries.push_back({v, v, 1.0 - out});
    }
    return RoundMatrix(n, entries);
}

RoundMatrix random_reversible_lazy_chain(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    auto [g, w] = random_weighted_graph(n, rng);
    // P_{v,u} = w_{vu} / (2 D_v (1 + a_v)); pi_v is proportional to D_v (1 + a_v).
    std::vector<Triplet> entries;
    for (Vertex v = 0; v < n; ++v) {
        double strength = 0.0;
        for (double x : w[v]) strength += x;
        const double denom = 2.0 * strength * (1.0 + uniform01(rng));
        const auto nb = g.neighbors(v);
        double out = 0.0;
        for (std::size_t i = 0; i < nb.size(); ++i) {
            entries.push_back({v, nb[i], w[v][i] / denom});
            out += w[v][i] / denom;
        }
        entries.push_back({v, v, 1.0 - out});
    }
    return RoundMatrix(n, entries);
}

std::vector<double> power_apply(std::span<const double> x, const RoundMatrix& p, std::size_t t) {
    if (x.size() != p.size()) {
        fail(ErrorKind::InvalidInput, fmt::format("vector length {} does not match matrix size {}", x.size(), p.size()));
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next(x.size());
    for (std::size_t step = 0; step < t; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (Vertex v = 0; v < cur.size(); ++v) {
            const double xv = cur[v];
            if (xv == 0.0) continue;
            for (const auto& e : p.row(v)) next[e.target] += xv * e.probability;
        }
        cur.swap(next);
    }
    return cur;
}

std::vector<double> power_apply_column(std::span<const double> y, const RoundMatrix& p, std::size_t t) {
    if (y.size() != p.size()) {
        fail(ErrorKind::InvalidInput, fmt::format("vector length {} does not match matrix size {}", y.size(), p.size()));
    }
    std::vector<double> cur(y.begin(), y.end());
    std::vector<double> next(y.size());
    for (std::size_t step = 0; step < t; ++step) {
        for (Vertex v = 0; v < cur.size(); ++v) {
            double s = 0.0;
            for (const auto& e : p.row(v)) s += e.probability * cur[e.target];
            next[v] = s;
        }
        cur.swap(next);
    }
    return cur;
}

double second_eigenvalue(const RoundMatrix& p, std::size_t dense_limit) {
    if (!p.symmetric()) fail(ErrorKind::Unsupported, "second_eigenvalue requires a symmetric matrix");
    if (!p.irreducible()) fail(ErrorKind::NotIrreducible, "second_eigenvalue requires an irreducible matrix");
    const std::size_t n = p.size();
    if (n > dense_limit) {
        fail(ErrorKind::SizeLimit, fmt::format("dense eigensolver limited to n <= {}, got {}", dense_limit, n));
    }
    if (n == 1) return 0.0;
    const auto idx = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(idx, idx);
    for (Vertex v = 0; v < n; ++v)
        for (const auto& e : p.row(v)) a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(e.target)) = e.probability;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) fail(ErrorKind::NonConverged, "symmetric eigensolver did not converge");
    std::vector<double> mags(n);
    for (Eigen::Index i = 0; i < idx; ++i) mags[static_cast<std::size_t>(i)] = std::abs(solver.eigenvalues()(i));
    std::sort(mags.begin(), mags.end(), std::greater<>());
    return std::min(mags[1], 1.0);
}

RoundMatrix parse_matrix(std::string_view text) {
    std::size_t line_no = 0;
    std::optional<std::size_t> n;
    std::vector<Triplet> entries;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string line(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::vector<std::string> tokens;
        std::size_t pos = first;
        while (pos < line.size()) {
            const auto end = line.find_first_of(" \t\r", pos);
            tokens.push_back(line.substr(pos, end - pos));
            if (end == std::string::npos) break;
            pos = line.find_first_not_of(" \t\r", end);
            if (pos == std::string::npos) break;
        }
        auto to_index = [&](const std::string& s) {
            std::size_t value = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
            if (ec != std::errc{} || ptr != s.data() + s.size()) {
                fail(ErrorKind::Parse, fmt::format("line {}: '{}' is not a vertex index", line_no, s));
            }
            return value;
        };
        if (!n) {
            if (tokens.size() != 1) fail(ErrorKind::Parse, fmt::format("line {}: expected header with dimension n", line_no));
            n = to_index(tokens[0]);
            continue;
        }
        if (tokens.size() != 3) fail(ErrorKind::Parse, fmt::format("line {}: expected 'v u p'", line_no));
        double prob = 0.0;
        try {
            std::size_t used = 0;
            prob = std::stod(tokens[2], &used);
            if (used != tokens[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(ErrorKind::Parse, fmt::format("line {}: '{}' is not a probability", line_no, tokens[2]));
        }
        entries.push_back({to_index(tokens[0]), to_index(tokens[1]), prob});
    }
    if (!n) fail(ErrorKind::Parse, "matrix text has no header line");
    return RoundMatrix(*n, entries);
}

std::string format_matrix(const RoundMatrix& p) {
    std::string out = fmt::format("{}\n", p.size());
    for (const auto& t : p.triplets()) out += fmt::format("{} {} {:.17g}\n", t.from, t.to, t.probability);
    return out;
}

}  // namespace diffbal
