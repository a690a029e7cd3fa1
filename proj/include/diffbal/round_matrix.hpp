#pragma once

#include "diffbal/graph.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diffbal {

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kLazyTolerance = 1e-12;
inline constexpr double kDetailedBalanceTolerance = 1e-10;
inline constexpr double kStationaryResidual = 1e-10;
inline constexpr std::size_t kDenseSizeLimit = 4096;

struct MatrixEntry {
    Vertex target;
    double probability;
};

struct Triplet {
    Vertex from;
    Vertex to;
    double probability;
};

struct MatrixFlags {
    bool symmetric = false;
    bool lazy = false;
    bool irreducible = false;
    bool reversible = false;
};

struct StationaryDistribution {
    std::vector<double> pi;
};

// Row-stochastic round matrix in interval order.
//
// Row v stores only strictly positive entries: off-diagonal targets in
// ascending index order, then the self-loop last (if positive). The prefix
// sums of a row split [0, 1) into half-open intervals, one per entry, in that
// order; the final prefix sum is pinned to exactly 1. Classification flags and
// the stationary distribution (when irreducible) are computed once at
// construction and the value is immutable afterwards.
class RoundMatrix {
public:
    // Validates a list of (from, to, probability) entries over n vertices.
    // Zero entries are dropped. Throws Error(Validation) on negative or
    // duplicate entries, out-of-range indices, or a row not summing to 1.
    RoundMatrix(std::size_t n, std::span<const Triplet> entries);

    std::size_t size() const noexcept { return rows_.size(); }
    std::size_t nonzeros() const noexcept { return nonzeros_; }

    std::span<const MatrixEntry> row(Vertex v) const { return rows_[v]; }
    // Size row(v).size() + 1, starting at 0 and ending at exactly 1.
    std::span<const double> prefix(Vertex v) const { return prefix_[v]; }

    double probability(Vertex v, Vertex u) const;
    double self_probability(Vertex v) const { return probability(v, v); }

    const MatrixFlags& flags() const noexcept { return flags_; }
    bool symmetric() const noexcept { return flags_.symmetric; }
    bool lazy() const noexcept { return flags_.lazy; }
    bool irreducible() const noexcept { return flags_.irreducible; }
    bool reversible() const noexcept { return flags_.reversible; }

    // Throws Error(NotIrreducible) for a reducible chain.
    const StationaryDistribution& stationary() const;

    // Smallest stored probability, and smallest pi_v * P_{v,u} over stored entries.
    double min_positive_entry() const;
    double min_positive_flow() const;

    std::vector<Triplet> triplets() const;
    // Dense row-major copy; n*n doubles.
    std::vector<double> dense() const;

private:
    void classify();

    std::vector<std::vector<MatrixEntry>> rows_;
    std::vector<std::vector<double>> prefix_;
    std::size_t nonzeros_ = 0;
    MatrixFlags flags_;
    std::optional<StationaryDistribution> stationary_;
};

// Lazy random walk on a d-regular graph: 1/(2d) on edges, 1/2 on the diagonal.
// Throws Error(InvalidInput) for an irregular graph.
RoundMatrix lazy_rw_matrix(const Graph& g);

// Lazy Metropolis chain: 1/(2 max(d_v, d_u)) on edges, remainder on the diagonal.
RoundMatrix metropolis_matrix(const Graph& g);

RoundMatrix custom_matrix(std::size_t n, std::span<const Triplet> entries);
RoundMatrix identity_matrix(std::size_t n);

// Random lazy chains on a random connected graph over n vertices, for fixtures.
// The symmetric one has uniform pi; the reversible one has pi proportional to
// weighted degree and is generally not symmetric.
RoundMatrix random_symmetric_lazy_chain(std::size_t n, std::uint64_t seed);
RoundMatrix random_reversible_lazy_chain(std::size_t n, std::uint64_t seed);

// x * P^t, as t sparse row-vector products. Throws Error(InvalidInput) on a
// dimension mismatch.
std::vector<double> power_apply(std::span<const double> x, const RoundMatrix& p, std::size_t t);

// P^t * y (column-vector products); column w of P^t is power_apply_column(e_w).
std::vector<double> power_apply_column(std::span<const double> y, const RoundMatrix& p, std::size_t t);

// |lambda_2|: second-largest eigenvalue magnitude of a symmetric irreducible
// chain, from a dense symmetric eigendecomposition.
double second_eigenvalue(const RoundMatrix& p, std::size_t dense_limit = kDenseSizeLimit);

// Matrix text format: header line "n", then "v u p" per positive entry.
// '#' comment lines are ignored.
RoundMatrix parse_matrix(std::string_view text);
std::string format_matrix(const RoundMatrix& p);

}  // namespace diffbal
