#pragma once

#include "diffbal/round_matrix.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace diffbal {

// max - min over the entries. Throws Error(InvalidInput) on an empty vector.
double discrepancy(std::span<const double> xi);
double discrepancy(std::span<const std::int64_t> xi);

// max_w |a_w - b_w|
double max_deviation(std::span<const std::int64_t> discrete, std::span<const double> continuous);

struct DivergenceReport {
    int p = 2;
    double value = 0.0;
    Vertex argmax = 0;
    // Last time index included in the sum.
    std::size_t t_stop = 0;
    // Largest per-step inner sum at t_stop.
    double residual = 0.0;
    // p = 2 on reversible lazy chains only: an upper bound on the squared mass
    // dropped after t_stop, from the Dirichlet-form telescoping argument.
    std::optional<double> tail_bound;
    // max_w of the accumulated sum raised to 1/p, after each t in 0..t_stop.
    std::vector<double> partial_values;
};

struct DivergenceOptions {
    double tol = 1e-12;
    // 0 selects the default: max(1000, 4 * convergence_time(P, 1, tol)) for
    // symmetric P, 200000 otherwise.
    std::size_t t_max = 0;
    // Stop once the per-step sum stays below tol this many consecutive steps.
    int quiet_steps = 3;
};

// Local p-divergence, p in {1, 2}: max over w of the sum over t >= 0 and over
// ordered pairs (v,u) with P_{v,u} > 0 of |P^t_{v,w} - P^t_{u,w}|^p, to the
// power 1/p. All columns are advanced together by dense powering (O(n^2)
// memory). Throws NonConvergedError if t_max is reached first.
DivergenceReport local_p_divergence(const RoundMatrix& p, int order, const DivergenceOptions& options = {});

// 1/2 sum_{v,u} (f_v - f_u)^2 pi_v P_{v,u}
double dirichlet_form(std::span<const double> f, const RoundMatrix& p, std::span<const double> pi);

struct DirichletCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double error = 0.0;
};

// Compares the Dirichlet form of column w of P^t with
// pi_w (P^{2t}_{w,w} - P^{2t+1}_{w,w}). Requires a reversible P.
DirichletCheck dirichlet_identity_check(const RoundMatrix& p, Vertex w, std::size_t t);

// sqrt(2 max_w pi_w / min_{P_{v,u} > 0} pi_v P_{v,u}); P reversible and lazy.
double psi2_bound_reversible(const RoundMatrix& p);
// sqrt(2 / min_{P_{v,u} > 0} P_{v,u}); P symmetric and lazy.
double psi2_bound_symmetric(const RoundMatrix& p);

// Closed-form discrepancy bounds; log is the natural logarithm.
double bound_theorem1(double degree, std::size_t n);     // 18 sqrt(d log N)
double bound_theorem2(double max_degree, std::size_t n); // 16 sqrt(d_max log N)
double bound_theorem3(double psi2, std::size_t n);       // 4 Psi_2 sqrt(log N)
double bound_theorem5(double psi2, std::size_t n);       // 9 Psi_2 sqrt(log N)

struct BoundReport {
    std::string theorem;
    double bound = 0.0;
    std::size_t n = 0;
    std::optional<double> degree;
    std::optional<double> lambda;
    std::optional<double> psi2;
};

}  // namespace diffbal
