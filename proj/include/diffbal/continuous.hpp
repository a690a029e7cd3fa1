#pragma once

#include "diffbal/round_matrix.hpp"

#include <optional>
#include <span>
#include <vector>

namespace diffbal {

// chi^(T) = chi^(0) P^T. Throws Error(InvalidInput) on negative entries or a
// dimension mismatch.
std::vector<double> continuous_run(std::span<const double> x0, const RoundMatrix& p, std::size_t steps);

// Real-valued threshold log(4 disc0 N / eps) / (1 - lambda), natural log.
double convergence_time_real(const RoundMatrix& p, double disc0, double eps, std::optional<double> lambda = {});

// Smallest integer step count at or above convergence_time_real. lambda is
// computed with second_eigenvalue when not supplied. Throws Error(Unsupported)
// for non-symmetric P, Error(NotIrreducible) for reducible P, and
// Error(NonConvergent) when lambda = 1.
std::size_t convergence_time(const RoundMatrix& p, double disc0, double eps, std::optional<double> lambda = {});

}  // namespace diffbal
