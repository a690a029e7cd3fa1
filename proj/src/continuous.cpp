#include "diffbal/continuous.hpp"

#include "diffbal/error.hpp"

#include <cmath>
#include <fmt/format.h>

namespace diffbal {

std::vector<double> continuous_run(std::span<const double> x0, const RoundMatrix& p, std::size_t steps) {
    for (std::size_t v = 0; v < x0.size(); ++v) {
        if (!(x0[v] >= 0.0)) throw Error(ErrorKind::InvalidInput, fmt::format("negative load {} at vertex {}", x0[v], v));
    }
    return power_apply(x0, p, steps);
}

double convergence_time_real(const RoundMatrix& p, double disc0, double eps, std::optional<double> lambda) {
    if (!p.symmetric()) throw Error(ErrorKind::Unsupported, "convergence time requires a symmetric matrix");
    if (!p.irreducible()) throw Error(ErrorKind::NotIrreducible, "convergence time requires an irreducible matrix");
    if (!(disc0 > 0.0)) throw Error(ErrorKind::InvalidParameter, fmt::format("initial discrepancy must be > 0, got {}", disc0));
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameter, fmt::format("eps must be > 0, got {}", eps));
    const double lam = lambda ? *lambda : second_eigenvalue(p);
    if (!(lam < 1.0)) throw Error(ErrorKind::NonConvergent, fmt::format("lambda = {} gives no spectral gap", lam));
    const double n = static_cast<double>(p.size());
    return std::log(4.0 * disc0 * n / eps) / (1.0 - lam);
}

std::size_t convergence_time(const RoundMatrix& p, double disc0, double eps, std::optional<double> lambda) {
    const double t = convergence_time_real(p, disc0, eps, lambda);
    return t <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(t));
}

}  // namespace diffbal
