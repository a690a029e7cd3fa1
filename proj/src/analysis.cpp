#include "diffbal/analysis.hpp"

#include "diffbal/continuous.hpp"
#include "diffbal/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace diffbal {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

template <typename T>
double discrepancy_impl(std::span<const T> xi) {
    if (xi.empty()) fail(ErrorKind::InvalidInput, "discrepancy of an empty vector");
    auto [lo, hi] = std::minmax_element(xi.begin(), xi.end());
    return static_cast<double>(*hi) - static_cast<double>(*lo);
}

double log_n(std::size_t n) {
    if (n < 2) fail(ErrorKind::InvalidInput, fmt::format("bounds need N >= 2, got {}", n));
    return std::log(static_cast<double>(n));
}

void require_positive(double value, const char* name) {
    if (!(value > 0.0)) fail(ErrorKind::InvalidInput, fmt::format("{} must be positive, got {}", name, value));
}

// Four times the time for P^t to come within tol of uniform; the p = 1 terms
// decay only like lambda^t, so the horizon has to scale with log(1/tol).
std::size_t default_t_max(const RoundMatrix& p, double tol) {
    if (p.symmetric()) {
        try {
            return std::max<std::size_t>(1000, 4 * convergence_time(p, 1.0, tol));
        } catch (const Error&) {
            // lambda = 1 or too large for the dense solver; fall through.
        }
    }
    return 200'000;
}

}  // namespace

double discrepancy(std::span<const double> xi) { return discrepancy_impl(xi); }
double discrepancy(std::span<const std::int64_t> xi) { return discrepancy_impl(xi); }

double max_deviation(std::span<const std::int64_t> discrete, std::span<const double> continuous) {
    if (discrete.size() != continuous.size()) fail(ErrorKind::InvalidInput, "max_deviation: length mismatch");
    double dev = 0.0;
    for (std::size_t i = 0; i < discrete.size(); ++i) {
        dev = std::max(dev, std::abs(static_cast<double>(discrete[i]) - continuous[i]));
    }
    return dev;
}

DivergenceReport local_p_divergence(const RoundMatrix& p, int order, const DivergenceOptions& options) {
    if (order != 1 && order != 2) fail(ErrorKind::InvalidParameter, fmt::format("p must be 1 or 2, got {}", order));
    if (!(options.tol > 0.0)) fail(ErrorKind::InvalidParameter, fmt::format("tol must be positive, got {}", options.tol));
    if (!p.irreducible()) fail(ErrorKind::NotIrreducible, "local divergence requires an irreducible matrix");
    const std::size_t n = p.size();
    if (n > kDenseSizeLimit) fail(ErrorKind::SizeLimit, fmt::format("local divergence limited to n <= {}", kDenseSizeLimit));
    const std::size_t t_max = options.t_max ? options.t_max : default_t_max(p, options.tol);

    // power[v * n + w] = P^t_{v,w}
    std::vector<double> power(n * n, 0.0), next(n * n);
    for (Vertex v = 0; v < n; ++v) power[v * n + v] = 1.0;

    std::vector<double> acc(n, 0.0), inner(n);
    DivergenceReport report;
    report.p = order;
    int quiet = 0;
    bool converged = false;
    std::size_t t = 0;
    for (;; ++t) {
        std::fill(inner.begin(), inner.end(), 0.0);
        for (Vertex v = 0; v < n; ++v) {
            const double* pv = &power[v * n];
            for (const auto& e : p.row(v)) {
                if (e.target == v) continue;
                const double* pu = &power[e.target * n];
                if (order == 2) {
                    for (std::size_t w = 0; w < n; ++w) {
                        const double diff = pv[w] - pu[w];
                        inner[w] += diff * diff;
                    }
                } else {
                    for (std::size_t w = 0; w < n; ++w) inner[w] += std::abs(pv[w] - pu[w]);
                }
            }
        }
        double step_max = 0.0;
        double best = -1.0;
        for (std::size_t w = 0; w < n; ++w) {
            acc[w] += inner[w];
            step_max = std::max(step_max, inner[w]);
            if (acc[w] > best) {
                best = acc[w];
                report.argmax = w;
            }
        }
        report.partial_values.push_back(order == 2 ? std::sqrt(best) : best);
        report.residual = step_max;
        quiet = step_max < options.tol ? quiet + 1 : 0;
        if (quiet >= options.quiet_steps) {
            converged = true;
            break;
        }
        if (t + 1 > t_max) break;

        for (Vertex v = 0; v < n; ++v) {
            double* out = &next[v * n];
            std::fill(out, out + n, 0.0);
            for (const auto& e : p.row(v)) {
                const double* src = &power[e.target * n];
                for (std::size_t w = 0; w < n; ++w) out[w] += e.probability * src[w];
            }
        }
        power.swap(next);
    }
    report.t_stop = t;
    report.value = report.partial_values.back();
    if (!converged) {
        throw NonConvergedError(fmt::format("local {}-divergence not converged after t = {} (last step sum {:.3e} >= tol {:.1e})",
                                            order, t_max, report.residual, options.tol),
                                report.value, report.residual);
    }

    if (order == 2 && p.reversible() && p.lazy()) {
        // Tail after t_stop: sum_{t > t_stop} E(P^t_{.,w}) <= pi_w (P^{2s}_{w,w} - pi_w), s = t_stop + 1,
        // and the squared divergence mass is at most 2 / min(pi P) times that.
        const auto& pi = p.stationary().pi;
        for (Vertex v = 0; v < n; ++v) {
            double* out = &next[v * n];
            std::fill(out, out + n, 0.0);
            for (const auto& e : p.row(v)) {
                const double* src = &power[e.target * n];
                for (std::size_t w = 0; w < n; ++w) out[w] += e.probability * src[w];
            }
        }
        const double scale = 2.0 / p.min_positive_flow();
        double tail = 0.0;
        for (std::size_t w = 0; w < n; ++w) {
            double diag = 0.0;
            for (std::size_t u = 0; u < n; ++u) diag += next[w * n + u] * next[u * n + w];
            tail = std::max(tail, scale * pi[w] * std::max(0.0, diag - pi[w]));
        }
        report.tail_bound = tail;
    }
    return report;
}

double dirichlet_form(std::span<const double> f, const RoundMatrix& p, std::span<const double> pi) {
    if (f.size() != p.size() || pi.size() != p.size()) {
        fail(ErrorKind::InvalidInput, fmt::format("dirichlet_form: sizes f={} pi={} matrix={}", f.size(), pi.size(), p.size()));
    }
    double sum = 0.0;
    for (Vertex v = 0; v < p.size(); ++v) {
        for (const auto& e : p.row(v)) {
            const double diff = f[v] - f[e.target];
            sum += diff * diff * pi[v] * e.probability;
        }
    }
    return 0.5 * sum;
}

DirichletCheck dirichlet_identity_check(const RoundMatrix& p, Vertex w, std::size_t t) {
    if (!p.reversible()) fail(ErrorKind::Unsupported, "Dirichlet identity requires a reversible matrix");
    if (w >= p.size()) fail(ErrorKind::InvalidInput, fmt::format("vertex {} out of range", w));
    const auto& pi = p.stationary().pi;
    std::vector<double> basis(p.size(), 0.0);
    basis[w] = 1.0;

    const auto column = power_apply_column(basis, p, t);
    const auto even = power_apply(basis, p, 2 * t);
    const auto odd = power_apply(even, p, 1);

    DirichletCheck check;
    check.lhs = dirichlet_form(column, p, pi);
    check.rhs = pi[w] * (even[w] - odd[w]);
    check.error = std::abs(check.lhs - check.rhs);
    return check;
}

double psi2_bound_reversible(const RoundMatrix& p) {
    if (!p.reversible()) fail(ErrorKind::HypothesisViolation, "reversible bound needs a reversible matrix");
    if (!p.lazy()) fail(ErrorKind::HypothesisViolation, "reversible bound needs a lazy matrix");
    const auto& pi = p.stationary().pi;
    const double max_pi = *std::max_element(pi.begin(), pi.end());
    return std::sqrt(2.0 * max_pi / p.min_positive_flow());
}

double psi2_bound_symmetric(const RoundMatrix& p) {
    if (!p.symmetric()) fail(ErrorKind::HypothesisViolation, "symmetric bound needs a symmetric matrix");
    if (!p.lazy()) fail(ErrorKind::HypothesisViolation, "symmetric bound needs a lazy matrix");
    return std::sqrt(2.0 / p.min_positive_entry());
}

double bound_theorem1(double degree, std::size_t n) {
    require_positive(degree, "degree");
    return 18.0 * std::sqrt(degree * log_n(n));
}

double bound_theorem2(double max_degree, std::size_t n) {
    require_positive(max_degree, "max degree");
    return 16.0 * std::sqrt(max_degree * log_n(n));
}

double bound_theorem3(double psi2, std::size_t n) {
    require_positive(psi2, "psi2");
    return 4.0 * psi2 * std::sqrt(log_n(n));
}

double bound_theorem5(double psi2, std::size_t n) {
    require_positive(psi2, "psi2");
    return 9.0 * psi2 * std::sqrt(log_n(n));
}

}  // namespace diffbal
