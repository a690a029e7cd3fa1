#include "diffbal/continuous.hpp"
#include "diffbal/error.hpp"
#include "diffbal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace diffbal::harness {

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    for (std::size_t pos = 0;;) {
        const auto at = s.find(sep, pos);
        parts.push_back(s.substr(pos, at - pos));
        if (at == std::string_view::npos) break;
        pos = at + 1;
    }
    return parts;
}

std::uint64_t parse_uint(std::string_view s, std::string_view context) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        fail(ErrorKind::InvalidParameter, fmt::format("'{}' is not a nonnegative integer in '{}'", s, context));
    }
    return value;
}

double parse_double(std::string_view s, std::string_view context) {
    try {
        std::size_t used = 0;
        const std::string str(s);
        const double v = std::stod(str, &used);
        if (used == str.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::InvalidParameter, fmt::format("'{}' is not a number in '{}'", s, context));
}

std::string read_file(std::string_view path) {
    std::ifstream in{std::string(path)};
    if (!in) fail(ErrorKind::InvalidParameter, fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Psi2Estimate {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::string source = "none";
};

Psi2Estimate estimate_psi2(const RoundMatrix& p) {
    Psi2Estimate out;
    if (p.size() <= 1024 && p.irreducible()) {
        try {
            out.value = local_p_divergence(p, 2).value;
            out.source = "computed";
            return out;
        } catch (const Error&) {
        }
    }
    if (p.symmetric() && p.lazy()) {
        out.value = psi2_bound_symmetric(p);
        out.source = "symmetric-bound";
    } else if (p.irreducible() && p.reversible() && p.lazy()) {
        out.value = psi2_bound_reversible(p);
        out.source = "reversible-bound";
    }
    return out;
}

std::string fmt_real(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{:.6f}", v);
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
    if (name == "alg2-naive") return Algorithm::Alg2Naive;
    if (name == "alg2-batch") return Algorithm::Alg2Batch;
    if (name == "send-floor2d") return Algorithm::SendFloor2d;
    if (name == "send-round3d") return Algorithm::SendRound3d;
    if (name == "send-partition") return Algorithm::SendPartition;
    if (name == "rsend") return Algorithm::RSend;
    fail(ErrorKind::InvalidParameter, fmt::format("unknown algorithm '{}'", name));
}

std::string_view to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::Alg2Naive: return "alg2-naive";
        case Algorithm::Alg2Batch: return "alg2-batch";
        case Algorithm::SendFloor2d: return "send-floor2d";
        case Algorithm::SendRound3d: return "send-round3d";
        case Algorithm::SendPartition: return "send-partition";
        case Algorithm::RSend: return "rsend";
    }
    return "?";
}

Graph parse_graph_spec(std::string_view spec) {
    const auto colon = spec.find(':');
    const auto kind = spec.substr(0, colon);
    const auto rest = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    if (kind == "file") return load_edge_list(read_file(rest));

    const auto args = split(rest, ':');
    auto need = [&](std::size_t count) {
        if (args.size() != count || rest.empty()) {
            fail(ErrorKind::InvalidParameter, fmt::format("graph spec '{}' expects {} argument(s)", spec, count));
        }
    };
    if (kind == "cycle") {
        need(1);
        return gen_cycle(parse_uint(args[0], spec));
    }
    if (kind == "path") {
        need(1);
        return gen_path(parse_uint(args[0], spec));
    }
    if (kind == "star") {
        need(1);
        return gen_star(parse_uint(args[0], spec));
    }
    if (kind == "complete") {
        need(1);
        return gen_complete(parse_uint(args[0], spec));
    }
    if (kind == "hypercube") {
        need(1);
        return gen_hypercube(parse_uint(args[0], spec));
    }
    if (kind == "torus") {
        need(1);
        const auto sides = split(args[0], 'x');
        if (sides.size() != 2) fail(ErrorKind::InvalidParameter, fmt::format("torus spec '{}' expects AxB", spec));
        return gen_torus(parse_uint(sides[0], spec), parse_uint(sides[1], spec));
    }
    if (kind == "regular") {
        need(3);
        return gen_random_regular(parse_uint(args[0], spec), parse_uint(args[1], spec), parse_uint(args[2], spec));
    }
    if (kind == "randconn") {
        need(3);
        return gen_random_connected(parse_uint(args[0], spec), parse_double(args[1], spec), parse_uint(args[2], spec));
    }
    fail(ErrorKind::InvalidParameter, fmt::format("unknown graph spec '{}'", spec));
}

Setup resolve_setup(const ExperimentSpec& spec) {
    std::optional<Graph> graph;
    if (!spec.graph.empty()) graph = parse_graph_spec(spec.graph);

    auto matrix = [&]() -> RoundMatrix {
        if (spec.matrix.starts_with("file:")) return parse_matrix(read_file(std::string_view(spec.matrix).substr(5)));
        if (!graph) fail(ErrorKind::InvalidParameter, fmt::format("matrix '{}' needs --graph", spec.matrix));
        if (spec.matrix == "lazy-rw") return lazy_rw_matrix(*graph);
        if (spec.matrix == "metropolis") return metropolis_matrix(*graph);
        fail(ErrorKind::InvalidParameter, fmt::format("unknown matrix kind '{}'", spec.matrix));
    }();
    if (graph && graph->size() != matrix.size()) {
        fail(ErrorKind::Validation, fmt::format("graph has {} vertices but matrix has {}", graph->size(), matrix.size()));
    }
    const std::size_t n = matrix.size();
    LoadConfig initial = spec.loads.starts_with("file:")
                             ? parse_load_vector(read_file(std::string_view(spec.loads).substr(5)), n)
                             : make_load_preset(spec.loads, n);
    const std::string kind = spec.matrix.starts_with("file:") ? "file" : spec.matrix;
    return Setup{std::move(graph), std::move(matrix), kind, std::move(initial)};
}

SimulationResult simulate(const ExperimentSpec& spec) {
    if (spec.trials == 0) fail(ErrorKind::InvalidParameter, "trials must be >= 1");
    if (spec.stride == 0) fail(ErrorKind::InvalidParameter, "stride must be >= 1");
    const Setup setup = resolve_setup(spec);
    const RoundMatrix& p = setup.matrix;
    const std::size_t n = p.size();
    const bool alg2 = spec.algorithm == Algorithm::Alg2Naive || spec.algorithm == Algorithm::Alg2Batch;
    if (!alg2 && !setup.graph) {
        fail(ErrorKind::InvalidParameter, fmt::format("{} needs --graph", to_string(spec.algorithm)));
    }
    if (!alg2 && !setup.graph->is_regular()) {
        fail(ErrorKind::InvalidInput, fmt::format("{} requires a regular graph", to_string(spec.algorithm)));
    }

    SimulationResult result;
    const double disc0 = discrepancy(setup.initial.loads());
    std::optional<std::size_t> conv;
    if (p.symmetric() && p.irreducible() && n <= kDenseSizeLimit) {
        result.lambda = second_eigenvalue(p);
        if (result.lambda < 1.0) conv = disc0 > 0.0 ? convergence_time(p, disc0, 1.0, result.lambda) : 0;
    } else {
        result.lambda = std::numeric_limits<double>::quiet_NaN();
    }
    if (spec.steps) {
        result.steps = *spec.steps;
    } else {
        if (!conv) fail(ErrorKind::Unsupported, "steps auto needs a symmetric irreducible matrix with a spectral gap");
        result.steps = *conv;
    }
    result.convergence_steps = conv.value_or(0);

    const auto psi = estimate_psi2(p);
    result.psi2 = psi.value;
    result.psi2_source = psi.source;
    const double thm3 = std::isnan(psi.value) || n < 2 ? std::numeric_limits<double>::quiet_NaN() : bound_theorem3(psi.value, n);
    double disc_bound = std::numeric_limits<double>::quiet_NaN();
    std::string disc_theorem = "none";
    if (n >= 2) {
        if (setup.matrix_kind == "lazy-rw") {
            disc_bound = bound_theorem1(static_cast<double>(setup.graph->max_degree()), n);
            disc_theorem = "thm1";
        } else if (setup.matrix_kind == "metropolis") {
            disc_bound = bound_theorem2(static_cast<double>(setup.graph->max_degree()), n);
            disc_theorem = "thm2";
        } else if (p.symmetric() && !std::isnan(psi.value)) {
            disc_bound = bound_theorem5(psi.value, n);
            disc_theorem = "thm5";
        }
    }

    // Recorded times and the continuous oracle at each of them.
    std::vector<std::size_t> times{0};
    for (std::size_t t = 1; t <= result.steps; ++t) {
        if (t % spec.stride == 0 || t == result.steps) times.push_back(t);
    }
    std::vector<std::vector<double>> oracle;
    oracle.reserve(times.size());
    {
        auto chi = setup.initial.as_real();
        std::size_t at = 0;
        for (std::size_t t : times) {
            chi = continuous_run(chi, p, t - at);
            at = t;
            oracle.push_back(chi);
        }
    }

    std::vector<std::vector<ExperimentRecord>> per_trial(spec.trials);
    auto run_trial = [&](std::size_t trial) {
        Rng rng(derive_seed(spec.seed, trial));
        std::vector<ExperimentRecord> rows;
        rows.reserve(times.size());
        LoadConfig cur = setup.initial;
        std::size_t next_time = 0;
        for (std::size_t t = 0;; ++t) {
            if (t == times[next_time]) {
                ExperimentRecord r;
                r.trial = trial;
                r.t = t;
                r.disc = discrepancy(cur.loads());
                r.max_dev = max_deviation(cur.loads(), oracle[next_time]);
                r.bound_thm3 = thm3;
                r.bound_thm1_or_2 = disc_bound;
                r.viol_thm3 = !std::isnan(thm3) && r.max_dev > thm3;
                r.viol_disc = conv && t >= *conv && !std::isnan(disc_bound) && r.disc > disc_bound;
                rows.push_back(r);
                if (++next_time == times.size()) break;
            }
            switch (spec.algorithm) {
                case Algorithm::Alg2Naive: cur = step_naive(cur, p, rng); break;
                case Algorithm::Alg2Batch: cur = step_batch(cur, p, rng); break;
                case Algorithm::SendFloor2d: cur = step_send_floor2d(cur, *setup.graph); break;
                case Algorithm::SendRound3d: cur = step_send_round3d(cur, *setup.graph); break;
                case Algorithm::SendPartition: cur = step_send_partition(cur, *setup.graph); break;
                case Algorithm::RSend: cur = step_rsend(cur, *setup.graph, rng); break;
            }
        }
        per_trial[trial] = std::move(rows);
    };

    const std::size_t jobs = std::clamp<std::size_t>(spec.jobs, 1, spec.trials);
    if (jobs == 1) {
        for (std::size_t i = 0; i < spec.trials; ++i) run_trial(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> workers;
        for (std::size_t j = 0; j < jobs; ++j) {
            workers.emplace_back([&, j] {
                try {
                    for (std::size_t i = next++; i < spec.trials; i = next++) run_trial(i);
                } catch (...) {
                    errors[j] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::string csv;
    csv += "# diffbal simulate\n";
    csv += fmt::format("# graph={} matrix={} algorithm={} loads={} steps={} trials={} seed={} stride={}\n",
                       spec.graph.empty() ? "-" : spec.graph, spec.matrix, to_string(spec.algorithm), spec.loads,
                       spec.steps ? std::to_string(*spec.steps) : "auto", spec.trials, spec.seed, spec.stride);
    csv += fmt::format("# N={} M={} T={} lambda={} psi2={} psi2_source={} disc_bound={} log=ln\n", n,
                       setup.initial.total(), result.steps, fmt_real(result.lambda), fmt_real(psi.value), psi.source,
                       disc_theorem);
    csv += kCsvHeader;
    csv += '\n';
    for (auto& rows : per_trial) {
        for (const auto& r : rows) {
            csv += fmt::format("{},{},{},{},{},{},{},{}\n", r.trial, r.t, fmt_real(r.disc), fmt_real(r.max_dev),
                               fmt_real(r.bound_thm3), fmt_real(r.bound_thm1_or_2), r.viol_thm3 ? 1 : 0,
                               r.viol_disc ? 1 : 0);
            result.records.push_back(r);
        }
    }
    result.csv = std::move(csv);
    return result;
}

std::string bounds_report(const ExperimentSpec& spec) {
    const Setup setup = resolve_setup(spec);
    const RoundMatrix& p = setup.matrix;
    const std::size_t n = p.size();
    std::string out;
    auto line = [&out](std::string_view key, const std::string& value) { out += fmt::format("{}={}\n", key, value); };
    auto guarded = [&](std::string_view key, auto&& compute) {
        try {
            line(key, fmt::format("{:.9f}", compute()));
        } catch (const Error& e) {
            line(key, fmt::format("error: {}", e.what()));
        }
    };

    line("N", std::to_string(n));
    line("matrix", setup.matrix_kind);
    if (setup.graph) {
        const auto& g = *setup.graph;
        if (g.is_regular()) line("d", std::to_string(g.max_degree()));
        line("d_max", std::to_string(g.max_degree()));
    }
    line("symmetric", p.symmetric() ? "yes" : "no");
    line("lazy", p.lazy() ? "yes" : "no");
    line("irreducible", p.irreducible() ? "yes" : "no");
    line("reversible", p.reversible() ? "yes" : "no");
    line("log", "ln");
    guarded("lambda", [&] { return second_eigenvalue(p); });
    std::optional<double> psi2;
    try {
        psi2 = local_p_divergence(p, 2).value;
        line("psi2", fmt::format("{:.9f}", *psi2));
    } catch (const Error& e) {
        line("psi2", fmt::format("error: {}", e.what()));
    }
    guarded("psi2_bound_symmetric", [&] { return psi2_bound_symmetric(p); });
    guarded("psi2_bound_reversible", [&] { return psi2_bound_reversible(p); });
    if (setup.graph && n >= 2) {
        const auto& g = *setup.graph;
        if (setup.matrix_kind == "lazy-rw") {
            guarded("bound_thm1", [&] { return bound_theorem1(static_cast<double>(g.max_degree()), n); });
        } else if (setup.matrix_kind == "metropolis") {
            guarded("bound_thm2", [&] { return bound_theorem2(static_cast<double>(g.max_degree()), n); });
        }
    }
    if (psi2 && n >= 2) {
        line("bound_thm3", fmt::format("{:.9f}", bound_theorem3(*psi2, n)));
        if (p.symmetric() && p.irreducible()) {
            line("bound_thm5", fmt::format("{:.9f}", bound_theorem5(*psi2, n)));
        } else {
            line("bound_thm5", "error: hypothesis-violation: needs a symmetric irreducible matrix");
        }
    }
    return out;
}

std::string format_divergence(const DivergenceReport& report) {
    std::string out;
    out += fmt::format("p={}\n", report.p);
    out += fmt::format("value={:.12f}\n", report.value);
    out += fmt::format("argmax={}\n", report.argmax);
    out += fmt::format("t_stop={}\n", report.t_stop);
    out += fmt::format("residual={:.3e}\n", report.residual);
    if (report.tail_bound) out += fmt::format("tail_bound={:.3e}\n", *report.tail_bound);
    return out;
}

std::string divergence_report(const ExperimentSpec& spec, int order, double tol) {
    const Setup setup = resolve_setup(spec);
    DivergenceOptions options;
    options.tol = tol;
    return format_divergence(local_p_divergence(setup.matrix, order, options));
}

}  // namespace diffbal::harness
