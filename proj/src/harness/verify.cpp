#include "diffbal/continuous.hpp"
#include "diffbal/error.hpp"
#include "diffbal/harness.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <map>
#include <set>

namespace diffbal::harness {

namespace {

struct NamedChain {
    std::string name;
    RoundMatrix matrix;
};

// The reversible lazy chain set shared by the Dirichlet and Psi_2 suites.
std::vector<NamedChain> reversible_chain_set(std::uint64_t seed) {
    std::vector<NamedChain> chains;
    for (std::uint64_t i = 0; i < 25; ++i) {
        const std::size_t n = 2 + static_cast<std::size_t>(i % 15);
        chains.push_back({fmt::format("reversible#{} n={}", i, n), random_reversible_lazy_chain(n, derive_seed(seed, i))});
    }
    chains.push_back({"K2 lazy-rw", lazy_rw_matrix(gen_complete(2))});
    chains.push_back({"triangle lazy-rw", lazy_rw_matrix(gen_cycle(3))});
    chains.push_back({"cycle16 lazy-rw", lazy_rw_matrix(gen_cycle(16))});
    chains.push_back({"star8 metropolis", metropolis_matrix(gen_star(8))});
    return chains;
}

class Checker {
public:
    explicit Checker(SuiteResult& result) : result_(result) {}

    void expect(bool ok, std::string what) {
        if (!ok) {
            result_.passed = false;
            result_.lines.push_back("FAIL " + std::move(what));
        }
    }
    void info(std::string line) { result_.lines.push_back(std::move(line)); }

private:
    SuiteResult& result_;
};

void suite_dirichlet(Checker& check, const VerifyOptions& options) {
    constexpr std::size_t kMaxT = 64;
    double worst = 0.0;
    std::size_t checks = 0;
    for (const auto& chain : reversible_chain_set(options.seed)) {
        const auto& p = chain.matrix;
        check.expect(p.reversible() && p.lazy(), chain.name + ": expected reversible and lazy");
        const auto& pi = p.stationary().pi;
        for (Vertex w = 0; w < p.size(); ++w) {
            double telescoped = 0.0;
            for (std::size_t t = 0; t <= kMaxT; ++t) {
                const auto c = dirichlet_identity_check(p, w, t);
                worst = std::max(worst, c.error);
                ++checks;
                telescoped += c.rhs;
                if (c.error > 1e-10) {
                    check.expect(false, fmt::format("{} w={} t={}: |lhs-rhs| = {:.3e}", chain.name, w, t, c.error));
                }
            }
            check.expect(telescoped <= pi[w] + 1e-10,
                         fmt::format("{} w={}: telescoped Dirichlet sum {} exceeds pi_w {}", chain.name, w, telescoped, pi[w]));

            // Lazy chains have nonincreasing return probabilities.
            std::vector<double> row(p.size(), 0.0);
            row[w] = 1.0;
            double prev = 1.0;
            for (std::size_t t = 1; t <= kMaxT; ++t) {
                row = power_apply(row, p, 1);
                check.expect(row[w] <= prev + 1e-12,
                             fmt::format("{} w={} t={}: P^t_ww increased ({} > {})", chain.name, w, t, row[w], prev));
                prev = row[w];
            }
        }
    }
    check.info(fmt::format("{} identity checks, max |lhs-rhs| = {:.3e} (tol 1e-10)", checks, worst));
}

void suite_psi2(Checker& check, const VerifyOptions& options) {
    DivergenceOptions div;
    div.tol = 1e-14;
    std::size_t checked = 0;
    auto bracket = [&](const std::string& name, const RoundMatrix& p) {
        const auto report = local_p_divergence(p, 2, div);
        const double value = report.value;
        check.expect(value >= std::sqrt(2.0) - 1e-12, fmt::format("{}: Psi2 = {} below sqrt(2)", name, value));
        if (p.reversible() && p.lazy()) {
            const double b = psi2_bound_reversible(p);
            check.expect(value <= b, fmt::format("{}: Psi2 = {} exceeds reversible bound {}", name, value, b));
        }
        if (p.symmetric() && p.lazy()) {
            const double b = psi2_bound_symmetric(p);
            check.expect(value <= b, fmt::format("{}: Psi2 = {} exceeds symmetric bound {}", name, value, b));
        }
        for (std::size_t i = 1; i < report.partial_values.size(); ++i) {
            if (report.partial_values[i] < report.partial_values[i - 1]) {
                check.expect(false, fmt::format("{}: partial sums decreased at t={}", name, i));
                break;
            }
        }
        ++checked;
    };
    for (const auto& chain : reversible_chain_set(options.seed)) bracket(chain.name, chain.matrix);
    for (std::uint64_t i = 0; i < 50; ++i) {
        const std::size_t n = 2 + static_cast<std::size_t>(i % 15);
        bracket(fmt::format("symmetric#{} n={}", i, n), random_symmetric_lazy_chain(n, derive_seed(options.seed + 1, i)));
    }

    const double k2 = local_p_divergence(lazy_rw_matrix(gen_complete(2)), 2, div).value;
    check.expect(std::abs(k2 - std::sqrt(2.0)) <= 1e-9, fmt::format("Psi2(K2 lazy) = {:.15f}, expected sqrt(2)", k2));

    auto exact_form = [&](const std::string& name, const RoundMatrix& p, double expected) {
        const double sym = psi2_bound_symmetric(p);
        const double rev = psi2_bound_reversible(p);
        check.expect(std::abs(sym - expected) <= 1e-12 && std::abs(rev - expected) <= 1e-12,
                     fmt::format("{}: bounds {} / {} differ from {}", name, sym, rev, expected));
    };
    exact_form("hypercube4 lazy-rw (2 sqrt d)", lazy_rw_matrix(gen_hypercube(4)), 2.0 * std::sqrt(4.0));
    exact_form("regular 16:3 lazy-rw (2 sqrt d)", lazy_rw_matrix(gen_random_regular(16, 3, options.seed)), 2.0 * std::sqrt(3.0));
    exact_form("star8 metropolis (2 sqrt dmax)", metropolis_matrix(gen_star(8)), 2.0 * std::sqrt(7.0));
    const Graph irregular = gen_random_connected(30, 0.15, options.seed);
    exact_form("randconn30 metropolis (2 sqrt dmax)", metropolis_matrix(irregular),
               2.0 * std::sqrt(static_cast<double>(irregular.max_degree())));
    check.info(fmt::format("{} chains bracketed; Psi2(K2) = {:.12f}", checked, k2));
}

struct Fixture {
    std::string name;
    Graph graph;
    RoundMatrix matrix;
};

Fixture lazy_fixture(std::string name, Graph g) {
    RoundMatrix p = lazy_rw_matrix(g);
    return {std::move(name), std::move(g), std::move(p)};
}

Fixture metropolis_fixture(std::string name, Graph g) {
    RoundMatrix p = metropolis_matrix(g);
    return {std::move(name), std::move(g), std::move(p)};
}

void suite_conservation(Checker& check, const VerifyOptions& options) {
    std::vector<Fixture> regular;
    regular.push_back(lazy_fixture("cycle16", gen_cycle(16)));
    regular.push_back(lazy_fixture("hypercube4", gen_hypercube(4)));
    regular.push_back(lazy_fixture("torus4x4", gen_torus(4, 4)));
    regular.push_back(lazy_fixture("regular32:4", gen_random_regular(32, 4, options.seed)));
    std::vector<Fixture> irregular;
    irregular.push_back(metropolis_fixture("star8", gen_star(8)));
    irregular.push_back(metropolis_fixture("randconn40", gen_random_connected(40, 0.1, options.seed)));

    constexpr std::uint64_t kPerAlgorithm = 20'000;
    std::uint64_t total_vertex_steps = 0;
    const std::vector<Algorithm> algorithms{Algorithm::Alg2Naive,     Algorithm::Alg2Batch,  Algorithm::SendFloor2d,
                                            Algorithm::SendRound3d,   Algorithm::SendPartition, Algorithm::RSend};
    Rng rng(derive_seed(options.seed, 77));
    for (Algorithm algorithm : algorithms) {
        const bool alg2 = algorithm == Algorithm::Alg2Naive || algorithm == Algorithm::Alg2Batch;
        std::vector<const Fixture*> fixtures;
        for (const auto& f : regular) fixtures.push_back(&f);
        if (alg2)
            for (const auto& f : irregular) fixtures.push_back(&f);

        std::uint64_t vertex_steps = 0;
        std::uint64_t round = 0;
        while (vertex_steps < kPerAlgorithm) {
            const Fixture& f = *fixtures[round % fixtures.size()];
            const std::size_t n = f.matrix.size();
            const auto m = 1 + uniform_below(rng, 50 * n);
            LoadConfig cur = make_load_preset(fmt::format("random:{}:{}", m, rng()), n);
            for (int s = 0; s < 20; ++s) {
                LoadConfig next;
                switch (algorithm) {
                    case Algorithm::Alg2Naive: next = step_naive(cur, f.matrix, rng); break;
                    case Algorithm::Alg2Batch: next = step_batch(cur, f.matrix, rng); break;
                    case Algorithm::SendFloor2d: next = step_send_floor2d(cur, f.graph); break;
                    case Algorithm::SendRound3d: next = step_send_round3d(cur, f.graph); break;
                    case Algorithm::SendPartition: next = step_send_partition(cur, f.graph); break;
                    case Algorithm::RSend: next = step_rsend(cur, f.graph, rng); break;
                }
                Load sum = 0;
                bool nonneg = true;
                for (Load x : next.loads()) {
                    sum += x;
                    nonneg = nonneg && x >= 0;
                }
                check.expect(sum == cur.total(), fmt::format("{} on {}: total {} -> {}", to_string(algorithm), f.name, cur.total(), sum));
                check.expect(nonneg, fmt::format("{} on {}: negative load", to_string(algorithm), f.name));
                vertex_steps += n;
                cur = std::move(next);
            }
            ++round;
        }
        total_vertex_steps += vertex_steps;
        check.info(fmt::format("{}: {} vertex-steps", to_string(algorithm), vertex_steps));
    }
    check.expect(total_vertex_steps >= 100'000, "fewer than 1e5 vertex-steps fuzzed");
    check.info(fmt::format("total {} vertex-steps, conservation and non-negativity exact", total_vertex_steps));
}

void suite_step_audit(Checker& check, const VerifyOptions& options) {
    std::vector<Fixture> fixtures;
    fixtures.push_back(lazy_fixture("cycle16", gen_cycle(16)));
    fixtures.push_back(lazy_fixture("hypercube4", gen_hypercube(4)));
    fixtures.push_back(lazy_fixture("torus4x4", gen_torus(4, 4)));
    fixtures.push_back(metropolis_fixture("star8", gen_star(8)));
    fixtures.push_back(metropolis_fixture("randconn40", gen_random_connected(40, 0.1, options.seed)));
    std::vector<NamedChain> chains;
    chains.push_back({"reversible n=12", random_reversible_lazy_chain(12, options.seed)});
    chains.push_back({"five-slot row", five_slot_fixture()});

    std::vector<std::pair<std::string, const RoundMatrix*>> all;
    for (const auto& f : fixtures) all.emplace_back(f.name, &f.matrix);
    for (const auto& c : chains) all.emplace_back(c.name, &c.matrix);

    StepAudit audit;
    Rng rng(derive_seed(options.seed, 91));
    constexpr std::uint64_t kTarget = 100'000;
    std::uint64_t round = 0;
    while (audit.vertex_steps < kTarget) {
        const auto& [name, p] = all[round % all.size()];
        const Sampler sampler = (round / all.size()) % 2 == 0 ? Sampler::Batch : Sampler::Naive;
        const std::size_t n = p->size();
        const auto m = n + uniform_below(rng, 40 * n);
        LoadConfig cur = make_load_preset(fmt::format("random:{}:{}", m, rng()), n);
        StepOptions step_options;
        step_options.audit = &audit;
        for (int s = 0; s < 25; ++s) cur = step(sampler, cur, *p, rng, step_options);
        ++round;
    }
    check.expect(audit.conservation_violations == 0, fmt::format("{} conservation violations", audit.conservation_violations));
    check.expect(audit.negativity_violations == 0, fmt::format("{} non-negativity violations", audit.negativity_violations));
    check.expect(audit.outflow_violations == 0, fmt::format("{} outflow violations", audit.outflow_violations));
    check.expect(audit.per_load_violations == 0, fmt::format("{} per-load (<= 2) violations", audit.per_load_violations));
    check.expect(audit.per_neighbor_violations == 0,
                 fmt::format("{} per-neighbor (<= 2) violations", audit.per_neighbor_violations));
    check.expect(audit.boundary_count_violations == 0,
                 fmt::format("{} pairs with more than 2 random tokens", audit.boundary_count_violations));
    for (const auto& m : audit.messages) check.info("  " + m);
    check.info(fmt::format("{} audited vertex-steps, {} tokens; max per-load sum {:.6f}, max per-neighbor sum {:.6f}, "
                           "max random tokens per pair {}",
                           audit.vertex_steps, audit.tokens, audit.max_per_load_sum, audit.max_per_neighbor_sum,
                           audit.max_boundary_tokens_per_pair));
}

void suite_sampler(Checker& check, const VerifyOptions& options) {
    const RoundMatrix p = five_slot_fixture();
    constexpr Vertex kV = 4;
    constexpr Load kLoads = 5;
    constexpr int kSamples = 10'000;
    const LoadConfig x(std::vector<Load>{0, 0, 0, 0, kLoads});
    const std::size_t slots = p.row(kV).size();

    struct Observed {
        std::map<std::vector<Load>, std::uint64_t> outcomes;
        std::vector<std::set<Vertex>> support = std::vector<std::set<Vertex>>(kLoads);
    };
    auto sample = [&](Sampler sampler, std::uint64_t stream) {
        Observed obs;
        Rng rng(derive_seed(options.seed, stream));
        StepTrace trace;
        StepOptions step_options;
        step_options.trace = &trace;
        step_options.record_draws = true;
        step_options.fault = options.fault;
        for (int i = 0; i < kSamples; ++i) {
            step(sampler, x, p, rng, step_options);
            ++obs.outcomes[trace.sent[kV]];
            for (const auto& d : trace.draws) obs.support[static_cast<std::size_t>(d.index)].insert(d.destination);
        }
        return obs;
    };
    const Observed naive = sample(Sampler::Naive, 1);
    const Observed batch = sample(Sampler::Batch, 2);

    std::set<std::vector<Load>> keys;
    for (const auto& [k, c] : naive.outcomes) keys.insert(k);
    for (const auto& [k, c] : batch.outcomes) keys.insert(k);
    std::vector<std::uint64_t> a, b;
    for (const auto& k : keys) {
        a.push_back(naive.outcomes.count(k) ? naive.outcomes.at(k) : 0);
        b.push_back(batch.outcomes.count(k) ? batch.outcomes.at(k) : 0);
    }
    const double pvalue = chi_square_two_sample_p(a, b);
    check.expect(pvalue > 0.001, fmt::format("chi-square p = {:.3e} <= 0.001 over {} outcomes", pvalue, keys.size()));

    // Deterministic tokens: the batch sampler's non-boundary set, the naive
    // sampler's single-destination set, and single-support distributions must agree.
    const auto boundary = boundary_tokens(p, kV, kLoads);
    std::set<Load> batch_det, naive_det, dist_det;
    for (Load k = 0; k < kLoads; ++k) {
        if (std::find(boundary.begin(), boundary.end(), k) == boundary.end()) batch_det.insert(k);
        if (naive.support[static_cast<std::size_t>(k)].size() == 1) naive_det.insert(k);
        const auto dist = destination_distribution(p, kV, k, kLoads);
        std::set<Vertex> expected;
        for (std::size_t j = 0; j < slots; ++j)
            if (dist[j] > 0.0) expected.insert(p.row(kV)[j].target);
        if (expected.size() == 1) dist_det.insert(k);
        check.expect(naive.support[static_cast<std::size_t>(k)] == expected,
                     fmt::format("token {}: naive support differs from destination_distribution", k));
        check.expect(batch.support[static_cast<std::size_t>(k)] == expected,
                     fmt::format("token {}: batch support differs from destination_distribution", k));
    }
    check.expect(batch_det == naive_det && naive_det == dist_det, "deterministic token sets differ between samplers");
    check.info(fmt::format("chi-square p = {:.4f} over {} joint outcomes; deterministic tokens {{{}}}", pvalue, keys.size(),
                           fmt::join(batch_det, ",")));
}

void suite_expectation(Checker& check, const VerifyOptions& options) {
    const RoundMatrix p = lazy_rw_matrix(gen_cycle(3));
    const LoadConfig x0(std::vector<Load>{30, 0, 0});
    constexpr std::size_t kT = 3;
    constexpr int kTrials = 10'000;
    const auto oracle = power_apply(x0.as_real(), p, kT);
    for (Sampler sampler : {Sampler::Batch, Sampler::Naive}) {
        const char* name = sampler == Sampler::Batch ? "batch" : "naive";
        std::vector<double> sum(3, 0.0), sq(3, 0.0);
        for (int trial = 0; trial < kTrials; ++trial) {
            Rng rng(derive_seed(options.seed + (sampler == Sampler::Batch ? 0 : 1), static_cast<std::uint64_t>(trial)));
            LoadConfig cur = x0;
            for (std::size_t t = 0; t < kT; ++t) cur = step(sampler, cur, p, rng);
            for (Vertex v = 0; v < 3; ++v) {
                sum[v] += static_cast<double>(cur[v]);
                sq[v] += static_cast<double>(cur[v]) * static_cast<double>(cur[v]);
            }
        }
        for (Vertex v = 0; v < 3; ++v) {
            const double mean = sum[v] / kTrials;
            const double var = std::max(0.0, sq[v] / kTrials - mean * mean) * kTrials / (kTrials - 1);
            const double se = std::sqrt(var / kTrials);
            const double z = se > 0 ? std::abs(mean - oracle[v]) / se : (mean == oracle[v] ? 0.0 : INFINITY);
            check.expect(z <= 5.0, fmt::format("{} v={}: mean {:.4f} vs x0 P^3 {:.4f} ({:.2f} SE)", name, v, mean, oracle[v], z));
            check.info(fmt::format("{} v={}: mean {:.4f}, oracle {:.4f}, {:.2f} SE", name, v, mean, oracle[v], z));
        }
    }
}

void suite_convergence(Checker& check, const VerifyOptions&) {
    std::vector<Fixture> fixtures;
    fixtures.push_back(lazy_fixture("K2", gen_complete(2)));
    fixtures.push_back(lazy_fixture("cycle16", gen_cycle(16)));
    fixtures.push_back(lazy_fixture("hypercube4", gen_hypercube(4)));
    fixtures.push_back(lazy_fixture("torus4x4", gen_torus(4, 4)));
    for (const auto& f : fixtures) {
        const auto x0 = make_load_preset("point:1000", f.matrix.size()).as_real();
        const double disc0 = discrepancy(x0);
        for (double eps : {1.0, 0.1}) {
            const std::size_t t = convergence_time(f.matrix, disc0, eps);
            const double disc = discrepancy(continuous_run(x0, f.matrix, t));
            check.expect(disc <= eps, fmt::format("{} eps={}: Disc = {:.3e} at T = {}", f.name, eps, disc, t));
            check.info(fmt::format("{} eps={}: T = {}, Disc = {:.3e}", f.name, eps, t, disc));
        }
    }
}

const std::map<std::string, std::function<void(Checker&, const VerifyOptions&)>, std::less<>>& suites() {
    static const std::map<std::string, std::function<void(Checker&, const VerifyOptions&)>, std::less<>> table{
        {"dirichlet", suite_dirichlet}, {"psi2", suite_psi2},     {"conservation", suite_conservation},
        {"step-audit", suite_step_audit},       {"sampler", suite_sampler}, {"expectation", suite_expectation},
        {"convergence", suite_convergence},
    };
    return table;
}

}  // namespace

RoundMatrix five_slot_fixture() {
    std::vector<Triplet> entries{{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {3, 3, 1.0}};
    entries.push_back({4, 0, 1.0 / 16});
    entries.push_back({4, 1, 1.0 / 16});
    entries.push_back({4, 2, 1.0 / 8});
    entries.push_back({4, 3, 1.0 / 4});
    entries.push_back({4, 4, 1.0 / 2});
    return custom_matrix(5, entries);
}

double chi_square_two_sample_p(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::InvalidInput, "chi-square: category count mismatch");
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]);
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::InvalidInput, "chi-square: empty sample");
    double stat = 0.0;
    int categories = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double total = static_cast<double>(a[i] + b[i]);
        if (total == 0.0) continue;
        ++categories;
        const double ea = total * na / (na + nb);
        const double eb = total * nb / (na + nb);
        stat += (static_cast<double>(a[i]) - ea) * (static_cast<double>(a[i]) - ea) / ea;
        stat += (static_cast<double>(b[i]) - eb) * (static_cast<double>(b[i]) - eb) / eb;
    }
    if (categories <= 1) return 1.0;
    const boost::math::chi_squared dist(categories - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names{"dirichlet", "psi2", "conservation", "step-audit", "sampler", "expectation", "convergence"};
    return names;
}

SuiteResult run_verify_suite(std::string_view name, const VerifyOptions& options) {
    const auto& table = suites();
    const auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorKind::InvalidParameter, fmt::format("unknown verify suite '{}'", name));
    SuiteResult result;
    result.name = std::string(name);
    Checker check(result);
    const auto start = std::chrono::steady_clock::now();
    try {
        it->second(check, options);
    } catch (const std::exception& e) {
        check.expect(false, fmt::format("suite raised: {}", e.what()));
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace diffbal::harness
