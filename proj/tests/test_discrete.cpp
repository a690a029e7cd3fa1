#include "diffbal/discrete.hpp"
#include "diffbal/error.hpp"
#include "oracles.hpp"

#include <cmath>
#include <gtest/gtest.h>
#include <map>

using namespace diffbal;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::InvalidInput;
}

RoundMatrix five_slot_row() {
    std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {3, 3, 1.0},
                           {4, 0, 1.0 / 16}, {4, 1, 1.0 / 16}, {4, 2, 1.0 / 8}, {4, 3, 0.25}, {4, 4, 0.5}};
    return custom_matrix(5, t);
}

LoadConfig cfg(std::vector<Load> v) { return LoadConfig(std::move(v)); }

void expect_near(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "slot " << i;
}

}  // namespace

TEST(LoadConfig, RejectsNegative) { EXPECT_EQ(kind_of([] { cfg({1, -1}); }), ErrorKind::InvalidInput); }

TEST(LoadConfig, Presets) {
    EXPECT_EQ(make_load_preset("point:7", 3), cfg({7, 0, 0}));
    EXPECT_EQ(make_load_preset("uniform:160", 16), cfg(std::vector<Load>(16, 10)));
    EXPECT_EQ(make_load_preset("uniform:5", 3), cfg({2, 2, 1}));
    const auto r = make_load_preset("random:100:9", 10);
    EXPECT_EQ(r.total(), 100);
    EXPECT_EQ(r, make_load_preset("random:100:9", 10));
    EXPECT_EQ(make_load_preset("random:5:18446744073709551615", 4).total(), 5);
    EXPECT_EQ(kind_of([] { make_load_preset("spike:3", 3); }), ErrorKind::InvalidParameter);
    EXPECT_EQ(kind_of([] { make_load_preset("point:x", 3); }), ErrorKind::InvalidParameter);
}

TEST(LoadConfig, ParseVector) {
    EXPECT_EQ(parse_load_vector("3\n0\n4\n", 3), cfg({3, 0, 4}));
    EXPECT_EQ(kind_of([] { parse_load_vector("1\n2\n", 3); }), ErrorKind::Validation);
    EXPECT_EQ(kind_of([] { parse_load_vector("1\n-2\n", 2); }), ErrorKind::Validation);
    EXPECT_EQ(kind_of([] { parse_load_vector("1\nz\n", 2); }), ErrorKind::Parse);
}

// Load 0 of 5 covers [0, 16/80): 5/80, 5/80, 6/80 of it, times 5.
TEST(DestinationDistribution, FiveSlotLoadZero) {
    expect_near(destination_distribution(five_slot_row(), 4, 0, 5), {25.0 / 80, 25.0 / 80, 30.0 / 80, 0.0, 0.0}, 1e-15);
}

TEST(DestinationDistribution, FiveSlotRemainingLoads) {
    const auto p = five_slot_row();
    expect_near(destination_distribution(p, 4, 1, 5), {0.0, 0.0, 5.0 / 20, 15.0 / 20, 0.0}, 1e-15);
    expect_near(destination_distribution(p, 4, 2, 5), {0.0, 0.0, 0.0, 0.5, 0.5}, 1e-15);
    expect_near(destination_distribution(p, 4, 3, 5), {0.0, 0.0, 0.0, 0.0, 1.0}, 1e-15);
    expect_near(destination_distribution(p, 4, 4, 5), {0.0, 0.0, 0.0, 0.0, 1.0}, 1e-15);
}

TEST(DestinationDistribution, SingleLoadIsRow) {
    const auto p = five_slot_row();
    expect_near(destination_distribution(p, 4, 0, 1), {1.0 / 16, 1.0 / 16, 1.0 / 8, 0.25, 0.5}, 1e-15);
}

TEST(DestinationDistribution, TriangleSecondLoadStays) {
    const auto p = lazy_rw_matrix(gen_cycle(3));
    // Slots: neighbors 1, 2, then self.
    expect_near(destination_distribution(p, 0, 1, 2), {0.0, 0.0, 1.0}, 1e-15);
    expect_near(destination_distribution(p, 0, 0, 2), {0.5, 0.5, 0.0}, 1e-15);
}

TEST(DestinationDistribution, SumsToOneAndAveragesToRow) {
    const auto p = random_reversible_lazy_chain(8, 4);
    for (Vertex v = 0; v < 8; ++v) {
        for (Load x : {1, 2, 3, 7, 13, 64}) {
            std::vector<double> mean(p.row(v).size(), 0.0);
            for (Load k = 0; k < x; ++k) {
                const auto d = destination_distribution(p, v, k, x);
                double sum = 0.0;
                for (std::size_t j = 0; j < d.size(); ++j) {
                    EXPECT_GE(d[j], 0.0);
                    sum += d[j];
                    mean[j] += d[j] / static_cast<double>(x);
                }
                EXPECT_NEAR(sum, 1.0, 1e-12);
            }
            for (std::size_t j = 0; j < mean.size(); ++j) EXPECT_NEAR(mean[j], p.row(v)[j].probability, 1e-12);
        }
    }
}

TEST(DestinationDistribution, OutOfRange) {
    const auto p = five_slot_row();
    EXPECT_EQ(kind_of([&] { destination_distribution(p, 4, 5, 5); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([&] { destination_distribution(p, 9, 0, 5); }), ErrorKind::InvalidInput);
}

TEST(BoundaryTokens, FiveSlot) { EXPECT_EQ(boundary_tokens(five_slot_row(), 4, 5), (std::vector<Load>{0, 1, 2})); }

TEST(BoundaryTokens, Triangle) {
    EXPECT_EQ(boundary_tokens(lazy_rw_matrix(gen_cycle(3)), 0, 2), (std::vector<Load>{0}));
}

TEST(BoundaryTokens, SingleLoad) {
    EXPECT_EQ(boundary_tokens(lazy_rw_matrix(gen_cycle(5)), 2, 1), (std::vector<Load>{0}));
}

TEST(BoundaryTokens, MatchesDistributionSupport) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto p = random_reversible_lazy_chain(7, seed);
        for (Vertex v = 0; v < 7; ++v) {
            for (Load x = 1; x <= 40; ++x) {
                const auto boundary = boundary_tokens(p, v, x);
                for (Load k = 0; k < x; ++k) {
                    const auto d = destination_distribution(p, v, k, x);
                    const auto support = std::count_if(d.begin(), d.end(), [](double q) { return q > 0.0; });
                    const bool is_boundary = std::find(boundary.begin(), boundary.end(), k) != boundary.end();
                    EXPECT_EQ(is_boundary, support > 1) << "v=" << v << " x=" << x << " k=" << k;
                }
            }
        }
    }
}

TEST(Step, ZeroConfigConsumesNoRandomness) {
    const auto p = lazy_rw_matrix(gen_cycle(5));
    for (Sampler s : {Sampler::Naive, Sampler::Batch}) {
        Rng rng(3), before(3);
        EXPECT_EQ(step(s, cfg({0, 0, 0, 0, 0}), p, rng), cfg({0, 0, 0, 0, 0}));
        EXPECT_EQ(rng, before);
    }
}

TEST(Step, K2SingleTokenFrequency) {
    const auto p = lazy_rw_matrix(gen_complete(2));
    for (Sampler s : {Sampler::Naive, Sampler::Batch}) {
        Rng rng(11);
        int moved = 0;
        for (int i = 0; i < 10000; ++i) moved += step(s, cfg({1, 0}), p, rng)[1] == 1;
        EXPECT_NEAR(moved / 1e4, 0.5, 0.02);
    }
}

TEST(Step, TriangleTwoTokensEnumeration) {
    const auto p = lazy_rw_matrix(gen_cycle(3));
    for (Sampler s : {Sampler::Naive, Sampler::Batch}) {
        Rng rng(5);
        std::map<std::vector<Load>, int> seen;
        for (int i = 0; i < 10000; ++i) {
            const auto y = step(s, cfg({2, 0, 0}), p, rng);
            ++seen[{y.loads().begin(), y.loads().end()}];
        }
        ASSERT_EQ(seen.size(), 2u);
        EXPECT_NEAR(seen[(std::vector<Load>{1, 1, 0})] / 1e4, 0.5, 0.02);
        EXPECT_NEAR(seen[(std::vector<Load>{1, 0, 1})] / 1e4, 0.5, 0.02);
    }
}

TEST(Step, BatchRecordsOnlyBoundaryDraws) {
    const auto p = lazy_rw_matrix(gen_cycle(3));
    Rng rng(1);
    StepTrace trace;
    StepOptions opts;
    opts.trace = &trace;
    opts.record_draws = true;
    step_batch(cfg({2, 0, 0}), p, rng, opts);
    ASSERT_EQ(trace.draws.size(), 2u);
    for (const auto& d : trace.draws) {
        if (d.index == 1) {
            EXPECT_TRUE(std::isnan(d.r));
            EXPECT_EQ(d.destination, 0u);
        } else {
            EXPECT_GE(d.r, 0.0);
            EXPECT_LT(d.r, 0.5);
        }
    }
}

TEST(Step, FiveSlotTokensDeterministicInBothSamplers) {
    const auto p = five_slot_row();
    for (Sampler s : {Sampler::Naive, Sampler::Batch}) {
        Rng rng(21);
        StepTrace trace;
        StepOptions opts;
        opts.trace = &trace;
        opts.record_draws = true;
        for (int i = 0; i < 500; ++i) {
            step(s, cfg({0, 0, 0, 0, 5}), p, rng, opts);
            for (const auto& d : trace.draws) {
                if (d.index >= 3) EXPECT_EQ(d.destination, 4u);
                if (d.index == 2) EXPECT_TRUE(d.destination == 3 || d.destination == 4);
            }
        }
    }
}

TEST(Step, PerTokenFrequenciesMatchDistribution) {
    const auto p = five_slot_row();
    for (Sampler s : {Sampler::Naive, Sampler::Batch}) {
        Rng rng(99);
        std::vector<std::vector<int>> counts(5, std::vector<int>(5, 0));
        StepTrace trace;
        StepOptions opts;
        opts.trace = &trace;
        opts.record_draws = true;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            step(s, cfg({0, 0, 0, 0, 5}), p, rng, opts);
            for (const auto& d : trace.draws) ++counts[static_cast<std::size_t>(d.index)][d.destination];
        }
        for (Load k = 0; k < 5; ++k) {
            const auto want = destination_distribution(p, 4, k, 5);
            for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(counts[static_cast<std::size_t>(k)][j] / double(n), want[j], 0.015);
        }
    }
}

TEST(Step, TraceSentMatchesResult) {
    const auto p = metropolis_matrix(gen_star(6));
    Rng rng(8);
    StepTrace trace;
    StepOptions opts;
    opts.trace = &trace;
    const auto x = cfg({13, 2, 0, 5, 1, 7});
    const auto y = step_batch(x, p, rng, opts);
    std::vector<Load> rebuilt(6, 0);
    for (Vertex v = 0; v < 6; ++v) {
        Load out = 0;
        for (std::size_t j = 0; j < p.row(v).size(); ++j) {
            rebuilt[p.row(v)[j].target] += trace.sent[v][j];
            out += trace.sent[v][j];
        }
        EXPECT_EQ(out, x[v]);
    }
    EXPECT_EQ(cfg(rebuilt), y);
}

TEST(Step, AuditCleanOnMixedChains) {
    StepAudit audit;
    StepOptions opts;
    opts.audit = &audit;
    Rng rng(4);
    const auto p = random_reversible_lazy_chain(10, 6);
    for (Sampler s : {Sampler::Naive, Sampler::Batch}) {
        auto x = make_load_preset("random:300:2", 10);
        for (int t = 0; t < 50; ++t) x = step(s, x, p, rng, opts);
    }
    EXPECT_EQ(audit.violations(), 0u);
    EXPECT_GT(audit.vertex_steps, 500u);
    EXPECT_LE(audit.max_boundary_tokens_per_pair, 2u);
    EXPECT_LE(audit.max_per_load_sum, 2.0 + 1e-12);
}

TEST(Step, SizeMismatch) {
    const auto p = lazy_rw_matrix(gen_cycle(3));
    Rng rng(1);
    EXPECT_EQ(kind_of([&] { step_batch(cfg({1, 2}), p, rng); }), ErrorKind::InvalidInput);
}

TEST(Run, ZeroSteps) {
    const auto p = lazy_rw_matrix(gen_cycle(4));
    Rng rng(1);
    const auto traj = run(cfg({4, 0, 0, 0}), p, 0, rng);
    EXPECT_EQ(traj.times, std::vector<std::size_t>{0});
    EXPECT_EQ(traj.configs.front(), cfg({4, 0, 0, 0}));
}

TEST(Run, StrideAlwaysRecordsFinalStep) {
    const auto p = lazy_rw_matrix(gen_cycle(4));
    Rng rng(1);
    RunOptions opts;
    opts.stride = 4;
    const auto traj = run(cfg({40, 0, 0, 0}), p, 10, rng, opts);
    EXPECT_EQ(traj.times, (std::vector<std::size_t>{0, 4, 8, 10}));
    for (const auto& c : traj.configs) EXPECT_EQ(c.total(), 40);
}

TEST(Run, SameSeedSameTrajectory) {
    const auto p = lazy_rw_matrix(gen_hypercube(3));
    Rng a(77), b(77);
    EXPECT_EQ(run(make_load_preset("point:100", 8), p, 30, a).configs,
              run(make_load_preset("point:100", 8), p, 30, b).configs);
}

TEST(Baselines, Floor2d) {
    const Graph tri = gen_cycle(3);
    EXPECT_EQ(step_send_floor2d(cfg({5, 0, 0}), tri), cfg({3, 1, 1}));
    EXPECT_EQ(step_send_floor2d(cfg({3, 0, 0}), tri), cfg({3, 0, 0}));
    EXPECT_EQ(step_send_floor2d(cfg({4, 0, 0}), tri), cfg({2, 1, 1}));
}

TEST(Baselines, Round3d) {
    const Graph tri = gen_cycle(3);
    EXPECT_EQ(step_send_round3d(cfg({4, 0, 0}), tri), cfg({2, 1, 1}));
    EXPECT_EQ(step_send_round3d(cfg({2, 0, 0}), tri), cfg({2, 0, 0}));
    EXPECT_EQ(step_send_round3d(cfg({9, 0, 0}), tri), cfg({5, 2, 2}));
}

TEST(Baselines, Partition) {
    const Graph tri = gen_cycle(3);
    EXPECT_EQ(step_send_partition(cfg({5, 0, 0}), tri), cfg({1, 2, 2}));
    EXPECT_EQ(step_send_partition(cfg({6, 0, 0}), tri), cfg({2, 2, 2}));
    EXPECT_EQ(step_send_partition(cfg({1, 0, 0}), tri), cfg({0, 1, 0}));
}

TEST(Baselines, RSendPairsUniform) {
    const Graph tri = gen_cycle(3);
    Rng rng(13);
    std::map<std::vector<Load>, int> seen;
    const int n = 30000;
    for (int i = 0; i < n; ++i) {
        const auto y = step_rsend(cfg({5, 0, 0}), tri, rng);
        ++seen[{y.loads().begin(), y.loads().end()}];
    }
    // One base token each, plus the two extras on a uniform pair of the three targets.
    ASSERT_EQ(seen.size(), 3u);
    for (const std::vector<Load>& key : {std::vector<Load>{2, 2, 1}, {2, 1, 2}, {1, 2, 2}}) {
        EXPECT_NEAR(seen[key] / double(n), 1.0 / 3, 0.015);
    }
}

TEST(Baselines, RSendDeterministicWhenDivisible) {
    const Graph tri = gen_cycle(3);
    Rng rng(2), before(2);
    EXPECT_EQ(step_rsend(cfg({6, 0, 0}), tri, rng), cfg({2, 2, 2}));
    EXPECT_EQ(rng, before);
}

TEST(Baselines, RSendSingleToken) {
    const Graph tri = gen_cycle(3);
    Rng rng(3);
    std::vector<int> where(3, 0);
    for (int i = 0; i < 30000; ++i) {
        const auto y = step_rsend(cfg({1, 0, 0}), tri, rng);
        for (Vertex v = 0; v < 3; ++v) where[v] += static_cast<int>(y[v]);
    }
    for (int c : where) EXPECT_NEAR(c / 30000.0, 1.0 / 3, 0.015);
}

TEST(Baselines, IrregularRejected) {
    const Graph star = gen_star(4);
    Rng rng(1);
    const auto x = cfg({4, 0, 0, 0});
    EXPECT_EQ(kind_of([&] { step_send_floor2d(x, star); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([&] { step_send_round3d(x, star); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([&] { step_send_partition(x, star); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([&] { step_rsend(x, star, rng); }), ErrorKind::InvalidInput);
}
