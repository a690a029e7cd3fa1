#include "diffbal/error.hpp"
#include "diffbal/round_matrix.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

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

}  // namespace

TEST(LazyRW, Triangle) {
    const auto p = lazy_rw_matrix(gen_cycle(3));
    for (Vertex v = 0; v < 3; ++v) {
        EXPECT_DOUBLE_EQ(p.self_probability(v), 0.5);
        for (Vertex u = 0; u < 3; ++u)
            if (u != v) EXPECT_DOUBLE_EQ(p.probability(v, u), 0.25);
    }
}

TEST(LazyRW, K2) {
    const auto p = lazy_rw_matrix(gen_complete(2));
    EXPECT_EQ(oracle::dense(p), (oracle::Dense{{0.5, 0.5}, {0.5, 0.5}}));
}

TEST(LazyRW, IrregularRejected) { EXPECT_EQ(kind_of([] { lazy_rw_matrix(gen_star(5)); }), ErrorKind::InvalidInput); }

TEST(LazyRW, MatchesAdjacencyOracle) {
    const Graph g = gen_torus(4, 5);
    EXPECT_EQ(oracle::dense(lazy_rw_matrix(g)), oracle::lazy_walk(g));
}

TEST(Metropolis, PathOnThree) {
    const auto p = metropolis_matrix(gen_path(3));
    EXPECT_DOUBLE_EQ(p.probability(1, 0), 0.25);
    EXPECT_DOUBLE_EQ(p.self_probability(1), 0.5);
    EXPECT_DOUBLE_EQ(p.probability(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(p.self_probability(0), 0.75);
}

TEST(Metropolis, RegularEqualsLazyRW) {
    const Graph g = gen_random_regular(20, 3, 5);
    EXPECT_EQ(oracle::dense(metropolis_matrix(g)), oracle::dense(lazy_rw_matrix(g)));
}

TEST(Metropolis, Star4) {
    const auto p = metropolis_matrix(gen_star(4));
    for (Vertex leaf = 1; leaf < 4; ++leaf) {
        EXPECT_DOUBLE_EQ(p.probability(leaf, 0), 1.0 / 6);
        EXPECT_DOUBLE_EQ(p.probability(0, leaf), 1.0 / 6);
        EXPECT_NEAR(p.self_probability(leaf), 5.0 / 6, 1e-15);
    }
    EXPECT_TRUE(p.symmetric());
    for (double x : p.stationary().pi) EXPECT_NEAR(x, 0.25, 1e-15);
}

TEST(CustomMatrix, FiveSlotRowPrefix) {
    const auto p = five_slot_row();
    const auto prefix = p.prefix(4);
    const std::vector<double> expected{0.0, 5.0 / 80, 10.0 / 80, 20.0 / 80, 40.0 / 80, 1.0};
    ASSERT_EQ(prefix.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(prefix[i], expected[i], 1e-15) << i;
    EXPECT_EQ(prefix.back(), 1.0);
    // Off-diagonal targets ascending, self-loop last.
    const auto row = p.row(4);
    for (std::size_t i = 0; i < row.size(); ++i) EXPECT_EQ(row[i].target, i);
}

TEST(CustomMatrix, SelfLoopOrderedLast) {
    const std::vector<Triplet> t{{0, 0, 0.5}, {0, 1, 0.25}, {0, 2, 0.25}, {1, 1, 1.0}, {2, 2, 1.0}};
    const auto p = custom_matrix(3, t);
    EXPECT_EQ(p.row(0).back().target, 0u);
    EXPECT_EQ(p.row(0)[0].target, 1u);
}

TEST(CustomMatrix, RowSumError) {
    const std::vector<Triplet> t{{0, 0, 0.9}};
    EXPECT_EQ(kind_of([&] { custom_matrix(1, t); }), ErrorKind::Validation);
}

TEST(CustomMatrix, NegativeAndDuplicateRejected) {
    const std::vector<Triplet> neg{{0, 0, 1.5}, {0, 1, -0.5}, {1, 1, 1.0}};
    EXPECT_EQ(kind_of([&] { custom_matrix(2, neg); }), ErrorKind::Validation);
    const std::vector<Triplet> dup{{0, 1, 0.5}, {0, 1, 0.5}, {1, 1, 1.0}};
    EXPECT_EQ(kind_of([&] { custom_matrix(2, dup); }), ErrorKind::Validation);
}

TEST(Identity, LazyAndReducible) {
    const auto p = identity_matrix(3);
    EXPECT_TRUE(p.lazy());
    EXPECT_FALSE(p.irreducible());
    EXPECT_EQ(kind_of([&] { p.stationary(); }), ErrorKind::NotIrreducible);
    EXPECT_TRUE(identity_matrix(1).irreducible());
}

TEST(Flags, K2) {
    const auto p = lazy_rw_matrix(gen_complete(2));
    EXPECT_TRUE(p.symmetric());
    EXPECT_TRUE(p.lazy());
    EXPECT_TRUE(p.irreducible());
    EXPECT_TRUE(p.reversible());
    EXPECT_NEAR(p.stationary().pi[0], 0.5, 1e-15);
    EXPECT_NEAR(p.stationary().pi[1], 0.5, 1e-15);
}

TEST(Flags, NonLazy) {
    const std::vector<Triplet> t{{0, 1, 1.0}, {1, 0, 1.0}};
    const auto p = custom_matrix(2, t);
    EXPECT_FALSE(p.lazy());
    EXPECT_TRUE(p.symmetric());
}

TEST(Flags, NonReversible) {
    // Directed 3-cycle with laziness: doubly stochastic but not symmetric.
    const std::vector<Triplet> t{{0, 0, 0.5}, {0, 1, 0.5}, {1, 1, 0.5}, {1, 2, 0.5}, {2, 2, 0.5}, {2, 0, 0.5}};
    const auto p = custom_matrix(3, t);
    EXPECT_TRUE(p.irreducible());
    EXPECT_FALSE(p.symmetric());
    EXPECT_FALSE(p.reversible());
    EXPECT_EQ(kind_of([&] { second_eigenvalue(p); }), ErrorKind::Unsupported);
}

TEST(Stationary, ReversibleChainMatchesOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = random_reversible_lazy_chain(9, seed);
        ASSERT_TRUE(p.reversible());
        ASSERT_TRUE(p.lazy());
        const auto expected = oracle::stationary(oracle::dense(p));
        const auto& pi = p.stationary().pi;
        for (Vertex v = 0; v < 9; ++v) EXPECT_NEAR(pi[v], expected[v], 1e-12);
    }
}

TEST(Stationary, NonUniformForIrregularLazyWalk) {
    // Plain lazy walk on a star: pi proportional to degree.
    std::vector<Triplet> t{{0, 0, 0.5}};
    for (Vertex leaf = 1; leaf < 4; ++leaf) {
        t.push_back({0, leaf, 0.5 / 3});
        t.push_back({leaf, 0, 0.5});
        t.push_back({leaf, leaf, 0.5});
    }
    const auto p = custom_matrix(4, t);
    EXPECT_TRUE(p.reversible());
    EXPECT_FALSE(p.symmetric());
    EXPECT_NEAR(p.stationary().pi[0], 0.5, 1e-12);
    EXPECT_NEAR(p.stationary().pi[1], 1.0 / 6, 1e-12);
}

TEST(PowerApply, Examples) {
    const auto k2 = lazy_rw_matrix(gen_complete(2));
    const std::vector<double> x{1.0, 0.0};
    EXPECT_EQ(power_apply(x, k2, 1), (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(power_apply(x, k2, 0), x);
    const auto tri = lazy_rw_matrix(gen_cycle(3));
    const std::vector<double> y{4.0, 0.0, 0.0};
    EXPECT_EQ(power_apply(y, tri, 1), (std::vector<double>{2.0, 1.0, 1.0}));
}

TEST(PowerApply, MatchesDenseOracle) {
    const auto p = random_reversible_lazy_chain(7, 3);
    const auto d = oracle::dense(p);
    const std::vector<double> x{3, 0, 1, 4, 1, 5, 9};
    for (std::size_t t : {0u, 1u, 5u, 17u}) {
        const auto got = power_apply(x, p, t);
        const auto want = oracle::row_times(x, oracle::power(d, t));
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
}

TEST(PowerApply, ColumnMatchesDenseOracle) {
    const auto p = random_reversible_lazy_chain(6, 8);
    const auto pt = oracle::power(oracle::dense(p), 9);
    const std::vector<double> e{0, 0, 1, 0, 0, 0};
    const auto col = power_apply_column(e, p, 9);
    for (std::size_t v = 0; v < 6; ++v) EXPECT_NEAR(col[v], pt[v][2], 1e-13);
}

TEST(PowerApply, LengthMismatch) {
    const auto p = lazy_rw_matrix(gen_cycle(3));
    const std::vector<double> x{1.0};
    EXPECT_EQ(kind_of([&] { power_apply(x, p, 1); }), ErrorKind::InvalidInput);
}

TEST(SecondEigenvalue, K2) { EXPECT_NEAR(second_eigenvalue(lazy_rw_matrix(gen_complete(2))), 0.0, 1e-14); }

TEST(SecondEigenvalue, Cycle4) { EXPECT_NEAR(second_eigenvalue(lazy_rw_matrix(gen_cycle(4))), 0.5, 1e-14); }

TEST(SecondEigenvalue, CirculantFormula) {
    for (std::size_t n = 3; n <= 40; ++n) {
        EXPECT_NEAR(second_eigenvalue(lazy_rw_matrix(gen_cycle(n))), oracle::cycle_lambda(n), 1e-12) << n;
    }
}

TEST(SecondEigenvalue, Hypercube) {
    // Lazy walk on Q_d has eigenvalues 1 - k/d, k = 0..d.
    for (std::size_t d = 1; d <= 6; ++d) {
        EXPECT_NEAR(second_eigenvalue(lazy_rw_matrix(gen_hypercube(d))), 1.0 - 1.0 / static_cast<double>(d), 1e-12);
    }
}

TEST(SecondEigenvalue, Errors) {
    EXPECT_EQ(kind_of([] { second_eigenvalue(identity_matrix(3)); }), ErrorKind::NotIrreducible);
    EXPECT_EQ(kind_of([] { second_eigenvalue(lazy_rw_matrix(gen_cycle(20)), 10); }), ErrorKind::SizeLimit);
}

TEST(MatrixText, RoundTrip) {
    const auto p = random_reversible_lazy_chain(6, 2);
    const auto q = parse_matrix(format_matrix(p));
    EXPECT_EQ(oracle::dense(p), oracle::dense(q));
}

TEST(MatrixText, Parse) {
    const auto p = parse_matrix("# K2\n2\n0 0 0.5\n0 1 0.5\n1 0 0.5\n1 1 0.5\n");
    EXPECT_TRUE(p.symmetric());
    EXPECT_EQ(kind_of([] { parse_matrix("2\n0 1\n"); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([] { parse_matrix(""); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([] { parse_matrix("1\n0 0 abc\n"); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([] { parse_matrix("2\n0 0 1\n1 1 0.5\n"); }), ErrorKind::Validation);
}

TEST(MinEntries, LazyRegular) {
    const auto p = lazy_rw_matrix(gen_hypercube(4));
    EXPECT_DOUBLE_EQ(p.min_positive_entry(), 1.0 / 8);
    EXPECT_DOUBLE_EQ(p.min_positive_flow(), 1.0 / (2.0 * 16 * 4));
}
