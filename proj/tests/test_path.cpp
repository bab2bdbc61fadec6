#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pathgibbs/error.hpp"
#include "pathgibbs/path.hpp"
#include "pathgibbs/stats.hpp"

using namespace pathgibbs;

TEST(Grid, RejectsNonPositiveHorizonAndStep) {
    EXPECT_THROW(Grid(0.0, 0.25), ConfigError);
    EXPECT_THROW(Grid(-1.0, 0.25), ConfigError);
    EXPECT_THROW(Grid(4.0, 0.0), ConfigError);
    EXPECT_THROW(Grid(4.0, -0.5), ConfigError);
    EXPECT_THROW(Grid(1.0, 0.3), ConfigError); // 2T / dt not an integer
}

TEST(Grid, NodesAndStepCount) {
    const Grid g(2.0, 0.25);
    EXPECT_EQ(g.n_steps(), 16u);
    EXPECT_NEAR(static_cast<double>(g.n_steps()) * g.dt(), 2.0 * g.horizon(), 1e-9);
    for (std::size_t k = 0; k <= g.n_steps(); ++k)
        EXPECT_DOUBLE_EQ(g.node_time(k), -2.0 + 0.25 * static_cast<double>(k));
    EXPECT_EQ(g.node_index(0.0), 8u);
    EXPECT_THROW(g.node_index(0.1), ArgumentError);
    EXPECT_THROW(g.node_index(2.25), ArgumentError);
}

TEST(IncrementPath, ZeroPathHasZeroIncrements) {
    const IncrementPath p(Grid(2.0, 0.25), 2);
    for (double v : p.increment(-2.0, 1.5)) EXPECT_EQ(v, 0.0);
}

TEST(IncrementPath, RampOracle) {
    const Grid g(2.0, 0.25);
    const std::vector<double> slope{1.0, 0.0};
    const IncrementPath p = ramp_path(g, slope);
    const auto x = p.increment(0.0, 1.0);
    EXPECT_NEAR(x[0], 1.0, 1e-15);
    EXPECT_EQ(x[1], 0.0);
}

TEST(IncrementPath, CocycleAndAntisymmetry) {
    const Grid g(4.0, 0.25);
    const IncrementPath p = sample_wiener(g, 3, 11);
    for (std::size_t i = 0; i <= g.n_steps(); i += 3)
        for (std::size_t j = i; j <= g.n_steps(); j += 5)
            for (std::size_t k = j; k <= g.n_steps(); k += 7) {
                const auto su = p.increment_nodes(i, j), ut = p.increment_nodes(j, k);
                const auto st = p.increment_nodes(i, k), ts = p.increment_nodes(k, i);
                for (std::size_t c = 0; c < 3; ++c) {
                    EXPECT_LE(std::fabs(su[c] + ut[c] - st[c]), 1e-12 * (1.0 + std::fabs(st[c])));
                    EXPECT_EQ(ts[c], -st[c]);
                }
            }
    for (double v : p.increment(1.0, 1.0)) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(p.increment(0.1, 1.0), ArgumentError);
}

TEST(IncrementPath, WienerMarginalsAndIndependence) {
    // 10^4 seeds: per-component variance |s - t| and disjoint correlations ~ 0.
    const Grid g(2.0, 0.25);
    const std::size_t n = 10000;
    std::vector<double> a, b, c;
    for (std::size_t s = 0; s < n; ++s) {
        const IncrementPath p = sample_wiener(g, 2, 1000 + s);
        a.push_back(p.increment(0.0, 1.0)[1]);
        b.push_back(p.increment(-1.5, 0.0)[0]);
        c.push_back(p.increment(1.0, 2.0)[1]);
    }
    auto check_var = [&](const std::vector<double>& x, double expected) {
        const double v = variance(x);
        const double se = expected * std::sqrt(2.0 / static_cast<double>(n));
        EXPECT_LE(std::fabs(v - expected), 5.0 * se) << v;
        EXPECT_LE(std::fabs(mean(x)), 5.0 * std::sqrt(expected / static_cast<double>(n)));
    };
    check_var(a, 1.0);
    check_var(b, 1.5);
    check_var(c, 1.0);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = a[i] * c[i];
    EXPECT_LE(std::fabs(mean(prod)), 5.0 * std::sqrt(variance(prod) / static_cast<double>(n)));
}

TEST(Splice, DefinitionAndCocycle) {
    const Grid g(2.0, 0.25);
    const IncrementPath x = sample_wiener(g, 1, 1), y = sample_wiener(g, 1, 2);
    const Interval I{-0.5, 0.75};
    EXPECT_TRUE(splice(x, x, I) == x);
    const IncrementPath z = splice(x, y, I);
    // [a, b] contains [c, d]: z_ab = y_ac + x_cd + y_db.
    const double a = -1.5, b = 1.5;
    const double expected = y.increment(a, I.lo)[0] + x.increment(I.lo, I.hi)[0] +
                            y.increment(I.hi, b)[0];
    EXPECT_NEAR(z.increment(a, b)[0], expected, 1e-12);
    const IncrementPath zero(g, 1);
    const IncrementPath w = splice(zero, y, I);
    EXPECT_EQ(w.increment(I.lo, I.hi)[0], 0.0);
    EXPECT_EQ(w.increment(-2.0, I.lo)[0], y.increment(-2.0, I.lo)[0]);
    EXPECT_THROW(splice(x, IncrementPath(Grid(4.0, 0.25), 1), I), ArgumentError);
}

TEST(Translate, ShiftAndComposition) {
    const Grid g(4.0, 0.25);
    const IncrementPath x = sample_wiener(g, 2, 5);
    EXPECT_TRUE(translate(x, 0.0) == x);
    const IncrementPath t = translate(x, 0.75);
    for (double s = -3.0; s <= 2.0; s += 0.5) {
        const auto lhs = t.increment(s, s + 1.0), rhs = x.increment(s + 0.75, s + 1.75);
        for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(lhs[c], rhs[c], 1e-12);
    }
    const IncrementPath ab = translate(translate(x, 0.5), -1.25), direct = translate(x, -0.75);
    for (double s = -2.0; s <= 2.0; s += 0.25)
        EXPECT_NEAR(ab.increment(s, s + 0.25)[0], direct.increment(s, s + 0.25)[0], 1e-12);
    EXPECT_THROW(translate(x, 0.1), ArgumentError);
}

TEST(Blocks, RoundTripIsBitExact) {
    const Grid g(4.0, 0.25);
    const IncrementPath x = sample_wiener(g, 3, 9);
    const auto blocks = to_blocks(x, 1.0);
    ASSERT_EQ(blocks.size(), 8u);
    EXPECT_EQ(blocks.front().index, -4);
    EXPECT_EQ(blocks.back().index, 3);
    EXPECT_TRUE(from_blocks(blocks, g) == x);
    EXPECT_THROW(to_blocks(x, 0.3), ArgumentError);
}

TEST(Blocks, DisjointBlocksAreIndependent) {
    const Grid g(2.0, 0.25);
    std::vector<double> prod;
    for (std::uint64_t s = 0; s < 5000; ++s) {
        const auto blocks = to_blocks(sample_wiener(g, 1, 50 + s), 1.0);
        double b0 = 0.0, b2 = 0.0;
        for (double v : blocks[0].steps) b0 += v;
        for (double v : blocks[2].steps) b2 += v;
        prod.push_back(b0 * b2);
    }
    EXPECT_LE(std::fabs(mean(prod)), 5.0 * std::sqrt(variance(prod) / 5000.0));
}

TEST(PathCsv, RoundTripKeepsEveryBit) {
    const Grid g(2.0, 0.125);
    const IncrementPath x = sample_wiener(g, 3, 77);
    std::stringstream buf;
    write_path_csv(buf, x, 77);
    const LoadedPath loaded = read_path_csv(buf);
    EXPECT_EQ(loaded.seed, 77u);
    EXPECT_TRUE(loaded.path == x);
}

TEST(Rng, SameSeedSameStream) {
    const Grid g(2.0, 0.25);
    EXPECT_TRUE(sample_wiener(g, 2, 3) == sample_wiener(g, 2, 3));
    EXPECT_FALSE(sample_wiener(g, 2, 3) == sample_wiener(g, 2, 4));
}
