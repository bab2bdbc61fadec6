#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pathgibbs/energy.hpp"
#include "pathgibbs/error.hpp"

using namespace pathgibbs;

namespace {

IncrementPath wiener(double horizon, double dt, std::size_t dim, std::uint64_t seed) {
    return sample_wiener(Grid(horizon, dt), dim, seed);
}

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Composite Simpson on [lo, hi] with n (even) panels.
template <class F> double simpson(F f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

} // namespace

TEST(InteriorEnergy, ZeroPathUnitIntervalClosedForm) {
    // int_{[0,1]^2} -1/(1+(t-s)^2) = -(pi/2 - ln 2).
    const double exact = -(M_PI / 2.0 - std::log(2.0));
    std::vector<double> dts, errs;
    for (double dt : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const EnergyContext ctx(Potential::nelson(), Grid(2.0, dt));
        const double v = interior_energy(ctx, IncrementPath(ctx.grid(), 1), {0.0, 1.0}).value;
        dts.push_back(dt);
        errs.push_back(std::fabs(v - exact));
    }
    EXPECT_LT(errs.back(), 1e-4);
    EXPECT_GE(loglog_slope(dts, errs), 0.9);
}

TEST(InteriorEnergy, GaussRuleAlsoConverges) {
    const double exact = -(M_PI / 2.0 - std::log(2.0));
    const EnergyContext ctx(Potential::nelson(), Grid(2.0, 1.0 / 32), QuadRule::gauss2);
    const EnergyValue v = interior_energy(ctx, IncrementPath(ctx.grid(), 1), {0.0, 1.0});
    EXPECT_NEAR(v.value, exact, 1e-4);
    EXPECT_GE(v.quad_error, 0.0);
}

TEST(InteriorEnergy, QuadraticBoundForBoundedPotential) {
    // |W| <= 1 gives |U_I| <= |I|^2.
    const EnergyContext ctx(Potential::nelson(), Grid(4.0, 0.125));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const IncrementPath x = sample_wiener(ctx.grid(), 2, seed);
        for (double len : {0.5, 1.0, 2.0}) {
            const double u = interior_energy(ctx, x, {0.0, len}).value;
            EXPECT_LE(std::fabs(u), len * len + 1e-12);
            EXPECT_LT(u, 0.0);
        }
    }
}

TEST(WindowEnergy, EqualsSumOfBlockPairs) {
    for (const Potential& pot : {Potential::nelson(), Potential::power_law(0.8, 1.5)}) {
        const EnergyContext ctx(pot, Grid(2.0, 0.25));
        const IncrementPath x = sample_wiener(ctx.grid(), 2, 9);
        double sum = 0.0;
        for (long i = -2; i < 2; ++i)
            for (long j = -2; j < 2; ++j) sum += block_pair_energy(ctx, x, i, j, 1.0);
        EXPECT_NEAR(window_energy(ctx, x).value, sum, 1e-10 * std::max(1.0, std::fabs(sum)));
    }
}

TEST(WindowEnergy, TimeReversalInvariance) {
    const EnergyContext ctx(Potential::nelson(), Grid(3.0, 0.25));
    const IncrementPath x = wiener(3.0, 0.25, 2, 4);
    std::vector<double> rev;
    for (std::size_t k = x.n_steps(); k-- > 0;)
        for (double v : x.step(k)) rev.push_back(v);
    const IncrementPath y(ctx.grid(), 2, rev);
    EXPECT_NEAR(window_energy(ctx, x).value, window_energy(ctx, y).value, 1e-10);
}

TEST(Cone, CellCountMatchesEnumeration) {
    const Grid grid(3.0, 0.5);
    for (const Interval& iv : {Interval{0.0, 1.0}, Interval{-3.0, -1.0}, Interval{-1.5, 3.0}}) {
        const Cone cone(grid, iv);
        const CellRange in = cells_of(grid, iv);
        std::size_t count = 0;
        for (std::size_t k = 0; k < grid.n_steps(); ++k)
            for (std::size_t l = 0; l < grid.n_steps(); ++l) {
                const bool ink = in.contains(k), inl = in.contains(l);
                const bool expected =
                    ink != inl || (!ink && !inl && ((k < in.first) != (l < in.first)));
                EXPECT_EQ(cone.contains(k, l), expected);
                count += expected;
            }
        EXPECT_EQ(cone.cell_count(), count);
        EXPECT_EQ(cone.cells().size(), count);
        EXPECT_DOUBLE_EQ(cone.area(), static_cast<double>(count) * 0.25);
    }
}

TEST(BoundaryEnergy, VanishesForZeroInterior) {
    const EnergyContext ctx(Potential::nelson(), Grid(4.0, 0.25));
    const IncrementPath y = wiener(4.0, 0.25, 1, 2);
    const EnergyValue v = boundary_energy(ctx, IncrementPath(ctx.grid(), 1), y, {0.0, 1.0});
    EXPECT_EQ(v.value, 0.0);
    const EnergyValue w = boundary_energy(ctx, wiener(4.0, 0.25, 1, 3), y, {0.0, 1.0});
    EXPECT_TRUE(std::isfinite(w.value));
    // The default radius 8|I| covers the window, so nothing is truncated.
    EXPECT_EQ(w.tail_error, 0.0);
    const EnergyContext narrow(Potential::nelson(), Grid(4.0, 0.25), QuadRule::midpoint, 2.0);
    const EnergyValue t = boundary_energy(narrow, wiener(4.0, 0.25, 1, 3), y, {0.0, 1.0});
    EXPECT_GT(t.tail_error, 0.0);
    EXPECT_LE(std::fabs(t.value - w.value), t.tail_error);
}

TEST(RelativeKernel, ZeroShiftVectorGivesZero) {
    const EnergyContext ctx(Potential::nelson(), Grid(4.0, 0.25));
    const std::vector<double> xi{0.0};
    const EnergyValue q = relative_energy_kernel(ctx, wiener(4.0, 0.25, 1, 5), xi, 0.0);
    EXPECT_EQ(q.value, 0.0);
    EXPECT_EQ(q.tail_error, 0.0);
}

TEST(RelativeKernel, ZeroPathMatchesOneDimensionalIntegral) {
    // Zero path: Q = int_0^{2R} min(tau, 2R - tau) f(a + tau) d tau with
    // f(u) = xi^2 / ((1+u^2)(1+xi^2+u^2)).
    const double horizon = 4.0, xi = 1.5;
    const EnergyContext ctx(Potential::nelson(), Grid(horizon, 1.0 / 32));
    const std::vector<double> x{xi};
    double last = std::numeric_limits<double>::infinity();
    for (double a : {0.0, 0.5, 1.0, 3.0}) {
        const auto f = [&](double tau) {
            const double u = a + tau;
            return std::min(tau, 2 * horizon - tau) * xi * xi / ((1 + u * u) * (1 + xi * xi + u * u));
        };
        const double exact = simpson(f, 0.0, horizon, 2000) + simpson(f, horizon, 2 * horizon, 2000);
        const EnergyValue q = relative_energy_kernel(ctx, IncrementPath(ctx.grid(), 1), x, a);
        EXPECT_NEAR(q.value, exact, 2e-3 * exact) << "a = " << a;
        EXPECT_LT(q.value, last);
        last = q.value;
    }
}

TEST(RelativeKernel, TailOffIsInfinite) {
    const EnergyContext ctx(Potential::nelson(), Grid(2.0, 0.25), QuadRule::midpoint, std::nullopt,
                            TailBoundMode::off);
    const std::vector<double> xi{1.0};
    EXPECT_TRUE(std::isinf(relative_energy_kernel(ctx, IncrementPath(ctx.grid(), 1), xi, 0.0).tail_error));
    EXPECT_THROW(relative_energy_kernel(ctx, IncrementPath(ctx.grid(), 1), xi, -1.0), ArgumentError);
}

TEST(DeltaEnergy, MatchesRecomputation) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> n(0.0, 0.5);
    for (const Potential& pot : {Potential::nelson(), Potential::power_law(-1.0, 2.0)}) {
        for (QuadRule rule : {QuadRule::midpoint, QuadRule::gauss2}) {
            const EnergyContext ctx(pot, Grid(3.0, 0.25), rule);
            IncrementPath x = wiener(3.0, 0.25, 2, 7);
            for (const CellRange changed : {CellRange{0, 3}, CellRange{10, 18}, CellRange{20, 24}}) {
                const std::vector<double> old(x.steps(changed).begin(), x.steps(changed).end());
                std::vector<double> fresh(old.size());
                for (double& v : fresh) v = n(gen);
                const double before = window_energy(ctx, x).value;
                const EnergyDelta d = delta_energy(ctx, x, changed, old, fresh);
                x.set_steps(changed.first, fresh);
                const double after = window_energy(ctx, x).value;
                EXPECT_NEAR(d.value, after - before, 1e-10 * std::max(1.0, std::fabs(before)));
                EXPECT_GT(d.cells_touched, 0u);
            }
        }
    }
}

TEST(BlockPairs, DecayOfSupMatchesPotentialExponent) {
    // For attractive radial W the sup over paths of |U_0k| sits at the zero
    // path, so M_U(k) = |U_0k(0)| ~ k^-gamma.
    for (const auto& [pot, gamma] : {std::pair{Potential::nelson(), 2.0},
                                     std::pair{Potential::power_law(-1.0, 1.5), 3.0}}) {
        const EnergyContext ctx(pot, Grid(40.0, 0.5));
        const IncrementPath zero(ctx.grid(), 1);
        std::vector<double> ks, m;
        for (long k = 8; k <= 32; k *= 2) {
            ks.push_back(static_cast<double>(k));
            m.push_back(std::fabs(block_pair_energy(ctx, zero, 0, k, 1.0)));
        }
        EXPECT_NEAR(loglog_slope(ks, m), -gamma, 0.15);
        // Tail sums sum_{k >= n} k M_U(k) ~ n^(2 - gamma) when gamma > 2.
        if (gamma > 2.0) {
            std::vector<double> ns, tails;
            for (long n0 : {4, 8, 16}) {
                double t = 0.0;
                for (long k = n0; k < 39; ++k)
                    t += static_cast<double>(k) * std::fabs(block_pair_energy(ctx, zero, 0, k, 1.0));
                // Add the continuum remainder beyond the window.
                t += std::pow(39.0, 2.0 - gamma) / (gamma - 2.0);
                ns.push_back(static_cast<double>(n0));
                tails.push_back(t);
            }
            EXPECT_NEAR(loglog_slope(ns, tails), 2.0 - gamma, 0.2);
        }
    }
}

TEST(Derivatives, GradientMatchesFiniteDifference) {
    for (const Potential& pot : {Potential::nelson(), Potential::power_law(-1.0, 2.0)}) {
        for (QuadRule rule : {QuadRule::midpoint, QuadRule::gauss2}) {
            const EnergyContext ctx(pot, Grid(2.0, 0.25), rule);
            IncrementPath x = wiener(2.0, 0.25, 2, 13);
            const std::vector<double> g = energy_gradient(ctx, x);
            ASSERT_EQ(g.size(), x.steps().size());
            const double h = 1e-6;
            for (std::size_t i = 0; i < g.size(); i += 3) {
                std::vector<double> s(x.steps().begin(), x.steps().end());
                s[i] += h;
                const double up = window_energy(ctx, IncrementPath(ctx.grid(), 2, s)).value;
                s[i] -= 2 * h;
                const double down = window_energy(ctx, IncrementPath(ctx.grid(), 2, s)).value;
                EXPECT_NEAR(g[i], (up - down) / (2 * h), 1e-6);
            }
        }
    }
}

TEST(Derivatives, BlockCrossHessianMatchesFiniteDifference) {
    const EnergyContext ctx(Potential::nelson(), Grid(2.0, 0.25));
    const IncrementPath x = wiener(2.0, 0.25, 2, 21);
    const std::vector<double> v{0.6, 0.8};
    const std::vector<CellRange> blocks{{0, 4}, {4, 8}, {8, 12}, {12, 16}};
    const auto hess = block_cross_hessian(ctx, x, blocks, v, 3);
    // d/dt d/ds H(x + t v 1_I + s v 1_J) at 0, by a second difference.
    const auto shifted = [&](const CellRange& a, double ta, const CellRange& b, double tb) {
        std::vector<double> s(x.steps().begin(), x.steps().end());
        for (std::size_t k = a.first; k < a.last; ++k)
            for (std::size_t c = 0; c < 2; ++c) s[k * 2 + c] += ta * v[c];
        for (std::size_t k = b.first; k < b.last; ++k)
            for (std::size_t c = 0; c < 2; ++c) s[k * 2 + c] += tb * v[c];
        return window_energy(ctx, IncrementPath(ctx.grid(), 2, s)).value;
    };
    const double h = 1e-4;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t lag = 1; i + lag < blocks.size() && lag <= 3; ++lag) {
            const CellRange& a = blocks[i];
            const CellRange& b = blocks[i + lag];
            const double fd = (shifted(a, h, b, h) - shifted(a, h, b, -h) - shifted(a, -h, b, h) +
                               shifted(a, -h, b, -h)) /
                              (4 * h * h);
            EXPECT_NEAR(hess[i][lag - 1], fd, 1e-5 * std::max(1.0, std::fabs(fd)));
        }
    const std::vector<CellRange> overlapping{{0, 4}, {2, 6}};
    EXPECT_THROW(block_cross_hessian(ctx, x, overlapping, v, 1), ArgumentError);
    const std::vector<double> bad{1.0};
    EXPECT_THROW(block_cross_hessian(ctx, x, blocks, bad, 1), ArgumentError);
}

TEST(EnergyContext, RejectsPathOnOtherGrid) {
    const EnergyContext ctx(Potential::nelson(), Grid(2.0, 0.25));
    EXPECT_ANY_THROW(window_energy(ctx, wiener(3.0, 0.25, 1, 1)));
}
