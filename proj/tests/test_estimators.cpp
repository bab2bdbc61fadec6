#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pathgibbs/error.hpp"
#include "pathgibbs/estimators.hpp"
#include "pathgibbs/stats.hpp"

using namespace pathgibbs;

namespace {

std::vector<IncrementPath> wiener_samples(const Grid& grid, std::size_t dim, std::size_t n,
                                          std::uint64_t seed) {
    Rng rng(seed);
    std::vector<IncrementPath> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_wiener(grid, dim, rng));
    return out;
}

DecayData nelson_decay() {
    DecayData d;
    d.alpha = 4.0;
    d.k_w = 8.0;
    d.gamma = 2.0;
    d.c_gamma = 1.0;
    return d;
}

/// E[(max - min)^2] of a discrete random walk with `steps` N(0, dt) steps.
double range_sq_oracle(std::size_t steps, double dt, std::size_t reps, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, std::sqrt(dt));
    double total = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        double x = 0.0, lo = 0.0, hi = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            x += z(gen);
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        total += (hi - lo) * (hi - lo);
    }
    return total / static_cast<double>(reps);
}

} // namespace

TEST(Certificate, FreeMeasureGivesOneHalf) {
    const LowerBoundCertificate c = lower_bound_certificate(nelson_decay(), 0.0, -2.0, 2.0);
    EXPECT_EQ(c.sigma_minus_sq, 0.5);
    EXPECT_LE(std::fabs(c.quadratic_root_check), 1e-12);
}

TEST(Certificate, NelsonClosedForm) {
    // c_hat = (2K / ((alpha-1)(alpha-2))) * 2 (len - ln(1 + len)) / len for alpha = 4.
    const double len = 4.0, k = 8.0;
    const double c_hat = (2 * k / 6.0) * 2.0 * (len - std::log(1 + len)) / len;
    const LowerBoundCertificate c = lower_bound_certificate(nelson_decay(), 0.2, -2.0, 2.0);
    EXPECT_NEAR(c.c_lambda_hat, c_hat, 1e-9);
    EXPECT_NEAR(c.c_lambda_hat, 3.1874, 5e-5);
    const double r = std::sqrt(c_hat * 0.2);
    const double y = (-r + std::sqrt(r * r + 8.0)) / 4.0;
    EXPECT_NEAR(c.sigma_minus_sq, y * y, 1e-12);
    EXPECT_NEAR(c.sigma_minus_sq, 0.2864, 5e-5);
    EXPECT_LE(std::fabs(c.quadratic_root_check), 1e-12);
}

TEST(Certificate, DecreasingInLambdaAndRefusedForSlowDecay) {
    double last = 1.0;
    for (double lambda : {0.0, 0.05, 0.2, 1.0, 5.0}) {
        const double s = lower_bound_certificate(nelson_decay(), lambda, 0.0, 4.0).sigma_minus_sq;
        EXPECT_LT(s, last);
        EXPECT_GT(s, 0.0);
        last = s;
    }
    DecayData slow = nelson_decay();
    slow.alpha = 3.0;
    EXPECT_THROW(lower_bound_certificate(slow, 0.1, 0.0, 1.0), ArgumentError);
}

TEST(Dobrushin, ZetaSumAndLinearity) {
    const DobrushinReport r = dobrushin_bound(nelson_decay(), 0.1, 1.0, 1.5);
    EXPECT_NEAR(r.zeta_sum, M_PI * M_PI / 6.0 - 1.0, 1e-12);
    EXPECT_NEAR(r.geometric_constant, 2.0 / 6.0, 1e-15);
    const double per = r.geometric_constant * 8.0 * 1.5 * 2.0 * (M_PI * M_PI / 6.0 - 1.0);
    EXPECT_NEAR(r.row_bound_per_lambda, per, 1e-12);
    EXPECT_NEAR(r.row_bound, 0.1 * per, 1e-12);
    EXPECT_NEAR(r.lambda_star, 1.0 / per, 1e-12);
    EXPECT_NEAR(dobrushin_bound(nelson_decay(), 0.3, 1.0, 1.5).row_bound, 3 * r.row_bound, 1e-12);
    EXPECT_EQ(dobrushin_bound(nelson_decay(), 0.0, 1.0, 1.5).status, "unconditional at lambda=0");
    EXPECT_EQ(dobrushin_bound(nelson_decay(), 0.5 / per, 1.0, 1.5).status, "unique");
    EXPECT_EQ(dobrushin_bound(nelson_decay(), 2.0 / per, 1.0, 1.5).status, "undecided");
}

TEST(Dobrushin, ZetaSumByDirectSummation) {
    DecayData d = nelson_decay();
    d.alpha = 5.5;
    double sum = 0.0;
    for (int m = 1; m < 2000000; ++m) sum += std::pow(1.0 + m, -3.5);
    EXPECT_NEAR(dobrushin_bound(d, 0.1, 1.0, 1.0).zeta_sum, sum, 1e-9);
}

TEST(Diffusion, FreeMeasureNormalizedIsOne) {
    const auto samples = wiener_samples(Grid(4.0, 0.25), 2, 4000, 1);
    const DiffusionEstimate e = diffusion(samples, -1.0, 1.0);
    EXPECT_NEAR(e.normalized, 1.0, 4 * e.normalized_se);
    EXPECT_NEAR(e.normalized_se, std::sqrt(2.0 / 4000), 0.01);
    EXPECT_FALSE(e.unreliable);
    EXPECT_THROW(diffusion(samples, -1.1, 1.0), ArgumentError);
}

TEST(Covariance, FreeMeasureIsWhite) {
    const std::vector<double> v{1.0};
    const auto samples = wiener_samples(Grid(8.0, 0.25), 1, 3000, 2);
    const CovarianceDecay c = covariance_decay(samples, 1.0, v, 3);
    ASSERT_EQ(c.rows.size(), 4u);
    EXPECT_NEAR(c.rows[0].cov, 1.0, 4 * c.rows[0].se);
    for (std::size_t n = 1; n < 4; ++n) EXPECT_NEAR(c.rows[n].cov, 0.0, 4 * c.rows[n].se);
    EXPECT_EQ(c.n_blocks, 8u);
    EXPECT_EQ(c.method, "direct");
}

TEST(Covariance, ScoreVanishesAtZeroCoupling) {
    const std::vector<double> v{1.0};
    const EnergyContext ctx(Potential::nelson(), Grid(4.0, 0.25));
    const auto samples = wiener_samples(ctx.grid(), 1, 200, 3);
    const CovarianceDecay s = covariance_decay_score(ctx, 0.0, samples, 0.5, v, 3);
    for (std::size_t n = 1; n < s.rows.size(); ++n) EXPECT_EQ(s.rows[n].cov, 0.0);
    EXPECT_EQ(s.method, "score");
}

TEST(Covariance, ScoreAgreesWithDirectUnderCoupling) {
    const std::vector<double> v{1.0};
    const EnergyContext ctx(Potential::nelson(), Grid(6.0, 0.25));
    SamplerConfig cfg;
    cfg.lambda = 1.0;
    cfg.n_sweeps = 6000;
    cfg.burn_in = 500;
    cfg.thin = 2;
    cfg.seed = 5;
    const ChainResult r = run_chain(ctx, cfg, 1);
    const CovarianceDecay d = covariance_decay(r.samples, 0.5, v, 2);
    const CovarianceDecay s = covariance_decay_score(ctx, 1.0, r.samples, 0.5, v, 2);
    for (std::size_t n = 1; n <= 2; ++n) {
        const double se = std::hypot(d.rows[n].se, s.rows[n].se);
        EXPECT_NEAR(d.rows[n].cov, s.rows[n].cov, 4 * se) << n;
        EXPECT_LT(s.rows[n].se, d.rows[n].se) << n;
    }
    // Attraction makes neighbouring blocks anti-correlated.
    EXPECT_LT(s.rows[1].cov, 0.0);
    EXPECT_LT(s.rows[1].cov, -3 * s.rows[1].se);
}

TEST(Covariance, InputValidation) {
    const auto samples = wiener_samples(Grid(4.0, 0.25), 2, 10, 4);
    const std::vector<double> wrong{1.0}, unnormalized{1.0, 1.0}, ok{1.0, 0.0};
    EXPECT_THROW(covariance_decay(samples, 1.0, wrong, 1), ArgumentError);
    EXPECT_THROW(covariance_decay(samples, 1.0, unnormalized, 1), ArgumentError);
    EXPECT_THROW(covariance_decay(samples, 0.3, ok, 1), ArgumentError);
}

TEST(BlockNorm, BruteForceSupremum) {
    const IncrementPath p = sample_wiener(Grid(2.0, 0.25), 2, 7);
    const std::size_t a = p.grid().node_index(0.0), b = p.grid().node_index(1.0);
    double best = 0.0;
    for (std::size_t i = a; i <= b; ++i)
        for (std::size_t j = a; j <= b; ++j) {
            const auto x = p.increment_nodes(i, j);
            best = std::max(best, x[0] * x[0] + x[1] * x[1]);
        }
    EXPECT_NEAR(block_norm_sq(p, 0.0, 1.0), best, 1e-14);
}

TEST(SigmaSq, FreeMeasureMatchesRangeOracle) {
    const double dt = 0.125;
    const EnergyContext ctx(Potential::nelson(), Grid(4.0, dt));
    SamplerConfig cfg;
    cfg.n_sweeps = 3000;
    cfg.burn_in = 100;
    cfg.seed = 9;
    double last = 0.0;
    for (double len : {0.5, 1.0}) {
        const SigmaSqEstimate s = sigma_sq_estimate(ctx, cfg, len, 1, 4.0);
        const double oracle = range_sq_oracle(static_cast<std::size_t>(len / dt), dt, 200000, 1);
        // Max over bulk blocks biases upward by a few standard errors at most.
        EXPECT_GT(s.unconditioned, oracle - 3 * s.unconditioned_se) << len;
        EXPECT_LT(s.unconditioned, oracle + 6 * s.unconditioned_se) << len;
        // The continuum value 4 ln 2 L bounds the discrete range from above.
        EXPECT_LT(oracle, 4 * std::log(2.0) * len);
        EXPECT_GE(s.conservative, s.unconditioned);
        EXPECT_GT(s.unconditioned, last);
        last = s.unconditioned;
    }
}

TEST(Clt, FreeMeasureIsGaussianAndIsotropic) {
    const auto samples = wiener_samples(Grid(8.0, 0.25), 2, 3000, 11);
    const std::vector<double> eps{0.25, 0.125};
    const std::vector<std::vector<double>> dirs{{1.0, 0.0}, {0.0, 1.0}, {M_SQRT1_2, M_SQRT1_2}};
    const CltReport r = clt_test(samples, eps, dirs);
    ASSERT_EQ(r.scales.size(), 2u);
    for (const CltScale& s : r.scales) {
        EXPECT_GE(s.stride, 5u);
        EXPECT_LE(s.stride, 6u);
        EXPECT_FALSE(s.too_few_batches);
        for (const KsDirection& k : s.ks) {
            EXPECT_GT(k.p_value, 0.001);
            EXPECT_EQ(k.values.size(), s.n_batches);
        }
        EXPECT_LT(s.max_offdiag_z, 4.0);
        EXPECT_LT(s.max_diag_z, 4.0);
        EXPECT_NEAR(s.covariance[0][0], 1.0, 0.2);
    }
    const std::vector<double> too_fine{0.05};
    EXPECT_THROW(clt_test(samples, too_fine, dirs), ArgumentError);
}

TEST(Mixing, FreeMeasureProxyIsSmall) {
    const auto samples = wiener_samples(Grid(8.0, 0.25), 1, 2000, 12);
    const auto rows = mixing_proxy(samples, 1.0, 3);
    ASSERT_EQ(rows.size(), 4u);
    // Row 0 correlates features within one block.
    EXPECT_GT(rows[0].rho, 0.5);
    for (const MixingRow& r : std::span(rows).subspan(1)) {
        EXPECT_LT(r.rho, 0.12) << r.n << " " << r.best_pair;
        EXPECT_GE(r.rho, 0.0);
    }
}

TEST(Mixing, DetectsDependence) {
    // Copy block 0 into block 1: one of the seven pooled lag-1 pairs is
    // perfectly correlated, so the proxy sits near 1/7 above the noise.
    auto samples = wiener_samples(Grid(8.0, 0.25), 1, 500, 13);
    const double baseline = mixing_proxy(samples, 1.0, 1)[1].rho;
    const Grid& g = samples.front().grid();
    for (auto& p : samples) {
        const std::size_t a = g.node_index(0.0), b = g.node_index(1.0);
        const std::vector<double> block(p.steps().begin() + a, p.steps().begin() + b);
        p.set_steps(b, block);
    }
    const auto rows = mixing_proxy(samples, 1.0, 1);
    EXPECT_GT(rows[1].rho, 1.0 / 7.0);
    EXPECT_GT(rows[1].rho, 2 * baseline);
}

TEST(Json, ReportsSerialize) {
    const auto c = lower_bound_certificate(nelson_decay(), 0.2, -2.0, 2.0);
    EXPECT_NEAR(to_json(c)["sigma_minus_sq"].get<double>(), c.sigma_minus_sq, 1e-15);
    const auto d = dobrushin_bound(nelson_decay(), 0.1, 1.0, 1.5);
    EXPECT_EQ(to_json(d)["status"].get<std::string>(), d.status);
}
