#include "pathgibbs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "pathgibbs/error.hpp"
#include "pathgibbs/numeric.hpp"
#include "pathgibbs/stats.hpp"

namespace pathgibbs {

namespace {

nlohmann::json number(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

void require_samples(std::span<const IncrementPath> samples, std::size_t minimum, const char* op) {
    if (samples.size() < minimum)
        throw ArgumentError(fmt::format("{}: need at least {} samples, got {}", op, minimum,
                                        samples.size()));
}

/// Block lattice indices i with [iL, (i+1)L] inside the bulk window.
std::pair<long, long> bulk_blocks(const Grid& grid, double block_length) {
    const Interval bulk = bulk_window(grid);
    const long first = static_cast<long>(std::ceil(bulk.lo / block_length - 1e-9));
    const long last = static_cast<long>(std::floor(bulk.hi / block_length + 1e-9));
    return {first, last}; // blocks first..last-1
}

/// sup_{s,t in [lo, hi]} |x_st|^2 from node positions.
double range_sq(std::span<const double> pos, std::size_t dim, std::size_t lo, std::size_t hi) {
    double best = 0.0;
    for (std::size_t i = lo; i <= hi; ++i)
        for (std::size_t j = i + 1; j <= hi; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = pos[j * dim + c] - pos[i * dim + c];
                s += d * d;
            }
            best = std::max(best, s);
        }
    return best;
}

double unit_norm_check(std::span<const double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    return std::sqrt(n);
}

} // namespace

// ---------------------------------------------------------------------------
// Diffusion and certificate

DiffusionEstimate diffusion(std::span<const IncrementPath> samples, double a, double b) {
    require_samples(samples, 2, "diffusion");
    if (!(b > a)) throw ArgumentError("diffusion: need a < b");
    const std::size_t dim = samples.front().dim();
    std::vector<double> series;
    series.reserve(samples.size());
    for (const IncrementPath& p : samples) {
        const auto x = p.increment(a, b);
        double s = 0.0;
        for (double v : x) s += v * v;
        series.push_back(s / static_cast<double>(dim));
    }
    const MeanEstimate m = estimate_mean(series);
    DiffusionEstimate out;
    out.a = a;
    out.b = b;
    out.second_moment = m.mean;
    out.standard_error = m.standard_error;
    out.normalized = m.mean / (b - a);
    out.normalized_se = m.standard_error / (b - a);
    out.n_samples = samples.size();
    out.tau = m.tau;
    out.ess = m.ess;
    out.unreliable = m.ess < 30.0;
    return out;
}

LowerBoundCertificate lower_bound_certificate(const DecayData& decay, double lambda, double a,
                                              double b) {
    if (!(decay.alpha > 3.0))
        throw ArgumentError(fmt::format(
            "lower bound certificate: requires alpha > 3 (got {}), the bound diverges",
            decay.alpha));
    if (!(lambda >= 0.0)) throw ArgumentError("lower bound certificate: requires lambda >= 0");
    const double len = std::fabs(b - a);
    if (!(len > 0.0)) throw ArgumentError("lower bound certificate: empty interval");
    const double alpha = decay.alpha;
    // |D_t D_s H_T| <= 2K/((alpha-1)(alpha-2)) (1+|s-t|)^(2-alpha), integrated over [a,b]^2.
    const double pointwise = 2.0 * decay.k_w / ((alpha - 1.0) * (alpha - 2.0));
    const double square =
        2.0 * integrate([&](double u) { return (len - u) * std::pow(1.0 + u, 2.0 - alpha); }, 0.0,
                        len, 64);
    LowerBoundCertificate c;
    c.lambda = lambda;
    c.a = a;
    c.b = b;
    c.alpha = alpha;
    c.k_w = decay.k_w;
    c.c_lambda_hat = pointwise * square / len;
    const double r = std::sqrt(c.c_lambda_hat * lambda);
    const double root = std::sqrt(r * r + 8.0);
    c.sigma_minus = (-r + root) / 4.0;
    // Expanded square, exact 1/2 at lambda = 0.
    c.sigma_minus_sq = (r * r + 4.0 - r * root) / 8.0;
    c.quadratic_root_check = 2.0 * c.sigma_minus_sq - 1.0 + r * c.sigma_minus;
    return c;
}

DecayData effective_decay(const Potential& pot, const ConditionReport& report) {
    if (report.h4.verdict != Verdict::holds)
        throw ArgumentError(fmt::format("(H4) does not hold (verdict {}, alpha fit {:.3f})",
                                        to_string(report.h4.verdict), report.h4.alpha_fit));
    if (pot.declared_decay()) return *pot.declared_decay();
    DecayData d;
    d.gamma = report.h3b.gamma_fit;
    d.c_gamma = report.h3b.c_gamma_fit;
    d.alpha = report.h4.alpha_fit;
    d.k_w = report.h4.k_w_fit;
    return d;
}

// ---------------------------------------------------------------------------
// Covariance decay

namespace {

struct BlockLattice {
    long first = 0;
    std::size_t count = 0;
    std::vector<CellRange> cells;
};

BlockLattice covariance_lattice(std::span<const IncrementPath> samples, double block_length,
                                std::span<const double> direction, std::size_t n_max) {
    require_samples(samples, 2, "covariance decay");
    const Grid& grid = samples.front().grid();
    if (direction.size() != samples.front().dim())
        throw ArgumentError("covariance decay: direction has wrong size");
    if (std::fabs(unit_norm_check(direction) - 1.0) > 1e-9)
        throw ArgumentError("covariance decay: direction must be a unit vector");
    grid.steps_in(block_length);
    const auto [first, last] = bulk_blocks(grid, block_length);
    BlockLattice lat;
    lat.first = first;
    lat.count = last > first ? static_cast<std::size_t>(last - first) : 0;
    if (lat.count < n_max + 1)
        throw ArgumentError(fmt::format(
            "covariance decay: {} bulk blocks of length {} cannot reach lag {}", lat.count,
            block_length, n_max));
    for (std::size_t i = 0; i < lat.count; ++i) {
        const double lo = static_cast<double>(first + static_cast<long>(i)) * block_length;
        lat.cells.push_back({grid.node_index(lo), grid.node_index(lo + block_length)});
    }
    return lat;
}

std::vector<double> block_sums(const IncrementPath& p, const BlockLattice& lat,
                               std::span<const double> direction) {
    const std::size_t dim = p.dim();
    const std::vector<double> pos = p.node_positions();
    std::vector<double> y(lat.count);
    for (std::size_t i = 0; i < lat.count; ++i) {
        double v = 0.0;
        for (std::size_t c = 0; c < dim; ++c)
            v += direction[c] * (pos[lat.cells[i].last * dim + c] - pos[lat.cells[i].first * dim + c]);
        y[i] = v;
    }
    return y;
}

/// Mean over i of Y_i Y_{i+n}, the per-sample lag statistic of the direct estimator.
double lag_product(std::span<const double> y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i + n < y.size(); ++i) s += y[i] * y[i + n];
    return s / static_cast<double>(y.size() - n);
}

/// Rows, partial sums and the power-law fit from per-sample lag statistics.
void finish_covariance(CovarianceDecay& out, const std::vector<std::vector<double>>& lag,
                       const CovarianceOptions& options) {
    const std::size_t n_max = lag.size() - 1;
    std::vector<std::vector<double>> partial(lag.size());
    for (std::size_t k = 0; k < lag[0].size(); ++k) {
        double running = 0.0;
        for (std::size_t n = 0; n <= n_max; ++n) {
            running += n == 0 ? lag[n][k] : 2.0 * lag[n][k];
            partial[n].push_back(running);
        }
    }
    std::vector<double> fx, fy;
    for (std::size_t n = 0; n <= n_max; ++n) {
        const MeanEstimate c = estimate_mean(lag[n]);
        const MeanEstimate s = estimate_mean(partial[n]);
        out.rows.push_back({n, c.mean, c.standard_error, s.mean, s.standard_error});
        const bool significant = std::fabs(c.mean) >= options.min_z * c.standard_error;
        if (n >= 1 && !significant && out.noise_floor_n == 0) out.noise_floor_n = n;
        if (n >= options.fit_lo && n <= options.fit_hi && significant && c.mean != 0.0) {
            fx.push_back(std::log(static_cast<double>(n)));
            fy.push_back(std::log(std::fabs(c.mean)));
        }
    }
    out.truncated = out.noise_floor_n != 0;
    out.fit_lo = options.fit_lo;
    out.fit_hi = std::min(options.fit_hi, n_max);
    out.fit_points = fx.size();
    out.exponent = fx.size() >= 2 ? fit_line(fx, fy).slope : std::numeric_limits<double>::quiet_NaN();
}

CovarianceDecay covariance_header(std::span<const IncrementPath> samples, double block_length,
                                  std::span<const double> direction, const BlockLattice& lat,
                                  std::string method) {
    CovarianceDecay out;
    out.method = std::move(method);
    out.block_length = block_length;
    out.direction.assign(direction.begin(), direction.end());
    out.n_blocks = lat.count;
    out.n_samples = samples.size();
    return out;
}

} // namespace

CovarianceDecay covariance_decay(std::span<const IncrementPath> samples, double block_length,
                                 std::span<const double> direction, std::size_t n_max,
                                 const CovarianceOptions& options) {
    const BlockLattice lat = covariance_lattice(samples, block_length, direction, n_max);
    CovarianceDecay out = covariance_header(samples, block_length, direction, lat, "direct");
    std::vector<std::vector<double>> lag(n_max + 1);
    CompensatedSum y_sum;
    for (const IncrementPath& p : samples) {
        const std::vector<double> y = block_sums(p, lat, direction);
        for (double v : y) y_sum += v;
        for (std::size_t n = 0; n <= n_max; ++n) lag[n].push_back(lag_product(y, n));
    }
    out.mean_y = y_sum.value() / static_cast<double>(lat.count * samples.size());
    finish_covariance(out, lag, options);
    return out;
}

CovarianceDecay covariance_decay_score(const EnergyContext& ctx, double lambda,
                                       std::span<const IncrementPath> samples,
                                       double block_length, std::span<const double> direction,
                                       std::size_t n_max, const CovarianceOptions& options) {
    const BlockLattice lat = covariance_lattice(samples, block_length, direction, n_max);
    CovarianceDecay out = covariance_header(samples, block_length, direction, lat, "score");
    const double dt = ctx.grid().dt();
    const std::size_t dim = samples.front().dim();
    std::vector<std::vector<double>> lag(n_max + 1);
    CompensatedSum y_sum;
    std::vector<double> a(lat.count);
    for (const IncrementPath& p : samples) {
        const std::vector<double> y = block_sums(p, lat, direction);
        for (double v : y) y_sum += v;
        lag[0].push_back(lag_product(y, 0));
        if (n_max == 0) continue;
        // Gaussian integration by parts twice on the reference measure:
        // Cov(Y_i, Y_j) = E[A_i A_j] - lambda dt^2 E[B_ij], i != j.
        const std::vector<double> grad = energy_gradient(ctx, p);
        for (std::size_t i = 0; i < lat.count; ++i) {
            double s = 0.0;
            for (std::size_t k = lat.cells[i].first; k < lat.cells[i].last; ++k)
                for (std::size_t c = 0; c < dim; ++c) s += direction[c] * grad[k * dim + c];
            a[i] = lambda * dt * s;
        }
        const auto cross = block_cross_hessian(ctx, p, lat.cells, direction, n_max);
        for (std::size_t n = 1; n <= n_max; ++n) {
            double s = 0.0;
            for (std::size_t i = 0; i + n < lat.count; ++i)
                s += a[i] * a[i + n] - lambda * dt * dt * cross[i][n - 1];
            lag[n].push_back(s / static_cast<double>(lat.count - n));
        }
    }
    out.mean_y = y_sum.value() / static_cast<double>(lat.count * samples.size());
    finish_covariance(out, lag, options);
    return out;
}

// ---------------------------------------------------------------------------
// Dobrushin bound

DobrushinReport dobrushin_bound(const DecayData& decay, double lambda, double block_length,
                                double sigma_sq) {
    if (!(decay.alpha > 3.0))
        throw ArgumentError(fmt::format(
            "Dobrushin bound: requires alpha > 3 (got {}), the row sum diverges", decay.alpha));
    if (!(sigma_sq >= 0.0) || !std::isfinite(sigma_sq))
        throw ArgumentError("Dobrushin bound: sigma^2 must be finite and >= 0");
    DobrushinReport r;
    r.block_length = block_length;
    r.sigma_sq = sigma_sq;
    r.alpha = decay.alpha;
    r.k_w = decay.k_w;
    r.lambda = lambda;
    r.geometric_constant = 2.0 / ((decay.alpha - 1.0) * (decay.alpha - 2.0));
    r.zeta_sum = shifted_zeta(decay.alpha - 2.0);
    r.row_bound_per_lambda = r.geometric_constant * decay.k_w * sigma_sq * 2.0 * r.zeta_sum;
    r.row_bound = std::fabs(lambda) * r.row_bound_per_lambda;
    r.lambda_star = r.row_bound_per_lambda > 0.0 ? 1.0 / r.row_bound_per_lambda
                                                 : std::numeric_limits<double>::infinity();
    if (lambda == 0.0)
        r.status = "unconditional at lambda=0";
    else
        r.status = r.row_bound < 1.0 ? "unique" : "undecided";
    return r;
}

// ---------------------------------------------------------------------------
// sigma^2

double block_norm_sq(const IncrementPath& path, double lo, double block_length) {
    const Grid& grid = path.grid();
    const std::size_t a = grid.node_index(lo), b = grid.node_index(lo + block_length);
    const std::vector<double> pos = path.node_positions();
    return range_sq(pos, path.dim(), a, b);
}

SigmaSqEstimate sigma_sq_estimate(const EnergyContext& ctx, const SamplerConfig& config,
                                  double block_length, std::size_t dim, double probe_slope) {
    const Grid& grid = ctx.grid();
    grid.steps_in(block_length);
    SigmaSqEstimate out;
    out.block_length = block_length;

    SamplerConfig free_config = config;
    free_config.active.reset();
    const ChainResult free = run_chain(ctx, free_config, dim);
    require_samples(free.samples, 2, "sigma^2 estimate");
    out.n_samples = free.samples.size();
    const auto [first, last] = bulk_blocks(grid, block_length);
    if (last <= first) throw ArgumentError("sigma^2 estimate: no block fits in the bulk window");
    for (long i = first; i < last; ++i) {
        std::vector<double> series;
        const std::size_t a = grid.node_index(static_cast<double>(i) * block_length);
        const std::size_t b = grid.node_index(static_cast<double>(i + 1) * block_length);
        for (const IncrementPath& p : free.samples)
            series.push_back(range_sq(p.node_positions(), dim, a, b));
        const MeanEstimate m = estimate_mean(series);
        if (m.mean > out.unconditioned) {
            out.unconditioned = m.mean;
            out.unconditioned_se = m.standard_error;
        }
    }

    // Conditioned kernel on tau_0 with a steep ramp outside.
    std::vector<double> slope(dim, 0.0);
    slope[0] = probe_slope;
    IncrementPath exterior = ramp_path(grid, slope);
    SamplerConfig probe_config = config;
    probe_config.seed = derive_seed(config.seed, 2);
    probe_config.active = Interval{0.0, block_length};
    probe_config.block = std::min(config.block, grid.steps_in(block_length));
    const ChainResult probe = run_chain(ctx, probe_config, dim, exterior);
    std::vector<double> series;
    for (const IncrementPath& p : probe.samples) series.push_back(block_norm_sq(p, 0.0, block_length));
    require_samples(probe.samples, 2, "sigma^2 probe");
    const MeanEstimate m = estimate_mean(series);
    out.extreme_probe = m.mean;
    out.extreme_probe_se = m.standard_error;
    out.conservative = std::max(out.unconditioned, out.extreme_probe);
    return out;
}

// ---------------------------------------------------------------------------
// CLT

CltReport clt_test(std::span<const IncrementPath> samples, std::span<const double> epsilons,
                   std::span<const std::vector<double>> directions) {
    require_samples(samples, 2, "CLT test");
    const Grid& grid = samples.front().grid();
    const std::size_t dim = samples.front().dim();
    const Interval bulk = bulk_window(grid);
    CltReport report;

    for (double eps : epsilons) {
        if (!(eps > 0.0)) throw ArgumentError("CLT test: epsilon must be > 0");
        const double half = 0.5 / eps;
        if (half > bulk.hi + 1e-9)
            throw ArgumentError(fmt::format(
                "CLT test: window of length {} for epsilon {} exceeds the bulk [{}, {}]", 2 * half,
                eps, bulk.lo, bulk.hi));
        const double scale = std::sqrt(eps);
        std::vector<std::vector<double>> x(dim);
        for (const IncrementPath& p : samples) {
            const auto inc = p.increment(-half, half);
            for (std::size_t c = 0; c < dim; ++c) x[c].push_back(scale * inc[c]);
        }
        // Batches at least 5 iact apart, with iact taken over all components.
        double tau = 1.0;
        for (std::size_t c = 0; c < dim; ++c) {
            std::vector<double> sq(x[c].size());
            for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = x[c][k] * x[c][k];
            tau = std::max({tau, iact(x[c]).tau, iact(sq).tau});
        }
        CltScale s;
        s.epsilon = eps;
        s.stride = static_cast<std::size_t>(std::ceil(5.0 * tau));
        std::vector<std::vector<double>> batch(dim);
        for (std::size_t c = 0; c < dim; ++c) batch[c] = subsample(x[c], s.stride);
        const std::size_t n = batch.front().size();
        s.n_batches = n;
        s.too_few_batches = n < 30;
        if (n < 3) {
            report.scales.push_back(s);
            continue;
        }

        for (const std::vector<double>& v : directions) {
            if (v.size() != dim) throw ArgumentError("CLT test: direction has wrong size");
            std::vector<double> proj(n, 0.0);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t c = 0; c < dim; ++c) proj[k] += v[c] * batch[c][k];
            const KsResult ks = ks_normal(proj, mean(proj), std::sqrt(variance(proj)));
            s.ks.push_back({v, ks.distance, ks.p_value, 0.26 / std::sqrt(static_cast<double>(n)),
                            std::move(proj)});
        }

        Eigen::MatrixXd cov(dim, dim);
        Eigen::MatrixXd se(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
                std::vector<double> prod(n);
                for (std::size_t k = 0; k < n; ++k) prod[k] = batch[i][k] * batch[j][k];
                cov(i, j) = mean(prod);
                se(i, j) = std::sqrt(variance(prod) / static_cast<double>(n));
            }
        const Eigen::MatrixXd dev =
            cov - (cov.trace() / static_cast<double>(dim)) * Eigen::MatrixXd::Identity(dim, dim);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dev);
        s.isotropy_distance = eig.eigenvalues().cwiseAbs().maxCoeff();
        for (std::size_t i = 0; i < dim; ++i) {
            s.covariance.emplace_back();
            for (std::size_t j = 0; j < dim; ++j) {
                s.covariance.back().push_back(cov(i, j));
                if (i < j) {
                    s.max_offdiag_z = std::max(s.max_offdiag_z, std::fabs(cov(i, j)) / se(i, j));
                    std::vector<double> diff(n);
                    for (std::size_t k = 0; k < n; ++k)
                        diff[k] = batch[i][k] * batch[i][k] - batch[j][k] * batch[j][k];
                    const double z = mean(diff) / std::sqrt(variance(diff) / static_cast<double>(n));
                    s.max_diag_z = std::max(s.max_diag_z, std::fabs(z));
                }
            }
        }
        report.scales.push_back(std::move(s));
    }

    const auto [first, last] = bulk_blocks(grid, 1.0);
    if (grid.is_node(0.0) && grid.is_node(1.0) && last - first >= 2) {
        std::vector<double> e1(dim, 0.0);
        e1[0] = 1.0;
        const auto lag_max = static_cast<std::size_t>(last - first - 1);
        report.sigma_sq_series = covariance_decay(samples, 1.0, e1, lag_max).rows;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Mixing proxy

std::vector<MixingRow> mixing_proxy(std::span<const IncrementPath> samples, double block_length,
                                    std::size_t n_max) {
    require_samples(samples, 2, "mixing proxy");
    const Grid& grid = samples.front().grid();
    const std::size_t dim = samples.front().dim();
    grid.steps_in(block_length);
    const auto [first, last] = bulk_blocks(grid, block_length);
    const std::size_t blocks = last > first ? static_cast<std::size_t>(last - first) : 0;
    if (blocks < n_max + 1)
        throw ArgumentError(fmt::format("mixing proxy: {} bulk blocks cannot reach lag {}", blocks,
                                        n_max));

    static const char* names[] = {"linear", "squared", "sup_norm", "clipped_indicator"};
    constexpr std::size_t kDict = 4;
    // features[f][k * blocks + i]
    std::vector<std::vector<double>> features(kDict);
    const double clip = std::sqrt(block_length);
    for (const IncrementPath& p : samples) {
        const std::vector<double> pos = p.node_positions();
        for (std::size_t i = 0; i < blocks; ++i) {
            const double lo = static_cast<double>(first + static_cast<long>(i)) * block_length;
            const std::size_t a = grid.node_index(lo), b = grid.node_index(lo + block_length);
            const double x0 = pos[b * dim] - pos[a * dim];
            double sq = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = pos[b * dim + c] - pos[a * dim + c];
                sq += d * d;
            }
            features[0].push_back(x0);
            features[1].push_back(sq);
            features[2].push_back(std::sqrt(range_sq(pos, dim, a, b)));
            features[3].push_back(std::fabs(x0) > clip ? 1.0 : 0.0);
        }
    }
    std::vector<double> mu(kDict), sd(kDict);
    for (std::size_t f = 0; f < kDict; ++f) {
        mu[f] = mean(features[f]);
        sd[f] = std::sqrt(variance(features[f]));
    }

    std::vector<MixingRow> rows;
    for (std::size_t n = 0; n <= n_max; ++n) {
        MixingRow row;
        row.n = n;
        for (std::size_t f = 0; f < kDict; ++f)
            for (std::size_t g = 0; g < kDict; ++g) {
                if (sd[f] == 0.0 || sd[g] == 0.0) continue;
                CompensatedSum s;
                std::size_t count = 0;
                for (std::size_t k = 0; k < samples.size(); ++k)
                    for (std::size_t i = 0; i + n < blocks; ++i) {
                        s += (features[f][k * blocks + i] - mu[f]) *
                             (features[g][k * blocks + i + n] - mu[g]);
                        ++count;
                    }
                const double corr = s.value() / static_cast<double>(count) / (sd[f] * sd[g]);
                if (std::fabs(corr) > row.rho) {
                    row.rho = std::fabs(corr);
                    row.best_pair = fmt::format("{}~{}", names[f], names[g]);
                }
            }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const DiffusionEstimate& e) {
    return {{"a", e.a},
            {"b", e.b},
            {"second_moment", e.second_moment},
            {"standard_error", e.standard_error},
            {"normalized", e.normalized},
            {"normalized_se", e.normalized_se},
            {"n_samples", e.n_samples},
            {"iact", e.tau},
            {"ess", e.ess},
            {"unreliable", e.unreliable}};
}

nlohmann::json to_json(const LowerBoundCertificate& c) {
    return {{"lambda", c.lambda},
            {"a", c.a},
            {"b", c.b},
            {"alpha", c.alpha},
            {"k_w", c.k_w},
            {"c_lambda_hat", c.c_lambda_hat},
            {"sigma_minus", c.sigma_minus},
            {"sigma_minus_sq", c.sigma_minus_sq},
            {"quadratic_root_check", c.quadratic_root_check}};
}

nlohmann::json to_json(const CovarianceDecay& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (const CovarianceRow& r : c.rows)
        rows.push_back({{"n", r.n},
                        {"cov", r.cov},
                        {"se", r.se},
                        {"partial_sum", r.partial_sum},
                        {"partial_sum_se", r.partial_sum_se}});
    return {{"method", c.method},
            {"block_length", c.block_length},
            {"direction", c.direction},
            {"n_blocks", c.n_blocks},
            {"n_samples", c.n_samples},
            {"mean_y", c.mean_y},
            {"exponent", number(c.exponent)},
            {"fit_points", c.fit_points},
            {"fit_window", {c.fit_lo, c.fit_hi}},
            {"noise_floor_n", c.noise_floor_n},
            {"truncated", c.truncated},
            {"rows", rows}};
}

nlohmann::json to_json(const DobrushinReport& r) {
    return {{"block_length", r.block_length},
            {"sigma_sq", r.sigma_sq},
            {"alpha", r.alpha},
            {"k_w", r.k_w},
            {"lambda", r.lambda},
            {"geometric_constant", r.geometric_constant},
            {"zeta_sum", r.zeta_sum},
            {"row_bound_per_lambda", r.row_bound_per_lambda},
            {"row_bound", r.row_bound},
            {"lambda_star", number(r.lambda_star)},
            {"status", r.status}};
}

nlohmann::json to_json(const SigmaSqEstimate& s) {
    return {{"block_length", s.block_length},
            {"unconditioned", s.unconditioned},
            {"unconditioned_se", s.unconditioned_se},
            {"extreme_probe", s.extreme_probe},
            {"extreme_probe_se", s.extreme_probe_se},
            {"conservative", s.conservative},
            {"n_samples", s.n_samples}};
}

nlohmann::json to_json(const CltReport& r) {
    nlohmann::json scales = nlohmann::json::array();
    for (const CltScale& s : r.scales) {
        nlohmann::json ks = nlohmann::json::array();
        for (const KsDirection& k : s.ks)
            ks.push_back({{"direction", k.direction},
                          {"distance", k.distance},
                          {"p_value", k.p_value},
                          {"distance_se", k.distance_se}});
        scales.push_back({{"epsilon", s.epsilon},
                          {"n_batches", s.n_batches},
                          {"stride", s.stride},
                          {"ks", ks},
                          {"covariance", s.covariance},
                          {"isotropy_distance", s.isotropy_distance},
                          {"max_offdiag_z", s.max_offdiag_z},
                          {"max_diag_z", s.max_diag_z},
                          {"too_few_batches", s.too_few_batches}});
    }
    nlohmann::json series = nlohmann::json::array();
    for (const CovarianceRow& row : r.sigma_sq_series)
        series.push_back({{"n", row.n}, {"partial_sum", row.partial_sum}, {"se", row.partial_sum_se}});
    return {{"scales", scales}, {"sigma_sq_series", series}};
}

nlohmann::json to_json(std::span<const MixingRow> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const MixingRow& r : rows)
        out.push_back({{"n", r.n}, {"rho", r.rho}, {"best_pair", r.best_pair}});
    return out;
}

nlohmann::json to_json(const TwoChainReport& r) {
    nlohmann::json panel = nlohmann::json::array();
    for (const ObservableComparison& c : r.panel)
        panel.push_back({{"name", c.name},
                         {"mean_a", c.mean_a},
                         {"se_a", c.se_a},
                         {"mean_b", c.mean_b},
                         {"se_b", c.se_b},
                         {"z", c.z}});
    return {{"panel", panel},
            {"max_abs_z", r.max_abs_z},
            {"acceptance_a", r.diagnostics_a.acceptance_rate},
            {"acceptance_b", r.diagnostics_b.acceptance_rate},
            {"iact_a", r.diagnostics_a.iact},
            {"iact_b", r.diagnostics_b.iact}};
}

void write_covariance_csv(std::ostream& out, const CovarianceDecay& c) {
    out << "n,cov,se,partial_sum,partial_sum_se\n";
    for (const CovarianceRow& r : c.rows)
        out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.n, r.cov, r.se, r.partial_sum,
                           r.partial_sum_se);
}

void write_mixing_csv(std::ostream& out, std::span<const MixingRow> rows) {
    out << "n,rho,best_pair\n";
    for (const MixingRow& r : rows) out << fmt::format("{},{:.17g},{}\n", r.n, r.rho, r.best_pair);
}

} // namespace pathgibbs
