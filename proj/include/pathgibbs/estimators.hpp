#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathgibbs/conditions.hpp"
#include "pathgibbs/energy.hpp"
#include "pathgibbs/path.hpp"
#include "pathgibbs/sampler.hpp"

namespace pathgibbs {

/// Per-component second moment of X_ab over a sample stream.
struct DiffusionEstimate {
    double a = 0.0, b = 0.0;
    double second_moment = 0.0;
    double standard_error = 0.0; ///< iact-inflated
    double normalized = 0.0;     ///< second_moment / |b - a|
    double normalized_se = 0.0;
    std::size_t n_samples = 0;
    double tau = 1.0;
    double ess = 0.0;
    bool unreliable = false; ///< ess < 30
};
DiffusionEstimate diffusion(std::span<const IncrementPath> samples, double a, double b);

/// sigma_-^2 from E|B_ab,ab| <= c_hat lambda |a-b| with c_hat from the
/// Hessian envelope K (1+|t|)^-alpha.
struct LowerBoundCertificate {
    double lambda = 0.0;
    double a = 0.0, b = 0.0;
    double alpha = 0.0;
    double k_w = 0.0;
    double c_lambda_hat = 0.0;
    double sigma_minus = 0.0;
    double sigma_minus_sq = 0.0;
    double quadratic_root_check = 0.0; ///< 2y^2 - 1 + sqrt(c_hat lambda) y at y = sigma_-
};
/// ArgumentError when the decay has alpha <= 3 (the bound diverges).
LowerBoundCertificate lower_bound_certificate(const DecayData& decay, double lambda, double a,
                                              double b);

/// Decay data used downstream: the declared values when present, otherwise
/// the fitted (H4) exponent and constant. ArgumentError unless (H4) holds.
DecayData effective_decay(const Potential& pot, const ConditionReport& report);

struct CovarianceRow {
    std::size_t n = 0;
    double cov = 0.0;
    double se = 0.0;
    double partial_sum = 0.0; ///< C_0 + 2 sum_{k=1..n} C_k
    double partial_sum_se = 0.0;
};

struct CovarianceDecay {
    std::string method;              ///< "direct" or "score"
    double block_length = 0.0;
    std::vector<double> direction;
    std::vector<CovarianceRow> rows; ///< n = 0..n_max
    std::size_t n_blocks = 0;        ///< blocks per sample in the bulk
    std::size_t n_samples = 0;
    double mean_y = 0.0;             ///< sample mean of Y_i (zero by symmetry)
    /// log|Cov| against log n over significant lags in [fit_lo, fit_hi].
    double exponent = 0.0;
    std::size_t fit_points = 0;
    std::size_t fit_lo = 0, fit_hi = 0;
    /// First lag >= 1 whose |Cov| is below 2 standard errors, if any.
    std::size_t noise_floor_n = 0;
    bool truncated = false;
};

struct CovarianceOptions {
    std::size_t fit_lo = 2;
    std::size_t fit_hi = 12;
    double min_z = 2.0; ///< lags with |Cov| < min_z se are left out of the fit
};

/// Cov(Y_0, Y_n), Y_i = <v, X_{Li, L(i+1)}>, averaged over block pairs of
/// the bulk window in every sample. The mean of Y is zero by the x -> -x
/// symmetry of the measure, so products are not re-centred.
CovarianceDecay covariance_decay(std::span<const IncrementPath> samples, double block_length,
                                 std::span<const double> direction, std::size_t n_max,
                                 const CovarianceOptions& options = {});

/// Same quantity for lags n >= 1 from the exact discrete identity
/// Cov(Y_i, Y_j) = E[A_i A_j] - lambda dt^2 E[B_ij], with
/// A_i = lambda dt sum_{k in block i} v . dH/dxi_k and
/// B_ij = sum_{k in i, l in j} v^T d^2H/dxi_k dxi_l v.
/// The fluctuation of A_i A_j is O(lambda^2) against an O(lambda) signal,
/// so at small lambda the tail is resolved far below the direct noise floor.
/// Requires samples of the free measure on the whole window of `ctx`.
CovarianceDecay covariance_decay_score(const EnergyContext& ctx, double lambda,
                                       std::span<const IncrementPath> samples,
                                       double block_length, std::span<const double> direction,
                                       std::size_t n_max, const CovarianceOptions& options = {});

/// sum_i C_ij <= lambda * geometric * K * sigma^2 * sum_{m>=1} 2 (1+m)^(2-alpha).
struct DobrushinReport {
    double block_length = 0.0;
    double sigma_sq = 0.0;
    double alpha = 0.0;
    double k_w = 0.0;
    double lambda = 0.0;
    double geometric_constant = 0.0; ///< 2 / ((alpha-1)(alpha-2))
    double zeta_sum = 0.0;           ///< sum_{m>=1} (1+m)^(2-alpha)
    double row_bound_per_lambda = 0.0;
    double row_bound = 0.0;
    double lambda_star = 0.0;        ///< 1 / row_bound_per_lambda
    std::string status;              ///< "unconditional at lambda=0", "unique", "undecided"
};
/// ArgumentError when alpha <= 3.
DobrushinReport dobrushin_bound(const DecayData& decay, double lambda, double block_length,
                                double sigma_sq);

/// sigma^2 = sup_i E ||x_i||^2 with ||x_i|| = sup_{s,t in tau_i} |x_st|.
struct SigmaSqEstimate {
    double block_length = 0.0;
    double unconditioned = 0.0;   ///< max over bulk blocks, free measure
    double unconditioned_se = 0.0;
    double extreme_probe = 0.0;   ///< block tau_0 with a frozen steep-ramp exterior
    double extreme_probe_se = 0.0;
    double conservative = 0.0;    ///< the larger of the two
    std::size_t n_samples = 0;
};
/// Squared block norm of the block [lo, lo + L].
double block_norm_sq(const IncrementPath& path, double lo, double block_length);
SigmaSqEstimate sigma_sq_estimate(const EnergyContext& ctx, const SamplerConfig& config,
                                  double block_length, std::size_t dim,
                                  double probe_slope = 4.0);

struct KsDirection {
    std::vector<double> direction;
    double distance = 0.0;
    double p_value = 1.0;
    double distance_se = 0.0; ///< 0.26 / sqrt(n)
    std::vector<double> values; ///< projected batch values (for QQ plots, not serialized)
};

struct CltScale {
    double epsilon = 0.0;
    std::size_t n_batches = 0;
    std::size_t stride = 1; ///< samples between batches (>= 5 iact)
    std::vector<KsDirection> ks;
    std::vector<std::vector<double>> covariance;
    double isotropy_distance = 0.0; ///< ||S - tr(S)/d I||_op
    double max_offdiag_z = 0.0;
    double max_diag_z = 0.0;        ///< largest standardized S_ii - S_jj
    bool too_few_batches = false;   ///< fewer than 30
};

struct CltReport {
    std::vector<CltScale> scales;
    std::vector<CovarianceRow> sigma_sq_series; ///< unit blocks along e_1
};

/// X^eps = eps^(1/2) X_{-1/(2 eps), 1/(2 eps)}, centred in the bulk.
CltReport clt_test(std::span<const IncrementPath> samples, std::span<const double> epsilons,
                   std::span<const std::vector<double>> directions);

struct MixingRow {
    std::size_t n = 0;
    double rho = 0.0;
    std::string best_pair;
};
/// Max |corr(f(x_i), g(x_{i+n}))| over the dictionary {linear, squared,
/// sup-norm, clipped indicator}; a lower bound on rho(n).
std::vector<MixingRow> mixing_proxy(std::span<const IncrementPath> samples, double block_length,
                                    std::size_t n_max);

nlohmann::json to_json(const DiffusionEstimate& e);
nlohmann::json to_json(const LowerBoundCertificate& c);
nlohmann::json to_json(const CovarianceDecay& c);
nlohmann::json to_json(const DobrushinReport& r);
nlohmann::json to_json(const SigmaSqEstimate& s);
nlohmann::json to_json(const CltReport& r);
nlohmann::json to_json(std::span<const MixingRow> rows);
nlohmann::json to_json(const TwoChainReport& r);

void write_covariance_csv(std::ostream& out, const CovarianceDecay& c);
void write_mixing_csv(std::ostream& out, std::span<const MixingRow> rows);

} // namespace pathgibbs
