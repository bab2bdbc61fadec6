#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pathgibbs {

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

/// Integrated autocorrelation time tau = 1 + 2 sum_k rho(k), summed up to
/// the first window M with M >= c tau(M) (Sokal).
struct Iact {
    double tau = 1.0;
    std::size_t window = 0;
    double ess = 0.0; ///< n / tau
};
Iact iact(std::span<const double> series, double c = 5.0);

/// Mean with an iact-inflated standard error.
struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    double tau = 1.0;
    double ess = 0.0;
};
MeanEstimate estimate_mean(std::span<const double> series);

/// Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x);

/// One-sample KS test against N(mu, sd^2). The p-value uses the Kolmogorov
/// limit with the Stephens small-n correction; with mu and sd estimated from
/// the same data it is conservative.
struct KsResult {
    double distance = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};
KsResult ks_normal(std::span<const double> sample, double mu, double sd);

/// Elements taken every `stride` from `first`.
std::vector<double> subsample(std::span<const double> x, std::size_t stride,
                              std::size_t first = 0);

} // namespace pathgibbs
