#include "pathgibbs/stats.hpp"

#include <algorithm>
#include <cmath>

#include "pathgibbs/error.hpp"
#include "pathgibbs/numeric.hpp"

namespace pathgibbs {

double mean(std::span<const double> x) {
    if (x.empty()) throw ArgumentError("mean: empty sample");
    CompensatedSum s;
    for (double v : x) s += v;
    return s.value() / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) throw ArgumentError("variance: need at least two values");
    const double m = mean(x);
    CompensatedSum s;
    for (double v : x) s += (v - m) * (v - m);
    return s.value() / static_cast<double>(x.size() - 1);
}

Iact iact(std::span<const double> series, double c) {
    const std::size_t n = series.size();
    Iact out;
    out.ess = static_cast<double>(n);
    if (n < 4) return out;
    const double m = mean(series);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = series[i] - m;
    double c0 = 0.0;
    for (double v : y) c0 += v * v;
    if (c0 == 0.0) return out;

    double tau = 1.0;
    std::size_t window = 0;
    for (std::size_t k = 1; k < n / 2; ++k) {
        double ck = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) ck += y[i] * y[i + k];
        tau += 2.0 * ck / c0;
        window = k;
        if (static_cast<double>(k) >= c * tau) break;
    }
    out.tau = std::max(tau, 1.0);
    out.window = window;
    out.ess = static_cast<double>(n) / out.tau;
    return out;
}

MeanEstimate estimate_mean(std::span<const double> series) {
    MeanEstimate out;
    out.mean = mean(series);
    if (series.size() < 2) return out;
    const Iact a = iact(series);
    out.tau = a.tau;
    out.ess = a.ess;
    out.standard_error = std::sqrt(variance(series) * a.tau / static_cast<double>(series.size()));
    return out;
}

double kolmogorov_tail(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_normal(std::span<const double> sample, double mu, double sd) {
    if (sample.empty()) throw ArgumentError("ks_normal: empty sample");
    if (!(sd > 0.0)) throw ArgumentError("ks_normal: sd must be > 0");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = 0.5 * std::erfc(-(x[i] - mu) / (sd * std::sqrt(2.0)));
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double rn = std::sqrt(n);
    return {d, kolmogorov_tail((rn + 0.12 + 0.11 / rn) * d), x.size()};
}

std::vector<double> subsample(std::span<const double> x, std::size_t stride, std::size_t first) {
    std::vector<double> out;
    for (std::size_t i = first; i < x.size(); i += std::max<std::size_t>(stride, 1))
        out.push_back(x[i]);
    return out;
}

} // namespace pathgibbs
