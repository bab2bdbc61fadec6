#include "pathgibbs/numeric.hpp"

#include <limits>
#include <numbers>
#include <stdexcept>

namespace pathgibbs {

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two paired points");
    if (!weights.empty() && weights.size() != x.size())
        throw std::invalid_argument("fit_line: weight count mismatch");

    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sxx += w * (x[i] - mx) * (x[i] - mx);
        sxy += w * (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.n = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i)
        fit.max_residual =
            std::max(fit.max_residual, std::fabs(y[i] - fit.intercept - fit.slope * x[i]));
    return fit;
}

GaussRule gauss_legendre(std::size_t n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / static_cast<double>(j);
            }
            dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return rule;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 std::size_t panels, std::size_t order) {
    const GaussRule rule = gauss_legendre(order);
    const double h = (b - a) / static_cast<double>(panels);
    CompensatedSum total;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        const double mid = lo + 0.5 * h;
        for (std::size_t q = 0; q < order; ++q)
            total += 0.5 * h * rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
    }
    return total.value();
}

double power_tail_integral(const std::function<double(double)>& f, double start,
                           double moment) {
    if (!(start > 0.0)) throw std::invalid_argument("power_tail_integral: start must be > 0");
    constexpr double span = 1e6;
    const double u0 = std::log(start);
    const double u1 = u0 + std::log(span);
    const double body = integrate(
        [&](double u) {
            const double tau = std::exp(u);
            return std::pow(tau, moment + 1.0) * f(tau);
        },
        u0, u1, 120, 8);

    const double tau_end = start * span;
    const double f_end = f(tau_end);
    if (f_end == 0.0) return body;
    const double f_prev = f(tau_end / 1.1);
    const double slope = std::log(f_end / f_prev) / std::log(1.1);
    const double exponent = moment + 1.0 + slope;
    if (!(exponent < -1e-3)) return std::numeric_limits<double>::infinity();
    return body + f_end * std::pow(tau_end, moment + 1.0) / (-exponent);
}

double shifted_zeta(double s) {
    if (!(s > 1.0)) throw std::invalid_argument("shifted_zeta: requires s > 1");
    constexpr int cutoff = 1000;
    CompensatedSum sum;
    // Smallest terms first.
    for (int m = cutoff - 1; m >= 2; --m) sum += std::pow(static_cast<double>(m), -s);
    const double n = cutoff;
    const double tail = std::pow(n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(n, -s) +
                        s / 12.0 * std::pow(n, -s - 1.0) -
                        s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(n, -s - 3.0) +
                        s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 *
                            std::pow(n, -s - 5.0);
    return sum.value() + tail;
}

} // namespace pathgibbs
