#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pathgibbs {

/// Kahan-Babuska (Neumaier) compensated accumulator. Order of additions is
/// fixed by the caller, so results are bit-reproducible.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// max |y_i - (intercept + slope x_i)|
    double max_residual = 0.0;
    std::size_t n = 0;
};

/// Ordinary (optionally weighted) least squares y = a + b x.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(std::size_t n);

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` panels of
/// `order` points each.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::size_t panels, std::size_t order = 8);

/// Integral of tau^moment * f(tau) over [start, inf), for a positive
/// envelope f that decays like a power. The range [start, start*1e6] is
/// integrated in log-space; beyond it the local power law is extrapolated.
/// Returns +inf when the extrapolated tail diverges.
double power_tail_integral(const std::function<double(double)>& f, double start,
                           double moment);

/// sum_{m >= 1} (1 + m)^(-s) = zeta(s) - 1 for s > 1, to machine precision
/// (direct summation plus an Euler-Maclaurin remainder).
double shifted_zeta(double s);

} // namespace pathgibbs
