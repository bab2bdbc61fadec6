#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "json.hpp"

#include "pathgibbs/path.hpp"
#include "pathgibbs/potential.hpp"

namespace pathgibbs {

enum class Verdict { holds, fails, inconclusive };
std::string to_string(Verdict verdict);

/// Numbers behind a verdict.
struct Evidence {
    double fit_residual = 0.0;  ///< spread of local log-log slopes, or 0 for direct bounds
    std::size_t sample_size = 0; ///< paths or mesh points used
    std::string method;          ///< "analytic-envelope", "sampled-sup", ...
};

/// sup_x |U_I| <= C |I|^2 and sup_x int |W(x_0t, |t|)| dt < inf
struct H1Result {
    Verdict verdict = Verdict::inconclusive;
    double c_quadratic = 0.0;
    double line_integral = 0.0;
    Evidence evidence;
};

/// sup_a sup_x Q(x, xi, a) <= C (1 + |xi|)
struct H2Result {
    Verdict verdict = Verdict::inconclusive;
    double c_linear = 0.0;
    double growth_exponent = 0.0; ///< log-log slope of max Q against 1 + |xi|
    Evidence evidence;
};

/// int_{t>0>s} |W(x_st, t-s) - W(0, t-s)| <= C uniformly in x
struct H3Result {
    Verdict verdict = Verdict::inconclusive;
    double c_abs = 0.0;
    double shift_decay = 0.0; ///< fitted decay exponent of sup_xi |W(xi,t) - W(0,t)|
    Evidence evidence;
};

/// sup_xi |W(xi, t)| <= C (1+|t|)^-gamma with gamma > 2
struct H3bResult {
    Verdict verdict = Verdict::inconclusive;
    double gamma_fit = 0.0;
    double c_gamma_fit = 0.0;
    Evidence evidence;
};

/// sup_xi ||Hess W(xi, t)|| <= K (1+|t|)^-alpha with alpha > 3
struct H4Result {
    Verdict verdict = Verdict::inconclusive;
    double alpha_fit = 0.0;
    double k_w_fit = 0.0;
    Evidence evidence;
};

struct ConditionReport {
    H1Result h1;
    H2Result h2;
    H3Result h3;
    H3bResult h3b;
    H4Result h4;
};

/// Power-law decay fitted on log-spaced t in [t_lo, t_hi]: f ~ constant * t^-exponent.
struct DecayFit {
    double exponent = 0.0;
    double constant = 0.0;
    double slope_spread = 0.0; ///< max - min of the local log-log slopes
    std::size_t points = 0;
};
DecayFit fit_decay(const std::function<double(double)>& f, double t_lo = 10.0,
                   double t_hi = 1e3, std::size_t points = 25);

/// Evaluates every hypothesis. Sups over paths use the analytic envelope for
/// closed-form kinds and otherwise the max over `paths`, the zero path and
/// ramp paths. A condition holds when its exponent clears the threshold by
/// more than `tol`, and is inconclusive when the local slopes spread by more
/// than `tol`. With no paths the grid T = 8, dt = 0.25, d = 1 is used.
ConditionReport check_conditions(const Potential& pot, std::span<const IncrementPath> paths,
                                 double tol = 0.1);

nlohmann::json to_json(const ConditionReport& report);

} // namespace pathgibbs
