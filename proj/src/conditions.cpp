#include "pathgibbs/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "pathgibbs/energy.hpp"
#include "pathgibbs/numeric.hpp"

namespace pathgibbs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Verdict for "exponent > threshold" with a fit whose local slopes spread.
Verdict exponent_verdict(const DecayFit& fit, double threshold, double tol) {
    if (!std::isfinite(fit.exponent) || fit.slope_spread > tol) return Verdict::inconclusive;
    return fit.exponent > threshold + tol ? Verdict::holds : Verdict::fails;
}

/// max over t in {0} u [1e-2, 1e3] of f(t) (1+t)^exponent
double envelope_constant(const std::function<double(double)>& f, double exponent) {
    double best = f(0.0);
    for (int i = 0; i <= 100; ++i) {
        const double t = std::pow(10.0, -2.0 + 5.0 * i / 100.0);
        best = std::max(best, f(t) * std::pow(1.0 + t, exponent));
    }
    return best;
}

/// int_0^inf tau^moment f(tau) dtau for a decaying envelope.
double half_line_integral(const std::function<double(double)>& f, double moment) {
    const double head = integrate([&](double t) { return std::pow(t, moment) * f(t); }, 0.0, 1.0, 16);
    return head + power_tail_integral(f, 1.0, moment);
}

std::vector<IncrementPath> probe_paths(std::span<const IncrementPath> paths) {
    std::vector<IncrementPath> out;
    const Grid grid = paths.empty() ? Grid(8.0, 0.25) : paths.front().grid();
    const std::size_t dim = paths.empty() ? 1 : paths.front().dim();
    out.emplace_back(grid, dim);
    for (double slope : {-4.0, -1.0, 1.0, 4.0}) {
        std::vector<double> v(dim, 0.0);
        v[0] = slope;
        out.push_back(ramp_path(grid, v));
    }
    for (const IncrementPath& p : paths)
        if (p.grid() == grid && p.dim() == dim) out.push_back(p);
    return out;
}

H1Result check_h1(const Potential& pot, std::span<const IncrementPath> probes) {
    H1Result r;
    const Grid& grid = probes.front().grid();
    const EnergyContext ctx(pot, grid);
    double ratio = 0.0;
    for (double len : {1.0, 2.0, 4.0, 8.0}) {
        if (len > grid.length() || !grid.is_node(-grid.horizon() + len)) continue;
        const Interval interval{-grid.horizon(), -grid.horizon() + len};
        for (const IncrementPath& p : probes)
            ratio = std::max(ratio, std::fabs(interior_energy(ctx, p, interval).value) / (len * len));
    }
    // The sup over all paths is bounded by sup |W|, which is attained at a
    // collapsed path; take the larger of it and the sampled ratio.
    r.c_quadratic = std::max(ratio, pot.sup_abs(0.0));
    r.line_integral = 2.0 * half_line_integral([&](double t) { return pot.sup_abs(t); }, 0.0);
    r.evidence.sample_size = probes.size();
    r.evidence.method = pot.is_analytic() ? "analytic-envelope" : "sampled-sup";
    r.verdict = std::isfinite(r.c_quadratic) && std::isfinite(r.line_integral) ? Verdict::holds
                                                                              : Verdict::fails;
    return r;
}

H2Result check_h2(const Potential& pot, std::span<const IncrementPath> probes, double tol) {
    H2Result r;
    const Grid& grid = probes.front().grid();
    r.evidence.sample_size = probes.size();
    r.evidence.method = pot.is_analytic() ? "analytic-envelope" : "sampled-sup";
    if (!grid.is_node(0.0)) {
        r.evidence.method += "; 0 is not a grid node";
        return r;
    }
    const EnergyContext ctx(pot, grid, QuadRule::midpoint, std::nullopt, TailBoundMode::off);
    const std::size_t dim = probes.front().dim();
    const double radius = std::floor(grid.horizon() / grid.dt() + 1e-9) * grid.dt();

    std::map<double, double> tail_factor;
    std::vector<double> x, y;
    r.c_linear = 0.0;
    for (int m = 0; m <= 16; ++m) {
        std::vector<double> xi(dim, 0.0);
        xi[0] = m;
        double worst = 0.0;
        for (double a : {0.0, 1.0, 10.0}) {
            auto it = tail_factor.find(a);
            if (it == tail_factor.end())
                it = tail_factor.emplace(a, quadrant_tail_factor(pot, a, radius)).first;
            for (const IncrementPath& p : probes) {
                const EnergyValue q = relative_energy_kernel(ctx, p, xi, a);
                worst = std::max(worst, q.value + q.quad_error + m * it->second);
            }
        }
        r.c_linear = std::max(r.c_linear, worst / (1.0 + m));
        if (m >= 2) {
            x.push_back(std::log(1.0 + m));
            y.push_back(std::log(worst));
        }
    }
    const LineFit fit = fit_line(x, y);
    r.growth_exponent = fit.slope;
    r.evidence.fit_residual = fit.max_residual;
    if (!std::isfinite(r.c_linear))
        r.verdict = Verdict::inconclusive;
    else
        r.verdict = r.growth_exponent <= 1.0 + tol ? Verdict::holds : Verdict::fails;
    return r;
}

H3Result check_h3(const Potential& pot, double tol) {
    H3Result r;
    auto env = [&](double t) { return pot.sup_shift_difference(t); };
    const DecayFit fit = fit_decay(env);
    r.shift_decay = fit.exponent;
    r.c_abs = half_line_integral(env, 1.0);
    r.evidence = {fit.slope_spread, fit.points,
                  pot.is_analytic() ? "analytic-envelope" : "sampled-sup"};
    r.verdict = exponent_verdict(fit, 2.0, tol);
    if (r.verdict == Verdict::holds && !std::isfinite(r.c_abs)) r.verdict = Verdict::inconclusive;
    return r;
}

H3bResult check_h3b(const Potential& pot, double tol) {
    H3bResult r;
    auto env = [&](double t) { return pot.sup_abs(t); };
    const DecayFit fit = fit_decay(env);
    r.gamma_fit = fit.exponent;
    r.c_gamma_fit = envelope_constant(env, fit.exponent);
    r.evidence = {fit.slope_spread, fit.points,
                  pot.is_analytic() ? "analytic-envelope" : "sampled-sup"};
    r.verdict = exponent_verdict(fit, 2.0, tol);
    return r;
}

H4Result check_h4(const Potential& pot, double tol) {
    H4Result r;
    auto env = [&](double t) { return pot.sup_hessian(t); };
    const DecayFit fit = fit_decay(env);
    r.alpha_fit = fit.exponent;
    const auto& declared = pot.declared_decay();
    r.k_w_fit = envelope_constant(env, declared ? declared->alpha : fit.exponent);
    r.evidence = {fit.slope_spread, fit.points,
                  pot.is_analytic() ? "analytic-envelope" : "sampled-sup"};
    r.verdict = exponent_verdict(fit, 3.0, tol);
    return r;
}

nlohmann::json evidence_json(const Evidence& e) {
    return {{"fit_residual", e.fit_residual}, {"sample_size", e.sample_size}, {"method", e.method}};
}

/// JSON has no infinity; unbounded constants serialize as null.
nlohmann::json number(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace

std::string to_string(Verdict verdict) {
    switch (verdict) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

DecayFit fit_decay(const std::function<double(double)>& f, double t_lo, double t_hi,
                   std::size_t points) {
    std::vector<double> x(points), y(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (points - 1));
        x[i] = std::log(t);
        y[i] = std::log(f(t));
    }
    DecayFit out;
    out.points = points;
    const LineFit fit = fit_line(x, y);
    out.exponent = -fit.slope;
    out.constant = std::exp(fit.intercept);
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 1; i < points; ++i) {
        const double s = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    out.slope_spread = hi - lo;
    return out;
}

ConditionReport check_conditions(const Potential& pot, std::span<const IncrementPath> paths,
                                 double tol) {
    const std::vector<IncrementPath> probes = probe_paths(paths);
    ConditionReport report;
    report.h1 = check_h1(pot, probes);
    report.h2 = check_h2(pot, probes, tol);
    report.h3 = check_h3(pot, tol);
    report.h3b = check_h3b(pot, tol);
    report.h4 = check_h4(pot, tol);
    return report;
}

nlohmann::json to_json(const ConditionReport& r) {
    return {
        {"h1",
         {{"holds", to_string(r.h1.verdict)},
          {"c_quadratic", number(r.h1.c_quadratic)},
          {"line_integral", number(r.h1.line_integral)},
          {"evidence", evidence_json(r.h1.evidence)}}},
        {"h2",
         {{"holds", to_string(r.h2.verdict)},
          {"c_linear", number(r.h2.c_linear)},
          {"growth_exponent", number(r.h2.growth_exponent)},
          {"evidence", evidence_json(r.h2.evidence)}}},
        {"h3",
         {{"holds", to_string(r.h3.verdict)},
          {"c_abs", number(r.h3.c_abs)},
          {"shift_decay", number(r.h3.shift_decay)},
          {"evidence", evidence_json(r.h3.evidence)}}},
        {"h3b",
         {{"holds", to_string(r.h3b.verdict)},
          {"gamma_fit", number(r.h3b.gamma_fit)},
          {"c_gamma_fit", number(r.h3b.c_gamma_fit)},
          {"evidence", evidence_json(r.h3b.evidence)}}},
        {"h4",
         {{"holds", to_string(r.h4.verdict)},
          {"alpha_fit", number(r.h4.alpha_fit)},
          {"k_w_fit", number(r.h4.k_w_fit)},
          {"evidence", evidence_json(r.h4.evidence)}}},
    };
}

} // namespace pathgibbs
