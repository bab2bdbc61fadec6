// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "pathgibbs/conditions.hpp"
#include "pathgibbs/energy.hpp"
#include "pathgibbs/estimators.hpp"
#include "pathgibbs/runner.hpp"
#include "pathgibbs/sampler.hpp"
#include "pathgibbs/stats.hpp"

using namespace pathgibbs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Pinned tolerances.
constexpr double kReferenceZ = 5.0;        // 1: variance and correlation, in SE
constexpr double kEnergyAbs = 1e-4;        // 2: closed-form value at dt = 1/64
constexpr double kEnergyOrder = 0.9;       // 2: observed convergence order
constexpr double kDeltaRel = 1e-8;         // 3: chained delta vs full difference
constexpr double kExponentTol = 0.1;       // 4: alpha and gamma fits
constexpr double kCertificateZ = 3.0;      // 5: MC diffusion >= sigma_-^2 - 3 SE
constexpr double kFreeDiffusionZ = 5.0;    // 5: measured value 1 at lambda = 0
constexpr double kPanelZ = 4.0;            // 6: two-chain panel agreement
constexpr double kDecaySlack = 0.3;        // 7: exponent <= -(gamma - 2) + 0.3
constexpr double kKsLevel = 0.01;          // 8: normality at lambda = 0
constexpr double kKsTrendZ = 2.0;          // 8: KS distance trend, in SE
constexpr double kIsotropyZ = 4.0;         // 8: covariance isotropy, in SE

SamplerConfig chain(double lambda, std::size_t sweeps, std::size_t thin, std::uint64_t seed) {
    SamplerConfig c;
    c.lambda = lambda;
    c.n_sweeps = sweeps;
    c.thin = thin;
    c.seed = seed;
    c.burn_in = sweeps / 10;
    c.audit_every = 1000;
    return c;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Conservative sigma^2 and the resulting lambda* for nelson on unit blocks.
DobrushinReport nelson_threshold(std::size_t dim, double horizon, double dt) {
    const EnergyContext ctx(Potential::nelson(), Grid(horizon, dt));
    const SigmaSqEstimate s = sigma_sq_estimate(ctx, chain(0.0, 4000, 2, 0x5157), 1.0, dim, 4.0);
    const DecayData decay = *Potential::nelson().declared_decay();
    return dobrushin_bound(decay, 0.0, 1.0, s.conservative);
}

// 1. Wiener reference reproduced by the sampler at lambda = 0.
Outcome reference_exactness() {
    const std::size_t dim = 3;
    const EnergyContext ctx(Potential::nelson(), Grid(8.0, 0.25));
    const ChainResult r = run_chain(ctx, chain(0.0, 20000, 5, 101), dim);
    const Interval intervals[] = {{0.0, 0.25}, {-1.0, 1.0}, {-4.0, -2.5}, {1.0, 4.0}, {-3.0, 3.0}};
    double worst = 0.0;
    for (const Interval& iv : intervals)
        for (std::size_t c = 0; c < dim; ++c) {
            std::vector<double> sq;
            for (const auto& p : r.samples) {
                const double x = p.increment(iv.lo, iv.hi)[c];
                sq.push_back(x * x);
            }
            const MeanEstimate m = estimate_mean(sq);
            worst = std::max(worst, std::fabs(m.mean - iv.length()) / m.standard_error);
        }
    // Disjoint increments, same and different components.
    double worst_corr = 0.0;
    const std::pair<Interval, Interval> pairs[] = {{{-1, 0}, {0, 1}}, {{-4, -2}, {2, 4}}, {{-1, 0}, {1, 3}}};
    for (const auto& [u, v] : pairs)
        for (std::size_t c = 0; c < dim; ++c)
            for (std::size_t e = 0; e < dim; ++e) {
                std::vector<double> prod;
                for (const auto& p : r.samples)
                    prod.push_back(p.increment(u.lo, u.hi)[c] * p.increment(v.lo, v.hi)[e] /
                                   std::sqrt(u.length() * v.length()));
                const MeanEstimate m = estimate_mean(prod);
                worst_corr = std::max(worst_corr, std::fabs(m.mean) / m.standard_error);
            }
    return {worst <= kReferenceZ && worst_corr <= kReferenceZ,
            fmt::format("max |Var - |b-a||/SE = {:.2f}, max |corr|/SE = {:.2f} (limit {}), "
                        "{} samples, d = 3",
                        worst, worst_corr, kReferenceZ, r.samples.size())};
}

// 2. Closed-form interior energy of the zero path.
Outcome closed_form_energy() {
    const double exact = -(M_PI / 2.0 - std::log(2.0));
    std::vector<double> dts, errs;
    for (double dt : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        const EnergyContext ctx(Potential::nelson(), Grid(2.0, dt));
        const double u = interior_energy(ctx, IncrementPath(ctx.grid(), 1), {0.0, 1.0}).value;
        dts.push_back(dt);
        errs.push_back(std::fabs(u - exact));
    }
    const double order = loglog_slope(dts, errs);
    return {errs.back() <= kEnergyAbs && order >= kEnergyOrder,
            fmt::format("error {:.2e} at dt = 1/64 (limit {:.0e}), order {:.2f} (min {})",
                        errs.back(), kEnergyAbs, order, kEnergyOrder)};
}

// 3. Chained incremental updates against the full energy difference.
Outcome incremental_energy() {
    const EnergyContext ctx(Potential::nelson(), Grid(8.0, 0.25)); // 64 steps
    IncrementPath x = sample_wiener(ctx.grid(), 1, 303);
    const double start = window_energy(ctx, x).value;
    Rng rng(304);
    double chained = 0.0;
    for (int move = 0; move < 10000; ++move) {
        const CellRange b = random_block({0, x.n_steps()}, 1 + move % 8, rng);
        const std::vector<double> old(x.steps(b).begin(), x.steps(b).end());
        std::vector<double> fresh(old.size());
        for (std::size_t k = 0; k < fresh.size(); ++k) fresh[k] = 0.8 * old[k] + 0.3 * rng.normal();
        chained += delta_energy(ctx, x, b, old, fresh).value;
        x.set_steps(b.first, fresh);
    }
    const double full = window_energy(ctx, x).value - start;
    const double rel = std::fabs(chained - full) / std::max(std::fabs(full), std::fabs(start));
    return {rel <= kDeltaRel,
            fmt::format("relative mismatch {:.2e} over 10^4 moves (limit {:.0e})", rel, kDeltaRel)};
}

// 4. Hypothesis checkers on the two reference potentials.
Outcome condition_checkers() {
    const ConditionReport n = check_conditions(Potential::nelson(), {}, 0.1);
    const ConditionReport p = check_conditions(Potential::power_law(-1.0, 2.0), {}, 0.1);
    const bool ok = std::fabs(n.h4.alpha_fit - 4.0) <= kExponentTol &&
                    std::fabs(n.h3b.gamma_fit - 2.0) <= kExponentTol &&
                    n.h3b.verdict == Verdict::fails && p.h3.verdict == Verdict::holds;
    return {ok, fmt::format("nelson alpha {:.3f}, gamma {:.3f} (h3b {}); powerlaw p=2 h3 {}",
                            n.h4.alpha_fit, n.h3b.gamma_fit, to_string(n.h3b.verdict),
                            to_string(p.h3.verdict))};
}

// 5. Certificate soundness for nelson on [-2, 2].
Outcome certificate_soundness() {
    const EnergyContext ctx(Potential::nelson(), Grid(8.0, 0.25));
    const DecayData decay = *Potential::nelson().declared_decay();
    bool ok = true;
    std::string detail;
    for (double lambda : {0.0, 0.05, 0.2}) {
        const ChainResult r = run_chain(ctx, chain(lambda, 20000, 5, 505), 1);
        const DiffusionEstimate d = diffusion(r.samples, -2.0, 2.0);
        const LowerBoundCertificate c = lower_bound_certificate(decay, lambda, -2.0, 2.0);
        bool here = d.normalized >= c.sigma_minus_sq - kCertificateZ * d.normalized_se;
        if (lambda == 0.0)
            here = here && c.sigma_minus_sq == 0.5 &&
                   std::fabs(d.normalized - 1.0) <= kFreeDiffusionZ * d.normalized_se;
        ok = ok && here;
        detail += fmt::format("lambda {}: D = {:.4f} +- {:.4f} vs sigma_-^2 = {:.4f}; ", lambda,
                              d.normalized, d.normalized_se, c.sigma_minus_sq);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

// 6. Dobrushin threshold and two-chain agreement at half of it.
Outcome dobrushin_threshold() {
    const std::size_t dim = 3;
    const DobrushinReport t = nelson_threshold(dim, 8.0, 0.25);
    if (!(t.lambda_star > 0.0) || !std::isfinite(t.lambda_star))
        return {false, fmt::format("lambda* = {}", t.lambda_star)};
    const EnergyContext ctx(Potential::nelson(), Grid(8.0, 0.25));
    const IncrementPath zero(ctx.grid(), dim);
    const std::vector<double> slope{1.0, 0.0, 0.0};
    const TwoChainReport r = two_chain_agreement(ctx, chain(t.lambda_star / 2, 20000, 5, 606), zero,
                                                 ramp_path(ctx.grid(), slope));
    return {r.max_abs_z <= kPanelZ,
            fmt::format("lambda* = {:.4f} (sigma^2 = {:.3f}); at lambda*/2 max |z| = {:.2f} over "
                        "{} observables (limit {})",
                        t.lambda_star, t.sigma_sq, r.max_abs_z, r.panel.size(), kPanelZ)};
}

// 7. Covariance decay for powerlaw gamma = 4 at small lambda.
Outcome covariance_decay_exponent() {
    const double gamma = 4.0, lambda = 0.05;
    const EnergyContext ctx(Potential::power_law(-1.0, 2.0), Grid(16.0, 0.25));
    const ChainResult r = run_chain(ctx, chain(lambda, 16000, 5, 707), 1);
    const std::vector<double> v{1.0};
    CovarianceOptions o;
    o.fit_lo = 2;
    o.fit_hi = 12;
    const CovarianceDecay c = covariance_decay_score(ctx, lambda, r.samples, 1.0, v, 12, o);
    const double limit = -(gamma - 2.0) + kDecaySlack;
    const bool ok = c.fit_points >= 3 && c.exponent <= limit;
    return {ok, fmt::format("score estimator: exponent {:.3f} over {} lags in [2, 12] "
                            "(limit {:.1f}), {} samples",
                            c.exponent, c.fit_points, limit, c.n_samples)};
}

// 8. CLT: normality at lambda = 0, KS trend and isotropy for nelson at lambda*/2.
Outcome clt() {
    const std::size_t dim = 3;
    const std::vector<double> eps{0.25, 0.0625};
    const std::vector<std::vector<double>> dirs{
        {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1 / std::sqrt(3.0), 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)}};
    const EnergyContext ctx(Potential::nelson(), Grid(16.0, 0.25));

    const ChainResult free = run_chain(ctx, chain(0.0, 6000, 2, 808), dim);
    const CltReport f = clt_test(free.samples, eps, dirs);
    double min_p = 1.0;
    for (const CltScale& s : f.scales)
        for (const KsDirection& k : s.ks) min_p = std::min(min_p, k.p_value);

    const DobrushinReport t = nelson_threshold(dim, 8.0, 0.25);
    const ChainResult coupled = run_chain(ctx, chain(t.lambda_star / 2, 6000, 2, 809), dim);
    const CltReport c = clt_test(coupled.samples, eps, dirs);
    double trend = -1e300, iso = 0.0;
    std::size_t batches = 1u << 30;
    for (std::size_t k = 0; k < dirs.size(); ++k) {
        const KsDirection& coarse = c.scales[0].ks[k];
        const KsDirection& fine = c.scales[1].ks[k];
        const double se = std::hypot(coarse.distance_se, fine.distance_se);
        trend = std::max(trend, (fine.distance - coarse.distance) / se);
    }
    for (const CltScale& s : c.scales) {
        iso = std::max({iso, s.max_offdiag_z, s.max_diag_z});
        batches = std::min(batches, s.n_batches);
    }
    const bool ok = min_p >= kKsLevel && trend <= kKsTrendZ && iso <= kIsotropyZ;
    return {ok, fmt::format("lambda 0: min KS p = {:.3f} (min {}); lambda*/2 = {:.4f}: max KS "
                            "increase {:.2f} SE (limit {}), isotropy max z {:.2f} (limit {}), "
                            ">= {} batches",
                            min_p, kKsLevel, t.lambda_star / 2, trend, kKsTrendZ, iso, kIsotropyZ,
                            batches)};
}

// 9. Byte-identical reruns and interrupt safety through the runner.
Outcome determinism_and_persistence() {
    const char* text = "[potential]\nkind = nelson\n[grid]\nT = 4\ndt = 0.25\n[sampler]\n"
                       "lambda = 0, 0.1\nseeds = 1, 2\nsweeps = 400\nthin = 40\n";
    const ExperimentSpec spec = parse_spec(text);
    const fs::path root = fs::temp_directory_path() / "pathgibbs_acceptance";
    fs::remove_all(root);
    std::ostringstream log;
    auto files = [](const fs::path& dir) {
        std::map<std::string, std::string> out;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".csv") {
                std::ifstream in(e.path(), std::ios::binary);
                std::stringstream s;
                s << in.rdbuf();
                out[fs::relative(e.path(), dir).string()] = s.str();
            }
        return out;
    };
    RunOptions a, b;
    a.out = root / "a";
    b.out = root / "b";
    cmd_sample(spec, a, log);
    cmd_sample(spec, b, log);
    const auto first = files(a.out);
    const bool identical = !first.empty() && first == files(b.out);

    RunOptions stop = a;
    stop.on_sample = [](const std::string& task, std::size_t n) {
        if (task == "lambda_0.1_seed_1" && n == 3) throw Interrupted("acceptance stop");
    };
    const int code = run_guarded([&] { return cmd_sample(spec, stop, log); }, log);
    auto after = files(a.out);
    std::erase_if(after, [](const auto& kv) { return kv.first.find(".partial") != std::string::npos; });
    const bool intact = code == 130 && after == first &&
                        fs::exists(a.out / "tasks" / "lambda_0.1_seed_1.partial" / "INCOMPLETE");
    fs::remove_all(root);
    return {identical && intact,
            fmt::format("{} CSV files byte-identical: {}; interrupted rerun exit {} left completed "
                        "tasks intact: {}",
                        first.size(), identical ? "yes" : "no", code, intact ? "yes" : "no")};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"reference exactness", reference_exactness},
        {"closed-form energy", closed_form_energy},
        {"incremental energy", incremental_energy},
        {"condition checkers", condition_checkers},
        {"lower-bound certificate", certificate_soundness},
        {"dobrushin threshold", dobrushin_threshold},
        {"covariance decay", covariance_decay_exponent},
        {"central limit theorem", clt},
        {"determinism and persistence", determinism_and_persistence},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << fmt::format("[{}] {} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                                 criteria[i].first, o.detail, s)
                  << std::flush;
        failed += !o.pass;
    }
    std::cout << fmt::format("{} of {} criteria pass\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
