#include "pathgibbs/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "pathgibbs/error.hpp"
#include "pathgibbs/numeric.hpp"

namespace pathgibbs {

std::string to_string(PotentialKind kind) {
    switch (kind) {
    case PotentialKind::nelson: return "nelson";
    case PotentialKind::power_law: return "powerlaw";
    case PotentialKind::spectral: return "spectral";
    case PotentialKind::table: return "custom-table";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Spectral kernel

double SpectralData::omega(double k_norm) const {
    switch (dispersion) {
    case Dispersion::constant: return mass;
    case Dispersion::linear: return std::fabs(k_norm);
    case Dispersion::massive: return std::sqrt(k_norm * k_norm + mass * mass);
    }
    return mass;
}

double SpectralData::rho(double k) const {
    switch (form) {
    case FormFactor::indicator: return std::fabs(k) <= width ? 1.0 : 0.0;
    case FormFactor::gaussian: return std::exp(-k * k / (2.0 * width * width));
    case FormFactor::shifted_gaussian:
        return std::exp(-(k - shift) * (k - shift) / (2.0 * width * width));
    }
    return 0.0;
}

namespace {

SpectralValue spectral_once(const SpectralData& data, std::span<const double> xi, double t,
                            std::size_t panels) {
    const double abs_t = std::fabs(t);
    double r2 = 0.0;
    for (double v : xi) r2 += v * v;
    const double r = std::sqrt(r2);
    const double k_max = data.form == SpectralData::FormFactor::indicator
                             ? std::min(data.cutoff, data.width)
                             : data.cutoff;
    auto weight = [&](double k) {
        const double rho = data.rho(k);
        const double w = data.omega(k);
        return rho * rho / (2.0 * w) * std::exp(-w * abs_t);
    };

    SpectralValue out;
    switch (xi.size()) {
    case 1: {
        const double x = xi[0];
        out.real = integrate([&](double k) { return weight(k) * std::cos(k * x); }, -k_max, k_max,
                             2 * panels);
        out.imag = -integrate([&](double k) { return weight(k) * std::sin(k * x); }, -k_max,
                              k_max, 2 * panels);
        break;
    }
    case 2:
        out.real = 2.0 * std::numbers::pi *
                   integrate([&](double k) {
                       return k * weight(k) * std::cyl_bessel_j(0.0, k * r);
                   }, 0.0, k_max, panels);
        break;
    case 3:
        out.real = 4.0 * std::numbers::pi *
                   integrate([&](double k) {
                       const double kr = k * r;
                       const double sinc = kr < 1e-8 ? 1.0 - kr * kr / 6.0 : std::sin(kr) / kr;
                       return k * k * weight(k) * sinc;
                   }, 0.0, k_max, panels);
        break;
    default:
        throw ConfigError(fmt::format("spectral potential: dimension {} unsupported (1..3)",
                                      xi.size()));
    }
    return out;
}

} // namespace

SpectralValue spectral_w(const SpectralData& data, std::span<const double> xi, double t) {
    if (data.form == SpectralData::FormFactor::shifted_gaussian && xi.size() != 1)
        throw ConfigError("spectral potential: shifted_gaussian form factor requires d = 1");
    const SpectralValue coarse = spectral_once(data, xi, t, data.panels);
    SpectralValue fine = spectral_once(data, xi, t, 2 * data.panels);
    const double change = std::hypot(fine.real - coarse.real, fine.imag - coarse.imag);
    if (!(change <= data.tolerance))
        throw NumericError(fmt::format("spectral quadrature did not converge: {} vs {} "
                                       "(tolerance {})",
                                       coarse.real, fine.real, data.tolerance),
                           coarse.real, fine.real);
    fine.refinement_change = change;
    return fine;
}

// ---------------------------------------------------------------------------
// Radial table

double RadialTable::operator()(double r, double t) const {
    auto bracket = [](const std::vector<double>& axis, double x, std::size_t& i, double& frac) {
        if (x <= axis.front()) {
            i = 0;
            frac = 0.0;
        } else if (x >= axis.back()) {
            i = axis.size() - 2;
            frac = 1.0;
        } else {
            i = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) -
                                         axis.begin()) - 1;
            frac = (x - axis[i]) / (axis[i + 1] - axis[i]);
        }
    };
    std::size_t ir = 0, it = 0;
    double fr = 0.0, ft = 0.0;
    bracket(radii, std::fabs(r), ir, fr);
    bracket(times, std::fabs(t), it, ft);
    const std::size_t nt = times.size();
    auto at = [&](std::size_t a, std::size_t b) { return values[a * nt + b]; };
    return (1 - fr) * ((1 - ft) * at(ir, it) + ft * at(ir, it + 1)) +
           fr * ((1 - ft) * at(ir + 1, it) + ft * at(ir + 1, it + 1));
}

RadialTable load_radial_table(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(fmt::format("potential table: cannot open '{}'", file));
    std::map<std::pair<double, double>, double> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double r, t, w;
        if (!(fields >> r >> t >> w))
            throw ConfigError(fmt::format("potential table {}:{}: expected 'r,t,w'", file, line_no));
        if (r < 0.0 || t < 0.0)
            throw ConfigError(fmt::format(
                "potential table {}:{}: r and t must be >= 0 (W is evaluated at |t|)", file,
                line_no));
        if (!std::isfinite(w))
            throw ConfigError(fmt::format(
                "potential table {}:{}: non-finite value (singular potentials are rejected)",
                file, line_no));
        entries[{r, t}] = w;
    }
    RadialTable table;
    for (const auto& [key, w] : entries) {
        table.radii.push_back(key.first);
        table.times.push_back(key.second);
    }
    auto unique_sorted = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    unique_sorted(table.radii);
    unique_sorted(table.times);
    if (table.radii.size() < 2 || table.times.size() < 2 || table.radii.front() != 0.0 ||
        table.times.front() != 0.0)
        throw ConfigError(fmt::format(
            "potential table {}: need at least a 2x2 mesh starting at r = 0, t = 0", file));
    if (entries.size() != table.radii.size() * table.times.size())
        throw ConfigError(fmt::format("potential table {}: mesh is not rectangular", file));
    for (const auto& [key, w] : entries) table.values.push_back(w);
    return table;
}

// ---------------------------------------------------------------------------
// Potential

Potential Potential::nelson() {
    Potential p;
    p.kind_ = PotentialKind::nelson;
    p.scale_ = -1.0;
    p.exponent_ = 1.0;
    // (1+t^2)^-1 <= 2 (1+|t|)^-2 and 2 (1+t^2)^-2 <= 8 (1+|t|)^-4.
    p.decay_ = DecayData{2.0, 2.0, 4.0, 8.0};
    return p;
}

Potential Potential::power_law(double scale, double exponent) {
    if (!(exponent > 0.0))
        throw ConfigError(fmt::format("powerlaw potential: exponent p must be > 0 (got {})",
                                      exponent));
    if (!std::isfinite(scale)) throw ConfigError("powerlaw potential: scale c must be finite");
    Potential p;
    p.kind_ = PotentialKind::power_law;
    p.scale_ = scale;
    p.exponent_ = exponent;
    const double c = std::fabs(scale);
    p.decay_ = DecayData{2.0 * exponent, c * std::pow(2.0, exponent), 2.0 * exponent + 2.0,
                         2.0 * exponent * c * std::pow(2.0, exponent + 1.0)};
    return p;
}

Potential Potential::spectral(const SpectralData& data, std::size_t dim) {
    if (dim < 1 || dim > 3)
        throw ConfigError(fmt::format("spectral potential: dimension {} unsupported (1..3)", dim));
    if (!(data.cutoff > 0.0) || data.panels == 0 || !(data.width > 0.0))
        throw ConfigError("spectral potential: cutoff, width and panels must be positive");
    Potential p;
    p.kind_ = PotentialKind::spectral;
    p.spectral_ = std::make_shared<const SpectralData>(data);
    p.spectral_dim_ = dim;
    return p;
}

Potential Potential::table(RadialTable table) {
    Potential p;
    p.kind_ = PotentialKind::table;
    p.table_ = std::make_shared<const RadialTable>(std::move(table));
    return p;
}

Potential Potential::with_decay(const DecayData& decay) const {
    Potential p = *this;
    p.decay_ = decay;
    return p;
}

double Potential::value(double r2, double t) const {
    switch (kind_) {
    case PotentialKind::nelson: return -1.0 / (1.0 + r2 + t * t);
    case PotentialKind::power_law: {
        const double denom = 1.0 + r2 + t * t;
        return exponent_ == 1.0 ? scale_ / denom : scale_ * std::pow(denom, -exponent_);
    }
    case PotentialKind::spectral: {
        std::vector<double> xi(spectral_dim_, 0.0);
        xi[0] = std::sqrt(r2);
        return spectral_w(*spectral_, xi, t).real;
    }
    case PotentialKind::table: return (*table_)(std::sqrt(r2), t);
    }
    return 0.0;
}

double Potential::operator()(std::span<const double> xi, double t) const {
    double r2 = 0.0;
    for (double v : xi) r2 += v * v;
    return value(r2, t);
}

Potential::RadialDerivs Potential::radial_derivs(double r, double t) const {
    if (is_analytic()) {
        const double denom = 1.0 + r * r + t * t;
        const double p = exponent_;
        const double w1 = -p * scale_ * std::pow(denom, -p - 1.0);
        const double w2 = p * (p + 1.0) * scale_ * std::pow(denom, -p - 2.0);
        return {2.0 * r * w1, 2.0 * w1 + 4.0 * r * r * w2};
    }
    const double h = 1e-4 * std::max(1.0, r);
    auto f = [&](double x) { return value(x * x, t); };
    const double fp = f(r + h), f0 = f(r), fm = f(std::fabs(r - h));
    return {(fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
}

Potential::R2Derivs Potential::r2_derivs(double r2, double t) const {
    if (kind_ == PotentialKind::nelson) {
        const double inv = 1.0 / (1.0 + r2 + t * t);
        return {inv * inv, -2.0 * inv * inv * inv};
    }
    if (kind_ == PotentialKind::power_law) {
        const double denom = 1.0 + r2 + t * t;
        const double p = exponent_;
        const double base = scale_ * std::pow(denom, -p - 2.0);
        return {-p * base * denom, p * (p + 1.0) * base};
    }
    // One-sided near the origin: the kernel is not defined for r2 < 0.
    const double h = 1e-4 * std::max(1.0, r2);
    const double lo = std::max(r2 - h, 0.0), hi = lo + 2.0 * h, mid = lo + h;
    const double f0 = value(lo, t), f1 = value(mid, t), f2 = value(hi, t);
    const double slope = (f2 - f0) / (2.0 * h), curvature = (f2 - 2.0 * f1 + f0) / (h * h);
    return {slope + curvature * (r2 - mid), curvature};
}

std::vector<double> Potential::gradient(std::span<const double> xi, double t) const {
    double r2 = 0.0;
    for (double v : xi) r2 += v * v;
    const double r = std::sqrt(r2);
    std::vector<double> g(xi.size(), 0.0);
    if (r == 0.0) return g;
    const double factor = radial_derivs(r, t).f1 / r;
    for (std::size_t i = 0; i < xi.size(); ++i) g[i] = factor * xi[i];
    return g;
}

double Potential::hessian_norm(std::span<const double> xi, double t) const {
    double r2 = 0.0;
    for (double v : xi) r2 += v * v;
    const double r = std::sqrt(r2);
    const RadialDerivs d = radial_derivs(r, t);
    const double radial = std::fabs(d.f2);
    if (xi.size() < 2) return radial;
    // Transverse eigenvalue f'(r)/r, with limit f''(0) at the origin.
    const double transverse = r > 0.0 ? std::fabs(d.f1 / r) : radial;
    return std::max(radial, transverse);
}

double Potential::sampled_sup(double t, int which) const {
    double best = 0.0;
    const double w0 = value(0.0, t);
    for (int i = -1; i < 300; ++i) {
        const double r = i < 0 ? 0.0 : 1e-3 * std::pow(1e6, i / 299.0);
        double q = 0.0;
        switch (which) {
        case 0: q = std::fabs(value(r * r, t)); break;
        case 1: q = std::fabs(radial_derivs(r, t).f1); break;
        case 2: {
            const RadialDerivs d = radial_derivs(r, t);
            q = std::max(std::fabs(d.f2), r > 0.0 ? std::fabs(d.f1 / r) : 0.0);
            break;
        }
        default: q = std::fabs(value(r * r, t) - w0); break;
        }
        best = std::max(best, q);
    }
    return best;
}

double Potential::sup_abs(double t) const {
    if (!is_analytic()) return sampled_sup(t, 0);
    return std::fabs(scale_) * std::pow(1.0 + t * t, -exponent_);
}

double Potential::sup_gradient(double t) const {
    if (!is_analytic()) return sampled_sup(t, 1);
    // |grad W| = 2p|c| r (a + r^2)^(-p-1), maximal at r^2 = a / (2p+1).
    const double a = 1.0 + t * t;
    const double p = exponent_;
    return 2.0 * p * std::fabs(scale_) * std::sqrt(a / (2.0 * p + 1.0)) *
           std::pow(a * (2.0 * p + 2.0) / (2.0 * p + 1.0), -p - 1.0);
}

double Potential::sup_hessian(double t) const {
    if (!is_analytic()) return sampled_sup(t, 2);
    // Attained at xi = 0 where both eigenvalues equal 2p|c| a^(-p-1).
    return 2.0 * exponent_ * std::fabs(scale_) * std::pow(1.0 + t * t, -exponent_ - 1.0);
}

double Potential::sup_shift_difference(double t) const {
    // Monotone radial kinds: the difference approaches |W(0,t)| as |xi| grows.
    if (!is_analytic()) return sampled_sup(t, 3);
    return sup_abs(t);
}

std::string Potential::describe() const {
    switch (kind_) {
    case PotentialKind::nelson: return "nelson";
    case PotentialKind::power_law: return fmt::format("powerlaw(c={}, p={})", scale_, exponent_);
    case PotentialKind::spectral: return fmt::format("spectral(d={})", spectral_dim_);
    case PotentialKind::table:
        return fmt::format("custom-table({}x{})", table_->radii.size(), table_->times.size());
    }
    return "unknown";
}

} // namespace pathgibbs
