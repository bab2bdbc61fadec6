#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pathgibbs {

enum class PotentialKind { nelson, power_law, spectral, table };

std::string to_string(PotentialKind kind);

/// Power-law decay data of a pair potential:
///   sup_xi |W(xi,t)|              <= c_gamma (1+|t|)^-gamma
///   sup_xi |grad grad W(xi,t)|    <= k_w     (1+|t|)^-alpha
struct DecayData {
    double gamma = 0.0;
    double c_gamma = 0.0;
    double alpha = 0.0;
    double k_w = 0.0;
};

/// Boson dispersion omega(k) and form factor rho(k) for
///   W(xi,t) = int dk / (2 omega(k)) |rho(k)|^2 exp(-i k.xi - omega(k) |t|).
struct SpectralData {
    enum class Dispersion { constant, linear, massive };
    enum class FormFactor { indicator, gaussian, shifted_gaussian };

    Dispersion dispersion = Dispersion::constant;
    double mass = 1.0;  ///< omega = mass (constant) or sqrt(k^2 + mass^2) (massive)
    FormFactor form = FormFactor::gaussian;
    double width = 1.0; ///< indicator radius or gaussian width
    double shift = 0.0; ///< centre of shifted_gaussian (d = 1 only)
    double cutoff = 8.0;      ///< k-space integration radius
    std::size_t panels = 64;  ///< composite Gauss-Legendre panels (8 points each)
    double tolerance = 1e-8;  ///< allowed change under panel doubling

    double omega(double k_norm) const;
    double rho(double k) const; ///< k is |k| except for shifted_gaussian in d = 1
};

struct SpectralValue {
    double real = 0.0;
    double imag = 0.0;
    /// |value(panels) - value(2 panels)|
    double refinement_change = 0.0;
};

/// k-space quadrature of the spectral kernel for d in {1, 2, 3}. d = 1 uses
/// the full line (both parts); d = 2, 3 reduce to radial integrals.
/// NumericError when panel doubling changes the value by more than the
/// tolerance.
SpectralValue spectral_w(const SpectralData& data, std::span<const double> xi, double t);

/// Radially symmetric tabulated W(|xi|, |t|), bilinear, clamped at the
/// table edge.
struct RadialTable {
    std::vector<double> radii; ///< strictly increasing, starting at 0
    std::vector<double> times; ///< strictly increasing, starting at 0
    std::vector<double> values; ///< radii.size() * times.size(), radius-major

    double operator()(double r, double t) const;
};

/// CSV rows "r,t,w" on a rectangular mesh.
RadialTable load_radial_table(const std::string& file);

/// Translation-invariant pair interaction W(xi, t). Every built-in kind is
/// radial in xi and is evaluated at |t|, so W(-xi, -t) = W(xi, t).
class Potential {
public:
    /// W = -1 / (1 + |xi|^2 + t^2)
    static Potential nelson();
    /// W = c (1 + |xi|^2 + t^2)^-p, p > 0
    static Potential power_law(double scale, double exponent);
    static Potential spectral(const SpectralData& data, std::size_t dim);
    static Potential table(RadialTable table);

    PotentialKind kind() const noexcept { return kind_; }
    double scale() const noexcept { return scale_; }
    double exponent() const noexcept { return exponent_; }
    const SpectralData* spectral_data() const noexcept { return spectral_.get(); }
    std::size_t spectral_dim() const noexcept { return spectral_dim_; }

    /// Closed-form kinds have analytic envelopes and derivatives.
    bool is_analytic() const noexcept {
        return kind_ == PotentialKind::nelson || kind_ == PotentialKind::power_law;
    }

    /// W as a function of r2 = |xi|^2 and t.
    double value(double r2, double t) const;
    double operator()(std::span<const double> xi, double t) const;

    /// dW/d(r2) and d2W/d(r2)^2 with r2 = |xi|^2, so that
    /// grad W = 2 w1 xi and Hess W = 2 w1 I + 4 w2 xi xi^T.
    struct R2Derivs {
        double w1;
        double w2;
    };
    R2Derivs r2_derivs(double r2, double t) const;

    std::vector<double> gradient(std::span<const double> xi, double t) const;
    /// Operator norm of the xi-Hessian.
    double hessian_norm(std::span<const double> xi, double t) const;

    /// sup over xi of |W|, |grad W|, ||Hess W||, and |W(xi,t) - W(0,t)|.
    /// Analytic for closed-form kinds, otherwise a max over a radial mesh.
    double sup_abs(double t) const;
    double sup_gradient(double t) const;
    double sup_hessian(double t) const;
    double sup_shift_difference(double t) const;

    const std::optional<DecayData>& declared_decay() const noexcept { return decay_; }
    Potential with_decay(const DecayData& decay) const;

    std::string describe() const;

private:
    Potential() = default;

    struct RadialDerivs {
        double f1; ///< d/dr of f(r) = W(r^2, t)
        double f2; ///< d2/dr2
    };
    RadialDerivs radial_derivs(double r, double t) const;
    double sampled_sup(double t, int which) const;

    PotentialKind kind_ = PotentialKind::nelson;
    double scale_ = -1.0;
    double exponent_ = 1.0;
    std::shared_ptr<const SpectralData> spectral_;
    std::size_t spectral_dim_ = 1;
    std::shared_ptr<const RadialTable> table_;
    std::optional<DecayData> decay_;
};

} // namespace pathgibbs
