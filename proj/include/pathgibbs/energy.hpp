#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pathgibbs/path.hpp"
#include "pathgibbs/potential.hpp"

namespace pathgibbs {

enum class QuadRule { midpoint, gauss2 };
enum class TailBoundMode { analytic, off };

struct EnergyValue {
    double value = 0.0;
    double quad_error = 0.0; ///< |fine - coarse| with cells merged pairwise
    double tail_error = 0.0; ///< truncation estimate; 0 for U_I and H_T
};

/// Tabulated kernel for potentials whose pointwise evaluation is expensive
/// (spectral): W on a uniform (|xi|, |t|) mesh, bilinear, with direct
/// evaluation outside the mesh.
class KernelTable {
public:
    KernelTable(const Potential& pot, double t_step, double t_max, double r_step, double r_max);
    double operator()(double r2, double t) const;

private:
    const Potential* pot_;
    double t_step_, r_step_, r_max_;
    std::size_t nt_, nr_;
    std::vector<double> values_;
};

/// Potential + grid + quadrature settings shared by all energy evaluations.
/// Immutable after construction.
class EnergyContext {
public:
    EnergyContext(Potential pot, Grid grid, QuadRule rule = QuadRule::midpoint,
                  std::optional<double> cone_window = std::nullopt,
                  TailBoundMode tail_mode = TailBoundMode::analytic);

    const Potential& potential() const noexcept { return *pot_; }
    const Grid& grid() const noexcept { return grid_; }
    QuadRule rule() const noexcept { return rule_; }
    TailBoundMode tail_mode() const noexcept { return tail_mode_; }
    /// Truncation radius R; defaults to 8|I| (boundary energy) or T
    /// (relative-energy kernel) when unset.
    const std::optional<double>& cone_window() const noexcept { return cone_window_; }

    /// W(xi, t) with r2 = |xi|^2, using the kernel table when present.
    double kernel(double r2, double t) const {
        switch (pot_->kind()) {
        case PotentialKind::nelson: return -1.0 / (1.0 + r2 + t * t);
        case PotentialKind::spectral: return (*table_)(r2, t);
        default: return pot_->value(r2, t);
        }
    }

private:
    std::shared_ptr<const Potential> pot_;
    Grid grid_;
    QuadRule rule_;
    std::optional<double> cone_window_;
    TailBoundMode tail_mode_;
    std::shared_ptr<const KernelTable> table_;
};

/// J(I) = (I+ x I-) u (I- x I+) u (I x I^c) u (I^c x I), clipped to the
/// window, as a set of grid cells.
class Cone {
public:
    Cone(const Grid& grid, const Interval& interval);

    bool contains(std::size_t k, std::size_t l) const noexcept {
        const bool in_k = inside_.contains(k), in_l = inside_.contains(l);
        if (in_k != in_l) return true;
        if (in_k) return false;
        return (k < inside_.first) != (l < inside_.first);
    }
    const CellRange& inside() const noexcept { return inside_; }
    std::size_t cell_count() const noexcept;
    double area() const noexcept { return static_cast<double>(cell_count()) * dt_ * dt_; }
    std::vector<std::pair<std::size_t, std::size_t>> cells() const;

private:
    std::size_t n_;
    double dt_;
    CellRange inside_;
};

/// U_I(x) = int_{I x I} W(x_st, t - s)
EnergyValue interior_energy(const EnergyContext& ctx, const IncrementPath& path,
                            const Interval& interval);

/// H_T(x) = U_{[-T, T]}(x)
EnergyValue window_energy(const EnergyContext& ctx, const IncrementPath& path);

/// V_I(x, y) = int_{J(I)} [W((x (x)_I y)_st) - W((0 (x)_I y)_st)], truncated
/// at time distance R from I.
EnergyValue boundary_energy(const EnergyContext& ctx, const IncrementPath& x,
                            const IncrementPath& y, const Interval& interval);

/// Q(x, xi, a) = int_{t<0<s} |W(xi + x_st, a+s-t) - W(x_st, a+s-t)|, on
/// the quadrant truncated at R; tail bounded with the gradient envelope
/// (+inf with the tail mode off).
EnergyValue relative_energy_kernel(const EnergyContext& ctx, const IncrementPath& path,
                                   std::span<const double> xi, double shift);

/// int_R^inf tau sup_xi |grad W(xi, a + tau)| dtau: the quadrant tail per unit |xi|.
double quadrant_tail_factor(const Potential& pot, double shift, double radius);

/// U_ij(x) = int_{tau_i} dt int_{tau_j} ds W(x_ts, t - s) with tau_i = [iL, (i+1)L].
double block_pair_energy(const EnergyContext& ctx, const IncrementPath& path, long i, long j,
                         double block_length);

struct EnergyDelta {
    double value = 0.0;
    /// Ordered cell pairs in J(changed) u changed^2.
    std::size_t cells_touched = 0;
};

/// H_T(path') - H_T(path) where path' replaces the steps on `changed`
/// (old_steps must be the current ones). Sums only cell pairs whose
/// increment crosses the changed cells.
EnergyDelta delta_energy(const EnergyContext& ctx, const IncrementPath& path,
                         const CellRange& changed, std::span<const double> old_steps,
                         std::span<const double> new_steps);

/// dH_T / dxi_k for every step xi_k of the discretised energy, row-major
/// (step, component). Exact for the quadrature, not a finite difference.
std::vector<double> energy_gradient(const EnergyContext& ctx, const IncrementPath& path);

/// For ordered disjoint cell blocks I_0 < I_1 < ..., entry [i][n-1] is
///   sum_{k in I_i} sum_{l in I_{i+n}} v^T (d2 H_T / dxi_k dxi_l) v
/// for n = 1..max_lag with i + n inside the list.
std::vector<std::vector<double>> block_cross_hessian(const EnergyContext& ctx,
                                                     const IncrementPath& path,
                                                     std::span<const CellRange> blocks,
                                                     std::span<const double> direction,
                                                     std::size_t max_lag);

struct EnergyRow {
    Interval interval;
    EnergyValue energy;
};
/// CSV "lo,hi,value,quad_error,tail_error" with a header line.
void write_energy_csv(std::ostream& out, std::span<const EnergyRow> rows);

} // namespace pathgibbs
