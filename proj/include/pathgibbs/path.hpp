#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pathgibbs/rng.hpp"

namespace pathgibbs {

/// Uniform time grid over the window [-T, T]. Nodes are t_k = -T + k*dt.
class Grid {
public:
    /// Throws ConfigError unless T > 0, dt > 0, dt divides 2T and there are
    /// at least two steps.
    Grid(double horizon, double dt);

    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return dt_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    double length() const noexcept { return 2.0 * horizon_; }

    double node_time(std::size_t k) const noexcept {
        return -horizon_ + static_cast<double>(k) * dt_;
    }
    /// Centre of step (cell) k.
    double cell_center(std::size_t k) const noexcept {
        return -horizon_ + (static_cast<double>(k) + 0.5) * dt_;
    }

    /// Index of the grid node at time t; ArgumentError if t is off-grid or
    /// outside the window.
    std::size_t node_index(double t) const;
    bool is_node(double t) const noexcept;

    /// Number of steps spanned by a time length; ArgumentError unless the
    /// length is a non-negative multiple of dt.
    std::size_t steps_in(double length) const;

    bool operator==(const Grid& other) const noexcept {
        return n_steps_ == other.n_steps_ && horizon_ == other.horizon_ && dt_ == other.dt_;
    }

private:
    double horizon_;
    double dt_;
    std::size_t n_steps_;
};

/// Closed time interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const noexcept { return hi - lo; }
};

/// Half-open range of cell (step) indices [first, last).
struct CellRange {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t size() const noexcept { return last - first; }
    bool contains(std::size_t k) const noexcept { return k >= first && k < last; }
};

/// Grid-aligned interval inside the window, as a cell range.
CellRange cells_of(const Grid& grid, const Interval& interval);

/// Discretised increment field x_{st} on a grid, stored as per-step
/// increments. Cocycle-consistent by construction since every increment is a
/// partial sum of steps.
class IncrementPath {
public:
    /// The zero path.
    IncrementPath(Grid grid, std::size_t dim);
    /// steps.size() must equal n_steps * dim (row-major: step, component).
    IncrementPath(Grid grid, std::size_t dim, std::vector<double> steps);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t n_steps() const noexcept { return grid_.n_steps(); }

    std::span<const double> steps() const noexcept { return steps_; }
    std::span<const double> step(std::size_t k) const noexcept {
        return {steps_.data() + k * dim_, dim_};
    }
    std::span<double> step(std::size_t k) noexcept { return {steps_.data() + k * dim_, dim_}; }
    std::span<const double> steps(CellRange r) const noexcept {
        return {steps_.data() + r.first * dim_, r.size() * dim_};
    }

    /// Overwrite the steps of cells [first, first + values.size()/dim).
    void set_steps(std::size_t first, std::span<const double> values);

    /// x_{st}: signed partial sum of steps from node s to node t.
    /// Antisymmetric; zero for s == t. ArgumentError off-grid.
    std::vector<double> increment(double s, double t) const;
    std::vector<double> increment_nodes(std::size_t i, std::size_t j) const;

    /// Positions B_{t_k} - B_{-T} at all n_steps + 1 nodes.
    std::vector<double> node_positions() const;

    bool operator==(const IncrementPath& other) const noexcept {
        return grid_ == other.grid_ && dim_ == other.dim_ && steps_ == other.steps_;
    }

private:
    Grid grid_;
    std::size_t dim_;
    std::vector<double> steps_;
};

/// Independent N(0, dt) per component and per step.
IncrementPath sample_wiener(const Grid& grid, std::size_t dim, Rng& rng);
IncrementPath sample_wiener(const Grid& grid, std::size_t dim, std::uint64_t seed);

/// Path with every step equal to `slope * dt` (a deterministic ramp).
IncrementPath ramp_path(const Grid& grid, std::span<const double> slope);

/// x (x)_I y: steps inside I from x, outside from y.
IncrementPath splice(const IncrementPath& x, const IncrementPath& y, const Interval& interval);

/// (tau_a x)_{st} = x_{s+a,t+a} on the common interior. Steps shifted in
/// from outside the window are zero, or fresh Wiener steps when `fresh` is
/// given.
IncrementPath translate(const IncrementPath& path, double shift, Rng* fresh = nullptr);

/// The restriction of a path to tau_i = [iL, (i+1)L].
struct SpinBlock {
    long index = 0;
    double length = 0.0;
    std::size_t dim = 0;
    std::vector<double> steps;
};

/// Requires L a multiple of dt, dividing 2T, with -T on the lattice LZ.
std::vector<SpinBlock> to_blocks(const IncrementPath& path, double block_length);
/// Inverse of to_blocks; blocks must be contiguous and cover the window.
IncrementPath from_blocks(std::span<const SpinBlock> blocks, const Grid& grid);

/// Row format: one line per step "t_k,step_1,...,step_d" with 17 significant
/// digits, preceded by a "# {json}" header carrying T, dt, d and seed.
void write_path_csv(std::ostream& out, const IncrementPath& path, std::uint64_t seed);

struct LoadedPath {
    IncrementPath path;
    std::uint64_t seed;
};
LoadedPath read_path_csv(std::istream& in);

} // namespace pathgibbs
