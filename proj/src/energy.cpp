#include "pathgibbs/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "pathgibbs/error.hpp"
#include "pathgibbs/numeric.hpp"

namespace pathgibbs {

// ---------------------------------------------------------------------------
// Kernel table

KernelTable::KernelTable(const Potential& pot, double t_step, double t_max, double r_step,
                         double r_max)
    : pot_(&pot), t_step_(t_step), r_step_(r_step), r_max_(r_max),
      nt_(static_cast<std::size_t>(std::ceil(t_max / t_step)) + 2),
      nr_(static_cast<std::size_t>(std::ceil(r_max / r_step)) + 1) {
    values_.resize(nt_ * nr_);
    for (std::size_t it = 0; it < nt_; ++it)
        for (std::size_t ir = 0; ir < nr_; ++ir) {
            const double r = static_cast<double>(ir) * r_step_;
            values_[it * nr_ + ir] = pot.value(r * r, static_cast<double>(it) * t_step_);
        }
}

double KernelTable::operator()(double r2, double t) const {
    const double r = std::sqrt(r2);
    const double ut = std::fabs(t) / t_step_;
    const auto it = static_cast<std::size_t>(ut);
    if (r >= r_max_ || it + 1 >= nt_) return pot_->value(r2, t);
    const double ft = ut - static_cast<double>(it);
    const double ur = r / r_step_;
    const auto ir = std::min(static_cast<std::size_t>(ur), nr_ - 2);
    const double fr = ur - static_cast<double>(ir);
    auto at = [&](std::size_t a, std::size_t b) { return values_[a * nr_ + b]; };
    return (1 - ft) * ((1 - fr) * at(it, ir) + fr * at(it, ir + 1)) +
           ft * ((1 - fr) * at(it + 1, ir) + fr * at(it + 1, ir + 1));
}

// ---------------------------------------------------------------------------
// Context and cone

EnergyContext::EnergyContext(Potential pot, Grid grid, QuadRule rule,
                             std::optional<double> cone_window, TailBoundMode tail_mode)
    : pot_(std::make_shared<const Potential>(std::move(pot))), grid_(grid), rule_(rule),
      cone_window_(cone_window), tail_mode_(tail_mode) {
    if (cone_window_ && !(*cone_window_ > 0.0))
        throw ConfigError(fmt::format("energy: cone window R must be > 0 (got {})", *cone_window_));
    if (pot_->kind() == PotentialKind::spectral)
        table_ = std::make_shared<const KernelTable>(*pot_, grid.dt(), grid.length() + grid.dt(),
                                                     0.02, 8.0);
}

Cone::Cone(const Grid& grid, const Interval& interval)
    : n_(grid.n_steps()), dt_(grid.dt()), inside_(cells_of(grid, interval)) {}

std::size_t Cone::cell_count() const noexcept {
    const std::size_t m = inside_.size();
    const std::size_t before = inside_.first;
    const std::size_t after = n_ - inside_.last;
    return n_ * n_ - m * m - before * before - after * after;
}

std::vector<std::pair<std::size_t, std::size_t>> Cone::cells() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(cell_count());
    for (std::size_t k = 0; k < n_; ++k)
        for (std::size_t l = 0; l < n_; ++l)
            if (contains(k, l)) out.emplace_back(k, l);
    return out;
}

// ---------------------------------------------------------------------------
// Quadrature nodes

namespace {

/// Quadrature nodes for a set of cell groups: times, weights and interpolated
/// positions (relative to B(-T)).
struct NodeSet {
    std::size_t dim = 1;
    std::vector<double> time;
    std::vector<double> weight;
    std::vector<double> pos;
    std::vector<std::size_t> group_begin; ///< size groups + 1

    std::size_t group_size(std::size_t g) const { return group_begin[g + 1] - group_begin[g]; }
    const double* at(std::size_t i) const { return pos.data() + i * dim; }
};

struct NodeOffsets {
    double theta[2];
    std::size_t count;
};

NodeOffsets offsets_for(QuadRule rule) {
    if (rule == QuadRule::midpoint) return {{0.5, 0.0}, 1};
    const double h = 0.5 / std::sqrt(3.0);
    return {{0.5 - h, 0.5 + h}, 2};
}

NodeSet build_nodes(const IncrementPath& path, std::span<const double> node_pos, QuadRule rule,
                    std::span<const CellRange> groups, bool coarse) {
    const Grid& grid = path.grid();
    const std::size_t dim = path.dim();
    const NodeOffsets off = offsets_for(rule);
    NodeSet nodes;
    nodes.dim = dim;
    nodes.group_begin.push_back(0);
    std::vector<double> step(dim);
    for (const CellRange& g : groups) {
        const std::size_t stride = coarse ? 2 : 1;
        for (std::size_t k = g.first; k < g.last; k += stride) {
            const std::size_t width = std::min(stride, g.last - k);
            const double t0 = grid.node_time(k);
            const double h = static_cast<double>(width) * grid.dt();
            for (std::size_t c = 0; c < dim; ++c)
                step[c] = node_pos[(k + width) * dim + c] - node_pos[k * dim + c];
            for (std::size_t q = 0; q < off.count; ++q) {
                nodes.time.push_back(t0 + off.theta[q] * h);
                nodes.weight.push_back(h / static_cast<double>(off.count));
                for (std::size_t c = 0; c < dim; ++c)
                    nodes.pos.push_back(node_pos[k * dim + c] + off.theta[q] * step[c]);
            }
        }
        nodes.group_begin.push_back(nodes.time.size());
    }
    return nodes;
}

NodeSet build_nodes(const IncrementPath& path, QuadRule rule, std::span<const CellRange> groups,
                    bool coarse) {
    const std::vector<double> node_pos = path.node_positions();
    return build_nodes(path, node_pos, rule, groups, coarse);
}

inline double dist2(const double* a, const double* b, std::size_t dim) {
    double r2 = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const double d = a[c] - b[c];
        r2 += d * d;
    }
    return r2;
}

/// Calls f with a concrete kernel functor (r2, t) -> W so inner loops inline.
template <class F>
double with_kernel(const EnergyContext& ctx, F&& f) {
    const Potential& pot = ctx.potential();
    switch (pot.kind()) {
    case PotentialKind::nelson:
        return f([](double r2, double t) { return -1.0 / (1.0 + r2 + t * t); });
    case PotentialKind::power_law: {
        const double c = pot.scale(), p = pot.exponent();
        if (p == 1.0) return f([c](double r2, double t) { return c / (1.0 + r2 + t * t); });
        if (p == 2.0)
            return f([c](double r2, double t) {
                const double d = 1.0 + r2 + t * t;
                return c / (d * d);
            });
        return f([c, p](double r2, double t) { return c * std::pow(1.0 + r2 + t * t, -p); });
    }
    default: return f([&ctx](double r2, double t) { return ctx.kernel(r2, t); });
    }
}

/// sum_{i,j in g} w_i w_j W(X_j - X_i, t_j - t_i)
double sum_within(const EnergyContext& ctx, const NodeSet& n, std::size_t g) {
    return with_kernel(ctx, [&](auto kernel) {
        CompensatedSum total;
        const std::size_t b = n.group_begin[g], e = n.group_begin[g + 1];
        for (std::size_t i = b; i < e; ++i) {
            double row = 0.5 * n.weight[i] * kernel(0.0, 0.0);
            for (std::size_t j = i + 1; j < e; ++j)
                row += n.weight[j] * kernel(dist2(n.at(i), n.at(j), n.dim), n.time[j] - n.time[i]);
            total += 2.0 * n.weight[i] * row;
        }
        return total.value();
    });
}

/// sum_{i in g, j in h} w_i w_j W(X_j - X_i, t_j - t_i)
double sum_between(const EnergyContext& ctx, const NodeSet& n, std::size_t g, std::size_t h) {
    return with_kernel(ctx, [&](auto kernel) {
        CompensatedSum total;
        for (std::size_t i = n.group_begin[g]; i < n.group_begin[g + 1]; ++i) {
            double row = 0.0;
            for (std::size_t j = n.group_begin[h]; j < n.group_begin[h + 1]; ++j)
                row += n.weight[j] * kernel(dist2(n.at(i), n.at(j), n.dim), n.time[j] - n.time[i]);
            total += n.weight[i] * row;
        }
        return total.value();
    });
}

/// sum_{i in g, j in h} w_i w_j [W(Z_j - Z_i) - W(Z0_j - Z0_i)]
double diff_between(const EnergyContext& ctx, const NodeSet& z, const NodeSet& z0, std::size_t g,
                    std::size_t h) {
    return with_kernel(ctx, [&](auto kernel) {
        CompensatedSum total;
        for (std::size_t i = z.group_begin[g]; i < z.group_begin[g + 1]; ++i) {
            double row = 0.0;
            for (std::size_t j = z.group_begin[h]; j < z.group_begin[h + 1]; ++j) {
                const double t = z.time[j] - z.time[i];
                row += z.weight[j] * (kernel(dist2(z.at(i), z.at(j), z.dim), t) -
                                      kernel(dist2(z0.at(i), z0.at(j), z.dim), t));
            }
            total += z.weight[i] * row;
        }
        return total.value();
    });
}

EnergyValue self_energy(const EnergyContext& ctx, const IncrementPath& path, CellRange cells) {
    const std::vector<double> node_pos = path.node_positions();
    const CellRange groups[] = {cells};
    const double fine = sum_within(ctx, build_nodes(path, node_pos, ctx.rule(), groups, false), 0);
    const double coarse =
        sum_within(ctx, build_nodes(path, node_pos, ctx.rule(), groups, true), 0);
    return {fine, std::fabs(fine - coarse), 0.0};
}

void require_path_on_context(const EnergyContext& ctx, const IncrementPath& path) {
    if (!(path.grid() == ctx.grid()))
        throw ArgumentError("energy: path grid differs from the energy context grid");
}

/// Largest grid-aligned radius <= r.
double align_down(const Grid& grid, double r) {
    return std::floor(r / grid.dt() + 1e-9) * grid.dt();
}

} // namespace

// ---------------------------------------------------------------------------
// Energies

EnergyValue interior_energy(const EnergyContext& ctx, const IncrementPath& path,
                            const Interval& interval) {
    require_path_on_context(ctx, path);
    return self_energy(ctx, path, cells_of(path.grid(), interval));
}

EnergyValue window_energy(const EnergyContext& ctx, const IncrementPath& path) {
    require_path_on_context(ctx, path);
    return self_energy(ctx, path, CellRange{0, path.n_steps()});
}

EnergyValue boundary_energy(const EnergyContext& ctx, const IncrementPath& x,
                            const IncrementPath& y, const Interval& interval) {
    require_path_on_context(ctx, x);
    require_path_on_context(ctx, y);
    const Grid& grid = ctx.grid();
    const CellRange inside = cells_of(grid, interval);
    const double radius = ctx.cone_window().value_or(8.0 * interval.length());
    if (radius < interval.length())
        throw ArgumentError(fmt::format("boundary energy: cone window {} is shorter than |I| = {}",
                                        radius, interval.length()));
    const std::size_t reach = grid.steps_in(align_down(grid, radius));
    const CellRange before{inside.first > reach ? inside.first - reach : 0, inside.first};
    const CellRange after{inside.last, std::min(grid.n_steps(), inside.last + reach)};
    const bool truncated = before.first > 0 || after.last < grid.n_steps();

    const IncrementPath zero(grid, x.dim());
    const IncrementPath z = splice(x, y, interval);
    const IncrementPath z0 = splice(zero, y, interval);
    const CellRange groups[] = {before, inside, after};

    auto cone_sum = [&](bool coarse) {
        const NodeSet nz = build_nodes(z, ctx.rule(), groups, coarse);
        const NodeSet nz0 = build_nodes(z0, ctx.rule(), groups, coarse);
        CompensatedSum s;
        s += diff_between(ctx, nz, nz0, 1, 0);
        s += diff_between(ctx, nz, nz0, 1, 2);
        s += diff_between(ctx, nz, nz0, 0, 2);
        return 2.0 * s.value();
    };
    EnergyValue out;
    out.value = cone_sum(false);
    out.quad_error = std::fabs(out.value - cone_sum(true));

    if (truncated) {
        const auto& decay = ctx.potential().declared_decay();
        if (ctx.tail_mode() == TailBoundMode::off || !decay || decay->alpha <= 3.0) {
            out.tail_error = std::numeric_limits<double>::infinity();
        } else {
            const auto inc = x.increment(interval.lo, interval.hi);
            double norm = 0.0;
            for (double v : inc) norm += v * v;
            norm = std::sqrt(norm);
            out.tail_error = decay->k_w * (1.0 + norm) * (1.0 + norm) *
                             std::pow(radius, 3.0 - decay->alpha) / (decay->alpha - 3.0);
        }
    }
    return out;
}

EnergyValue relative_energy_kernel(const EnergyContext& ctx, const IncrementPath& path,
                                   std::span<const double> xi, double shift) {
    require_path_on_context(ctx, path);
    if (!(shift >= 0.0))
        throw ArgumentError(fmt::format("relative energy kernel: a must be >= 0 (got {})", shift));
    if (xi.size() != path.dim())
        throw ArgumentError("relative energy kernel: xi has the wrong dimension");
    const Grid& grid = ctx.grid();
    const std::size_t origin = grid.node_index(0.0);
    const double radius = align_down(grid, std::min(ctx.cone_window().value_or(grid.horizon()),
                                                    grid.horizon()));
    const std::size_t reach = grid.steps_in(radius);
    const CellRange groups[] = {{origin - reach, origin}, {origin, origin + reach}};
    const std::size_t dim = path.dim();

    double xi_norm = 0.0;
    for (double v : xi) xi_norm += v * v;
    xi_norm = std::sqrt(xi_norm);

    auto quadrant = [&](bool coarse) {
        const NodeSet n = build_nodes(path, ctx.rule(), groups, coarse);
        return with_kernel(ctx, [&](auto kernel) {
            CompensatedSum total;
            std::vector<double> x(dim);
            for (std::size_t i = n.group_begin[0]; i < n.group_begin[1]; ++i) {
                double row = 0.0;
                for (std::size_t j = n.group_begin[1]; j < n.group_begin[2]; ++j) {
                    // x_st = B_t - B_s with t = node i < 0 < s = node j.
                    double r2 = 0.0, r2s = 0.0;
                    for (std::size_t c = 0; c < dim; ++c) {
                        const double d = n.at(i)[c] - n.at(j)[c];
                        r2 += d * d;
                        r2s += (d + xi[c]) * (d + xi[c]);
                    }
                    const double tau = shift + n.time[j] - n.time[i];
                    row += n.weight[j] * std::fabs(kernel(r2s, tau) - kernel(r2, tau));
                }
                total += n.weight[i] * row;
            }
            return total.value();
        });
    };

    EnergyValue out;
    out.value = quadrant(false);
    out.quad_error = std::fabs(out.value - quadrant(true));
    if (xi_norm > 0.0)
        out.tail_error = ctx.tail_mode() == TailBoundMode::off
                             ? std::numeric_limits<double>::infinity()
                             : xi_norm * quadrant_tail_factor(ctx.potential(), shift,
                                                              std::max(radius, grid.dt()));
    return out;
}

double quadrant_tail_factor(const Potential& pot, double shift, double radius) {
    // Pairs (t, s) outside the square with s - t = tau have measure <= tau.
    return power_tail_integral([&](double tau) { return pot.sup_gradient(shift + tau); }, radius,
                               1.0);
}

double block_pair_energy(const EnergyContext& ctx, const IncrementPath& path, long i, long j,
                         double block_length) {
    require_path_on_context(ctx, path);
    const Grid& grid = ctx.grid();
    auto block = [&](long index) {
        const double lo = static_cast<double>(index) * block_length;
        return cells_of(grid, Interval{lo, lo + block_length});
    };
    const CellRange bi = block(i), bj = block(j);
    if (i == j) {
        const CellRange groups[] = {bi};
        return sum_within(ctx, build_nodes(path, ctx.rule(), groups, false), 0);
    }
    const CellRange groups[] = {bi, bj};
    return sum_between(ctx, build_nodes(path, ctx.rule(), groups, false), 0, 1);
}

EnergyDelta delta_energy(const EnergyContext& ctx, const IncrementPath& path,
                         const CellRange& changed, std::span<const double> old_steps,
                         std::span<const double> new_steps) {
    require_path_on_context(ctx, path);
    const std::size_t dim = path.dim();
    const std::size_t n = path.n_steps();
    if (changed.last > n || changed.first >= changed.last)
        throw ArgumentError("delta_energy: changed range outside the window");
    if (old_steps.size() != changed.size() * dim || new_steps.size() != old_steps.size())
        throw ArgumentError("delta_energy: step arrays do not match the changed range");
    const auto current = path.steps(changed);
    if (!std::equal(current.begin(), current.end(), old_steps.begin()))
        throw ArgumentError("delta_energy: old_steps are not the path's current steps");

    const CellRange all[] = {{0, n}};
    const NodeSet nodes = build_nodes(path, ctx.rule(), all, false);
    const std::size_t per_cell = offsets_for(ctx.rule()).count;
    const NodeOffsets off = offsets_for(ctx.rule());

    // Displacement of each node inside the changed cells; cells after the
    // block move by the total.
    const std::size_t first_node = changed.first * per_cell;
    const std::size_t end_node = changed.last * per_cell;
    std::vector<double> shift((end_node - first_node) * dim);
    std::vector<double> total(dim, 0.0);
    for (std::size_t k = changed.first; k < changed.last; ++k) {
        const std::size_t local = k - changed.first;
        for (std::size_t q = 0; q < per_cell; ++q)
            for (std::size_t c = 0; c < dim; ++c) {
                const double ds = new_steps[local * dim + c] - old_steps[local * dim + c];
                shift[(local * per_cell + q) * dim + c] = total[c] + off.theta[q] * ds;
            }
        for (std::size_t c = 0; c < dim; ++c)
            total[c] += new_steps[local * dim + c] - old_steps[local * dim + c];
    }
    static const std::vector<double> zeros(8, 0.0);
    auto displacement = [&](std::size_t node) -> const double* {
        if (node < first_node) return zeros.data();
        if (node >= end_node) return total.data();
        return shift.data() + (node - first_node) * dim;
    };

    EnergyDelta out;
    out.value = with_kernel(ctx, [&](auto kernel) {
        CompensatedSum sum;
        std::vector<double> moved(dim);
        for (std::size_t i = 0; i < end_node; ++i) {
            const double* di = displacement(i);
            double row = 0.0;
            for (std::size_t j = std::max(i + 1, first_node); j < nodes.time.size(); ++j) {
                const double* dj = displacement(j);
                double r2_old = 0.0, r2_new = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    const double d = nodes.at(j)[c] - nodes.at(i)[c];
                    const double dn = d + dj[c] - di[c];
                    r2_old += d * d;
                    r2_new += dn * dn;
                }
                const double t = nodes.time[j] - nodes.time[i];
                row += nodes.weight[j] * (kernel(r2_new, t) - kernel(r2_old, t));
            }
            sum += 2.0 * nodes.weight[i] * row;
        }
        return sum.value();
    });

    // Ordered cell pairs (k, l) with min(k,l) < last and max(k,l) >= first.
    const std::size_t m = changed.size();
    const std::size_t before = changed.first, after = n - changed.last;
    out.cells_touched = n * n - before * before - after * after;
    (void)m;
    return out;
}

namespace {

/// Fine nodes over the whole window with their cell index and offset.
struct WindowNodes {
    NodeSet nodes;
    std::vector<std::size_t> cell;
    std::vector<double> theta;
};

WindowNodes window_nodes(const EnergyContext& ctx, const IncrementPath& path) {
    const CellRange all[] = {{0, path.n_steps()}};
    WindowNodes w{build_nodes(path, ctx.rule(), all, false), {}, {}};
    const NodeOffsets off = offsets_for(ctx.rule());
    for (std::size_t i = 0; i < w.nodes.time.size(); ++i) {
        w.cell.push_back(i / off.count);
        w.theta.push_back(off.theta[i % off.count]);
    }
    return w;
}

} // namespace

std::vector<double> energy_gradient(const EnergyContext& ctx, const IncrementPath& path) {
    require_path_on_context(ctx, path);
    const Potential& pot = ctx.potential();
    const std::size_t n = path.n_steps(), dim = path.dim();
    const WindowNodes w = window_nodes(ctx, path);
    const NodeSet& nodes = w.nodes;
    const std::size_t count = nodes.time.size();

    // H = sum_p w_p^2 W(0,0) + 2 sum_{p<q} w_p w_q W(P_q - P_p, t_q - t_p) and
    // d(P_q - P_p)/dxi_k is 1 strictly between the cells, theta_q at the
    // cell of q and 1 - theta_p at the cell of p.
    std::vector<double> grad(n * dim, 0.0);
    std::vector<double> span_sum(n * n * dim, 0.0); // pairs by (cell p, cell q)
    std::vector<double> g(dim);
    for (std::size_t p = 0; p < count; ++p)
        for (std::size_t q = p + 1; q < count; ++q) {
            const double r2 = dist2(nodes.at(p), nodes.at(q), dim);
            const double w1 = pot.r2_derivs(r2, nodes.time[q] - nodes.time[p]).w1;
            const double f = 4.0 * nodes.weight[p] * nodes.weight[q] * w1;
            for (std::size_t c = 0; c < dim; ++c) g[c] = f * (nodes.at(q)[c] - nodes.at(p)[c]);
            const std::size_t kp = w.cell[p], kq = w.cell[q];
            if (kp == kq) {
                for (std::size_t c = 0; c < dim; ++c) grad[kp * dim + c] += (w.theta[q] - w.theta[p]) * g[c];
                continue;
            }
            for (std::size_t c = 0; c < dim; ++c) {
                grad[kp * dim + c] += (1.0 - w.theta[p]) * g[c];
                grad[kq * dim + c] += w.theta[q] * g[c];
                span_sum[(kp * n + kq) * dim + c] += g[c];
            }
        }
    // Cells strictly inside the span: sum over a < k < b of span_sum[a][b].
    std::vector<double> suffix(dim);
    for (std::size_t a = 0; a < n; ++a) {
        std::fill(suffix.begin(), suffix.end(), 0.0);
        for (std::size_t b = n; b-- > a + 1;) {
            // suffix = sum_{b' > b} span_sum[a][b'] applies to k = b.
            for (std::size_t c = 0; c < dim; ++c) grad[b * dim + c] += suffix[c];
            for (std::size_t c = 0; c < dim; ++c) suffix[c] += span_sum[(a * n + b) * dim + c];
        }
    }
    return grad;
}

std::vector<std::vector<double>> block_cross_hessian(const EnergyContext& ctx,
                                                     const IncrementPath& path,
                                                     std::span<const CellRange> blocks,
                                                     std::span<const double> direction,
                                                     std::size_t max_lag) {
    require_path_on_context(ctx, path);
    const std::size_t n = path.n_steps(), dim = path.dim();
    if (direction.size() != dim) throw ArgumentError("block_cross_hessian: direction has wrong size");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].size() == 0 || blocks[i].last > n)
            throw ArgumentError("block_cross_hessian: block outside the window");
        if (i > 0 && blocks[i].first < blocks[i - 1].last)
            throw ArgumentError("block_cross_hessian: blocks must be ordered and disjoint");
    }
    const Potential& pot = ctx.potential();
    const WindowNodes w = window_nodes(ctx, path);
    const NodeSet& nodes = w.nodes;
    const std::size_t count = nodes.time.size();
    double v2 = 0.0;
    for (double v : direction) v2 += v * v;

    // h[p][q] = 2 w_p w_q v^T Hess W v for p < q.
    std::vector<double> h(count * count, 0.0);
    for (std::size_t p = 0; p < count; ++p)
        for (std::size_t q = p + 1; q < count; ++q) {
            double r2 = 0.0, vx = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = nodes.at(q)[c] - nodes.at(p)[c];
                r2 += d * d;
                vx += direction[c] * d;
            }
            const auto d = pot.r2_derivs(r2, nodes.time[q] - nodes.time[p]);
            h[p * count + q] =
                2.0 * nodes.weight[p] * nodes.weight[q] * (2.0 * d.w1 * v2 + 4.0 * d.w2 * vx * vx);
        }
    // suffix[p][c] = sum_{q > p, cell(q) >= c} h[p][q]
    std::vector<double> suffix(count * (n + 1), 0.0);
    for (std::size_t p = 0; p < count; ++p) {
        double* row = suffix.data() + p * (n + 1);
        for (std::size_t q = p + 1; q < count; ++q) row[w.cell[q]] += h[p * count + q];
        for (std::size_t c = n; c-- > 0;) row[c] += row[c + 1];
    }

    const std::size_t nb = blocks.size();
    // reach[p][j] = sum_{q : cell(q) >= first_j} o_j(q) h[p][q] for nodes p before block j,
    // with o_j(q) the number of block-j cells the span (p, q) crosses.
    std::vector<double> reach(count * nb, 0.0);
    std::vector<std::size_t> first_node(n + 1, count);
    for (std::size_t p = count; p-- > 0;) first_node[w.cell[p]] = p;
    for (std::size_t j = 0; j < nb; ++j) {
        const CellRange b = blocks[j];
        const double m = static_cast<double>(b.size());
        for (std::size_t p = 0; p < first_node[b.first]; ++p) {
            double s = m * suffix[p * (n + 1) + b.last];
            for (std::size_t q = first_node[b.first]; q < count && w.cell[q] < b.last; ++q)
                s += (static_cast<double>(w.cell[q] - b.first) + w.theta[q]) * h[p * count + q];
            reach[p * nb + j] = s;
        }
    }

    std::vector<std::vector<double>> out(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        const CellRange a = blocks[i];
        const double m = static_cast<double>(a.size());
        for (std::size_t lag = 1; lag <= max_lag && i + lag < nb; ++lag) {
            const std::size_t j = i + lag;
            CompensatedSum s;
            for (std::size_t p = 0; p < first_node[a.first]; ++p) s += m * reach[p * nb + j];
            for (std::size_t p = first_node[a.first]; p < count && w.cell[p] < a.last; ++p)
                s += (static_cast<double>(a.last - 1 - w.cell[p]) + 1.0 - w.theta[p]) *
                     reach[p * nb + j];
            out[i].push_back(s.value());
        }
    }
    return out;
}

void write_energy_csv(std::ostream& out, std::span<const EnergyRow> rows) {
    out << "lo,hi,value,quad_error,tail_error\n";
    for (const EnergyRow& row : rows)
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", row.interval.lo,
                           row.interval.hi, row.energy.value, row.energy.quad_error,
                           row.energy.tail_error);
}

} // namespace pathgibbs
