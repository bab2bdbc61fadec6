#include "pathgibbs/sampler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pathgibbs/error.hpp"
#include "pathgibbs/stats.hpp"

namespace pathgibbs {

void SamplerConfig::validate(const Grid& grid) const {
    if (!std::isfinite(lambda)) throw ConfigError("sampler: lambda must be finite");
    if (!(rho > 0.0 && rho < 1.0))
        throw ConfigError(fmt::format("sampler: rho must lie in (0, 1) (got {})", rho));
    if (block < 1) throw ConfigError("sampler: block must be >= 1 step");
    if (block > grid.n_steps())
        throw ConfigError(fmt::format("sampler: block of {} steps exceeds the {} grid steps", block,
                                      grid.n_steps()));
    if (n_sweeps < 1) throw ConfigError("sampler: sweeps must be >= 1");
    if (thin < 1) throw ConfigError("sampler: thin must be >= 1");
    if (burn_in && *burn_in >= n_sweeps)
        throw ConfigError(fmt::format("sampler: burn_in {} must be < sweeps {}", *burn_in, n_sweeps));
    if (audit_every < 1) throw ConfigError("sampler: audit interval must be >= 1");
    if (active) {
        const CellRange r = cells_of(grid, *active);
        if (r.size() == 0) throw ConfigError("sampler: active interval is empty");
    }
}

ChainState::ChainState(const EnergyContext& ctx, IncrementPath initial, std::uint64_t seed)
    : path(std::move(initial)), energy(window_energy(ctx, path).value), rng(seed) {}

CellRange random_block(CellRange range, std::size_t length, Rng& rng) {
    const long lo = static_cast<long>(range.first), hi = static_cast<long>(range.last);
    const long m = static_cast<long>(length);
    const long start = rng.uniform_int(lo - (m - 1), hi - 1);
    return {static_cast<std::size_t>(std::max(start, lo)),
            static_cast<std::size_t>(std::min(start + m, hi))};
}

Proposal propose_pcn(const ChainState& state, CellRange block, double rho, Rng& rng) {
    Proposal p;
    p.block = block;
    const auto old = state.path.steps(block);
    const double keep = std::sqrt(1.0 - rho * rho);
    const double sd = rho * std::sqrt(state.path.grid().dt());
    p.new_steps.resize(old.size());
    for (std::size_t i = 0; i < old.size(); ++i) p.new_steps[i] = keep * old[i] + sd * rng.normal();
    return p;
}

namespace {

CellRange active_cells(const Grid& grid, const SamplerConfig& config) {
    return config.active ? cells_of(grid, *config.active) : CellRange{0, grid.n_steps()};
}

} // namespace

bool metropolis_step(const EnergyContext& ctx, ChainState& state, const SamplerConfig& config) {
    const Grid& grid = state.path.grid();
    const CellRange block = random_block(active_cells(grid, config), config.block, state.rng);
    Proposal p = propose_pcn(state, block, config.rho, state.rng);
    ++state.proposed;

    const auto old = state.path.steps(block);
    const double delta = delta_energy(ctx, state.path, block, old, p.new_steps).value;
    if (!std::isfinite(delta))
        throw NumericError(fmt::format("sampler: non-finite delta H on cells [{}, {}) at "
                                       "proposal {} (cached H_T = {})",
                                       block.first, block.last, state.proposed, state.energy),
                           state.energy, delta);
    const double log_ratio = config.lambda == 0.0 ? 0.0 : -config.lambda * delta;
    // Draw the uniform unconditionally so the stream does not depend on the branch.
    const double u = state.rng.uniform();
    if (log_ratio >= 0.0 || u < std::exp(log_ratio)) {
        state.path.set_steps(block.first, p.new_steps);
        state.energy += delta;
        ++state.accepted;
        return true;
    }
    return false;
}

ChainResult run_chain(const EnergyContext& ctx, const SamplerConfig& config, std::size_t dim,
                      const std::optional<IncrementPath>& initial) {
    const Grid& grid = ctx.grid();
    config.validate(grid);
    Rng init_rng(derive_seed(config.seed, 0x1417));
    ChainState state(ctx, initial ? *initial : sample_wiener(grid, dim, init_rng), config.seed);
    if (state.path.dim() != dim || !(state.path.grid() == grid))
        throw ArgumentError("run_chain: initial path does not match the grid and dimension");

    ChainResult result;
    ChainDiagnostics& diag = result.diagnostics;
    if (config.lambda < 0.0)
        diag.warnings.push_back("lambda < 0: repulsive regime, tightness not covered beyond (H1)");

    const CellRange active = active_cells(grid, config);
    const std::size_t per_sweep = std::max<std::size_t>(1, active.size() / config.block);
    std::vector<IncrementPath> stored;
    std::vector<std::size_t> stored_sweeps;
    diag.energy_trace.reserve(config.n_sweeps);

    for (std::size_t sweep = 1; sweep <= config.n_sweeps; ++sweep) {
        for (std::size_t k = 0; k < per_sweep; ++k) metropolis_step(ctx, state, config);
        if (sweep % config.audit_every == 0) {
            const double fresh = window_energy(ctx, state.path).value;
            const double err = std::fabs(state.energy - fresh) / std::max(std::fabs(fresh), 1e-300);
            ++diag.audits;
            diag.max_audit_error = std::max(diag.max_audit_error, err);
            if (err > config.audit_tol && fresh != state.energy)
                diag.warnings.push_back(
                    fmt::format("energy cache drift {:.3g} at sweep {}", err, sweep));
            state.energy = fresh;
        }
        diag.energy_trace.push_back(state.energy);
        diag.acceptance_trace.push_back(static_cast<double>(state.accepted) /
                                        static_cast<double>(state.proposed));
        if (sweep % config.thin == 0) {
            stored.push_back(state.path);
            stored_sweeps.push_back(sweep);
        }
    }
    diag.acceptance_rate =
        static_cast<double>(state.accepted) / static_cast<double>(state.proposed);

    const std::size_t n = config.n_sweeps;
    if (config.burn_in) {
        diag.burn_in = *config.burn_in;
    } else {
        const std::size_t pilot_start = n / 5;
        const std::span<const double> pilot(diag.energy_trace.data() + pilot_start, n - pilot_start);
        const double tau = pilot.size() >= 4 ? iact(pilot).tau : 1.0;
        diag.burn_in = std::min(std::max(pilot_start, static_cast<std::size_t>(10.0 * tau)), n / 2);
    }
    const std::span<const double> kept(diag.energy_trace.data() + diag.burn_in, n - diag.burn_in);
    diag.iact = kept.size() >= 4 ? iact(kept).tau : 1.0;
    if (diag.iact > static_cast<double>(n) / 50.0) {
        diag.unconverged = true;
        diag.warnings.push_back(
            fmt::format("unconverged: iact {:.1f} exceeds sweeps/50 = {:.1f}", diag.iact, n / 50.0));
    }

    for (std::size_t i = 0; i < stored.size(); ++i)
        if (stored_sweeps[i] > diag.burn_in) {
            result.samples.push_back(std::move(stored[i]));
            result.sample_sweeps.push_back(stored_sweeps[i]);
        }
    return result;
}

Interval bulk_window(const Grid& grid) {
    const double half = std::floor(0.5 * grid.horizon() / grid.dt() + 1e-9) * grid.dt();
    return {-half, half};
}

const std::array<std::string, kPanelSize>& panel_names() {
    static const std::array<std::string, kPanelSize> names = {
        "bulk_increment_1", "bulk_increment_sq", "right_unit_sq", "left_unit_sq",
        "adjacent_product", "energy_density",    "range_sq",      "step_sq",
        "right_tail_indicator", "left_half_sq"};
    return names;
}

std::array<double, kPanelSize> panel_observables(const EnergyContext& ctx,
                                                 const IncrementPath& path) {
    const Grid& grid = path.grid();
    const Interval bulk = bulk_window(grid);
    const double h = bulk.hi;
    const double u = std::min(1.0, std::floor(0.5 * h / grid.dt() + 1e-9) * grid.dt());
    if (!(u > 0.0) || !grid.is_node(0.0))
        throw ArgumentError("panel: the bulk window is too small for this grid");
    const std::size_t dim = path.dim();
    const auto d = static_cast<double>(dim);
    const std::vector<double> pos = path.node_positions();
    auto node = [&](double t) { return grid.node_index(t); };
    auto inc = [&](std::size_t i, std::size_t j, std::size_t c) {
        return pos[j * dim + c] - pos[i * dim + c];
    };
    auto sq = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += inc(i, j, c) * inc(i, j, c);
        return s;
    };
    const std::size_t lo = node(bulk.lo), hi = node(bulk.hi), zero = node(0.0);
    const std::size_t left = node(-u), right = node(u);

    double dot = 0.0;
    for (std::size_t c = 0; c < dim; ++c) dot += inc(left, zero, c) * inc(zero, right, c);
    double range = 0.0;
    for (std::size_t i = left; i <= right; ++i)
        for (std::size_t j = i + 1; j <= right; ++j) range = std::max(range, sq(i, j));
    double steps = 0.0;
    for (std::size_t k = lo; k < hi; ++k) steps += sq(k, k + 1);

    return {inc(lo, hi, 0),
            sq(lo, hi) / (2.0 * h * d),
            sq(zero, right) / (u * d),
            sq(left, zero) / (u * d),
            dot / u,
            window_energy(ctx, path).value / grid.length(),
            range / (2.0 * u),
            steps / (static_cast<double>(hi - lo) * grid.dt() * d),
            std::fabs(inc(zero, right, 0)) > std::sqrt(u) ? 1.0 : 0.0,
            sq(lo, zero) / (h * d)};
}

TwoChainReport two_chain_agreement(const EnergyContext& ctx, const SamplerConfig& config,
                                   const IncrementPath& init_a, const IncrementPath& init_b,
                                   bool same_seed) {
    SamplerConfig config_b = config;
    if (!same_seed) config_b.seed = derive_seed(config.seed, 1);
    const ChainResult a = run_chain(ctx, config, init_a.dim(), init_a);
    const ChainResult b = run_chain(ctx, config_b, init_b.dim(), init_b);
    if (a.samples.size() < 2 || b.samples.size() < 2)
        throw ArgumentError("two-chain agreement: too few post-burn-in samples");

    auto series = [&](const ChainResult& r) {
        std::array<std::vector<double>, kPanelSize> out;
        for (const IncrementPath& p : r.samples) {
            const auto obs = panel_observables(ctx, p);
            for (std::size_t k = 0; k < kPanelSize; ++k) out[k].push_back(obs[k]);
        }
        return out;
    };
    const auto sa = series(a), sb = series(b);

    TwoChainReport report;
    for (std::size_t k = 0; k < kPanelSize; ++k) {
        const MeanEstimate ea = estimate_mean(sa[k]), eb = estimate_mean(sb[k]);
        ObservableComparison cmp{panel_names()[k], ea.mean, ea.standard_error, eb.mean,
                                 eb.standard_error, 0.0};
        const double se = std::hypot(ea.standard_error, eb.standard_error);
        const double diff = ea.mean - eb.mean;
        cmp.z = diff == 0.0 ? 0.0 : diff / se;
        report.max_abs_z = std::max(report.max_abs_z, std::fabs(cmp.z));
        report.panel.push_back(cmp);
    }
    report.diagnostics_a = a.diagnostics;
    report.diagnostics_b = b.diagnostics;
    return report;
}

} // namespace pathgibbs
