#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathgibbs/energy.hpp"
#include "pathgibbs/path.hpp"
#include "pathgibbs/rng.hpp"

namespace pathgibbs {

struct SamplerConfig {
    double lambda = 0.0;
    double rho = 0.8;         ///< pCN mixing parameter in (0, 1)
    std::size_t block = 8;    ///< proposal block length in steps
    std::size_t n_sweeps = 1000;
    /// Sweeps discarded; when unset, max(20% of sweeps, 10 * iact) capped at half.
    std::optional<std::size_t> burn_in;
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    /// Only steps inside this interval move; the exterior stays frozen
    /// (sampling the conditioned kernel instead of the free measure).
    std::optional<Interval> active;
    std::size_t audit_every = 1000; ///< sweeps between energy-cache audits
    double audit_tol = 1e-8;

    /// ConfigError unless rho in (0,1), block >= 1, thin >= 1,
    /// burn_in < n_sweeps and lambda finite.
    void validate(const Grid& grid) const;
};

struct ChainState {
    IncrementPath path;
    double energy = 0.0; ///< cached H_T(path)
    std::size_t accepted = 0;
    std::size_t proposed = 0;
    Rng rng;

    ChainState(const EnergyContext& ctx, IncrementPath initial, std::uint64_t seed);
};

struct Proposal {
    CellRange block;
    std::vector<double> new_steps;
    /// pCN leaves the Wiener reference invariant, so the acceptance ratio
    /// needs only lambda * delta H.
    bool reference_symmetric = true;
};

/// new = sqrt(1 - rho^2) old + rho N(0, dt), on the block's steps.
Proposal propose_pcn(const ChainState& state, CellRange block, double rho, Rng& rng);

/// Random block of `length` cells: start uniform in [lo - (length-1), hi - 1]
/// and clipped to [lo, hi), so every cell is covered equally often and the
/// block choice does not depend on the state.
CellRange random_block(CellRange range, std::size_t length, Rng& rng);

/// One pCN proposal with a Metropolis accept/reject. Returns true on accept.
/// NumericError on a non-finite delta H, with the block and both energies.
bool metropolis_step(const EnergyContext& ctx, ChainState& state, const SamplerConfig& config);

struct ChainDiagnostics {
    double acceptance_rate = 0.0;
    double iact = 1.0;                ///< of H_T per sweep, after burn-in
    std::vector<double> energy_trace; ///< H_T after each sweep
    std::vector<double> acceptance_trace; ///< cumulative acceptance after each sweep
    std::size_t burn_in = 0;
    std::size_t audits = 0;
    double max_audit_error = 0.0; ///< worst relative cache drift seen
    bool unconverged = false;     ///< iact > n_sweeps / 50
    std::vector<std::string> warnings;
};

struct ChainResult {
    std::vector<IncrementPath> samples; ///< thinned, post burn-in
    std::vector<std::size_t> sample_sweeps;
    ChainDiagnostics diagnostics;
};

/// Runs one chain. Without an initial path the chain starts from a Wiener
/// draw of its own stream. Deterministic given config.seed.
ChainResult run_chain(const EnergyContext& ctx, const SamplerConfig& config, std::size_t dim,
                      const std::optional<IncrementPath>& initial = std::nullopt);

/// Central half-window [-T/2, T/2], rounded inwards to grid nodes.
Interval bulk_window(const Grid& grid);

/// Ten bulk observables compared between chains.
inline constexpr std::size_t kPanelSize = 10;
const std::array<std::string, kPanelSize>& panel_names();
std::array<double, kPanelSize> panel_observables(const EnergyContext& ctx,
                                                 const IncrementPath& path);

struct ObservableComparison {
    std::string name;
    double mean_a = 0.0, se_a = 0.0;
    double mean_b = 0.0, se_b = 0.0;
    double z = 0.0; ///< (mean_a - mean_b) / sqrt(se_a^2 + se_b^2)
};

struct TwoChainReport {
    std::vector<ObservableComparison> panel;
    double max_abs_z = 0.0;
    ChainDiagnostics diagnostics_a;
    ChainDiagnostics diagnostics_b;
};

/// Runs two chains from different initial paths and compares the panel.
/// Chain b uses derive_seed(seed, 1) unless `same_seed`.
TwoChainReport two_chain_agreement(const EnergyContext& ctx, const SamplerConfig& config,
                                   const IncrementPath& init_a, const IncrementPath& init_b,
                                   bool same_seed = false);

} // namespace pathgibbs
