#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathgibbs/energy.hpp"
#include "pathgibbs/error.hpp"
#include "pathgibbs/potential.hpp"
#include "pathgibbs/sampler.hpp"

namespace pathgibbs {

/// A spec error located in the source text; line 0 means "whole file".
class SpecError : public ConfigError {
public:
    SpecError(const std::string& source, std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct PotentialSpec {
    std::string kind = "nelson"; ///< nelson | powerlaw | spectral | table
    double scale = -1.0;         ///< powerlaw c
    double exponent = 1.0;       ///< powerlaw p
    std::string table_file;      ///< table kind: CSV "r,t,w"
    SpectralData spectral;
    QuadRule rule = QuadRule::midpoint;
};

struct GridSpec {
    double horizon = 8.0; ///< window [-T, T]
    double dt = 0.25;
    std::size_t dim = 1;
};

struct SamplerSpec {
    std::vector<double> lambdas{0.0};
    std::vector<std::uint64_t> seeds{1};
    std::size_t sweeps = 1000;
    double rho = 0.8;
    std::size_t block = 8;
    std::size_t thin = 1;
    std::optional<std::size_t> burn_in; ///< unset: automatic
    std::size_t audit_every = 1000;
    std::string initial = "wiener";     ///< wiener | zero
};

struct AnalysisSpec {
    std::vector<std::string> conditions; ///< subset of h1 h2 h3 h3b h4
    std::vector<std::string> estimators; ///< diffusion certificate covariance dobrushin clt mixing
    double condition_tol = 0.1;
    double diffusion_a = -1.0, diffusion_b = 1.0;
    double block_length = 1.0;
    std::vector<double> direction; ///< unit vector; empty means e_1
    std::size_t n_max = 8;
    std::string covariance_method = "direct"; ///< direct | score | both
    std::vector<double> epsilons{0.25};
    std::size_t mixing_n_max = 4;
    double probe_slope = 4.0;
    std::size_t sigma_sweeps = 2000;

    bool empty() const noexcept { return conditions.empty() && estimators.empty(); }
    bool wants(const std::string& estimator) const;
};

struct ExperimentSpec {
    std::string source = "<spec>"; ///< file name used in messages
    std::string text;              ///< original text, stored in the manifest
    PotentialSpec potential;
    GridSpec grid;
    SamplerSpec sampler;
    AnalysisSpec analysis;
    std::string output_dir;        ///< empty when not given
};

/// Parses and validates the sectioned "key = value" format. Every value
/// is checked against the owning module's preconditions here, so a spec
/// that parses never fails validation later. Throws SpecError.
ExperimentSpec parse_spec(const std::string& text, const std::string& source = "<spec>");
ExperimentSpec load_spec(const std::string& file);

/// Every resolved value, defaults included, one "section.key = value" per
/// line in a fixed order.
std::string canonical_text(const ExperimentSpec& spec);
/// FNV-1a (64 bit) of the canonical text.
std::uint64_t spec_hash(const ExperimentSpec& spec);

Potential make_potential(const ExperimentSpec& spec);
Grid make_grid(const ExperimentSpec& spec);
EnergyContext make_context(const ExperimentSpec& spec);
SamplerConfig make_sampler_config(const ExperimentSpec& spec, double lambda, std::uint64_t seed);

} // namespace pathgibbs
