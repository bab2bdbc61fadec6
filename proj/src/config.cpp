#include "pathgibbs/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace pathgibbs {

SpecError::SpecError(const std::string& source, std::size_t line, const std::string& message)
    : ConfigError(line == 0 ? fmt::format("{}: {}", source, message)
                            : fmt::format("{}:{}: {}", source, line, message)),
      line_(line) {}

bool AnalysisSpec::wants(const std::string& estimator) const {
    return std::find(estimators.begin(), estimators.end(), estimator) != estimators.end();
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"potential",
         {"kind", "scale", "exponent", "table", "quadrature", "dispersion", "mass", "form",
          "width", "shift", "cutoff", "panels", "tolerance"}},
        {"grid", {"T", "dt", "d"}},
        {"sampler",
         {"lambda", "seeds", "sweeps", "rho", "block", "thin", "burn_in", "audit_every", "initial"}},
        {"analysis",
         {"conditions", "estimators", "condition_tol", "diffusion_a", "diffusion_b",
          "block_length", "direction", "n_max", "covariance_method", "epsilons", "mixing_n_max",
          "probe_slope", "sigma_sweeps"}},
        {"output", {"dir"}},
    };
    return keys;
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Key lookup and typed conversion with line-numbered errors.
class Reader {
public:
    Reader(std::string source, std::map<std::string, Entry> entries, std::set<std::string> sections)
        : source_(std::move(source)), entries_(std::move(entries)), sections_(std::move(sections)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        const auto it = entries_.find(key);
        throw SpecError(source_, it == entries_.end() ? 0 : it->second.line, message);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    bool has_section(const std::string& s) const { return sections_.count(s) != 0; }
    const std::string& raw(const std::string& key) const { return entries_.at(key).value; }

    double number(const std::string& key, double fallback) const {
        return has(key) ? to_number(key, raw(key)) : fallback;
    }
    std::size_t count(const std::string& key, std::size_t fallback) const {
        return has(key) ? to_count(key, raw(key)) : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? raw(key) : fallback;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        std::vector<double> out;
        for (const std::string& item : split_list(raw(key))) out.push_back(to_number(key, item));
        return out;
    }
    std::vector<std::string> words(const std::string& key) const {
        return has(key) ? split_list(raw(key)) : std::vector<std::string>{};
    }

    double to_number(const std::string& key, const std::string& s) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        fail(key, fmt::format("{}: '{}' is not a number", key, s));
    }
    std::size_t to_count(const std::string& key, const std::string& s) const {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            fail(key, fmt::format("{}: '{}' is not a non-negative integer", key, s));
        try {
            return static_cast<std::size_t>(std::stoull(s));
        } catch (const std::exception&) {
            fail(key, fmt::format("{}: '{}' is out of range", key, s));
        }
    }

private:
    std::string source_;
    std::map<std::string, Entry> entries_;
    std::set<std::string> sections_;
};

Reader tokenize(const std::string& text, const std::string& source) {
    std::map<std::string, Entry> entries;
    std::set<std::string> sections;
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw SpecError(source, number, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_keys().count(section))
                throw SpecError(source, number, fmt::format("unknown section [{}]", section));
            if (!sections.insert(section).second)
                throw SpecError(source, number, fmt::format("section [{}] appears twice", section));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SpecError(source, number, fmt::format("expected 'key = value', got '{}'", line));
        if (section.empty())
            throw SpecError(source, number, "key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known_keys().at(section).count(key))
            throw SpecError(source, number, fmt::format("unknown key '{}' in [{}]", key, section));
        if (value.empty())
            throw SpecError(source, number, fmt::format("{}.{} has an empty value", section, key));
        const std::string full = section + "." + key;
        if (entries.count(full))
            throw SpecError(source, number,
                            fmt::format("duplicate key {} (first set on line {})", full,
                                        entries.at(full).line));
        entries[full] = {value, number};
    }
    return Reader(source, std::move(entries), std::move(sections));
}

void read_potential(const Reader& r, ExperimentSpec& spec) {
    PotentialSpec& p = spec.potential;
    p.kind = r.text("potential.kind", p.kind);
    if (p.kind != "nelson" && p.kind != "powerlaw" && p.kind != "spectral" && p.kind != "table")
        r.fail("potential.kind",
               fmt::format("unknown potential kind '{}' (nelson, powerlaw, spectral, table)", p.kind));
    p.scale = r.number("potential.scale", p.scale);
    p.exponent = r.number("potential.exponent", p.exponent);
    if (p.kind == "powerlaw") {
        if (!(p.exponent > 0.0))
            r.fail("potential.exponent", "potential.exponent must be > 0 for powerlaw");
        if (!std::isfinite(p.scale)) r.fail("potential.scale", "potential.scale must be finite");
    }
    if (p.kind == "table") {
        if (!r.has("potential.table"))
            r.fail("potential.kind", "potential kind 'table' needs potential.table = FILE");
        p.table_file = r.raw("potential.table");
    }
    const std::string quad = r.text("potential.quadrature", "midpoint");
    if (quad == "midpoint")
        p.rule = QuadRule::midpoint;
    else if (quad == "gauss2")
        p.rule = QuadRule::gauss2;
    else
        r.fail("potential.quadrature",
               fmt::format("unknown quadrature '{}' (midpoint, gauss2)", quad));

    SpectralData& s = p.spectral;
    const std::string disp = r.text("potential.dispersion", "constant");
    if (disp == "constant")
        s.dispersion = SpectralData::Dispersion::constant;
    else if (disp == "linear")
        s.dispersion = SpectralData::Dispersion::linear;
    else if (disp == "massive")
        s.dispersion = SpectralData::Dispersion::massive;
    else
        r.fail("potential.dispersion", fmt::format("unknown dispersion '{}'", disp));
    const std::string form = r.text("potential.form", "gaussian");
    if (form == "indicator")
        s.form = SpectralData::FormFactor::indicator;
    else if (form == "gaussian")
        s.form = SpectralData::FormFactor::gaussian;
    else if (form == "shifted_gaussian")
        s.form = SpectralData::FormFactor::shifted_gaussian;
    else
        r.fail("potential.form", fmt::format("unknown form factor '{}'", form));
    s.mass = r.number("potential.mass", s.mass);
    s.width = r.number("potential.width", s.width);
    s.shift = r.number("potential.shift", s.shift);
    s.cutoff = r.number("potential.cutoff", s.cutoff);
    s.panels = r.count("potential.panels", s.panels);
    s.tolerance = r.number("potential.tolerance", s.tolerance);
    if (p.kind == "spectral") {
        if (!(s.mass > 0.0)) r.fail("potential.mass", "potential.mass must be > 0");
        if (!(s.width > 0.0)) r.fail("potential.width", "potential.width must be > 0");
        if (!(s.cutoff > 0.0)) r.fail("potential.cutoff", "potential.cutoff must be > 0");
        if (s.panels < 1) r.fail("potential.panels", "potential.panels must be >= 1");
    }
}

void read_grid(const Reader& r, ExperimentSpec& spec) {
    if (!r.has_section("grid")) throw SpecError(spec.source, 0, "missing section [grid]");
    GridSpec& g = spec.grid;
    g.horizon = r.number("grid.T", g.horizon);
    g.dt = r.number("grid.dt", g.dt);
    g.dim = r.count("grid.d", g.dim);
    if (!(g.horizon > 0.0) || !std::isfinite(g.horizon)) r.fail("grid.T", "grid.T must be > 0");
    if (!(g.dt > 0.0) || !std::isfinite(g.dt)) r.fail("grid.dt", "grid.dt must be > 0");
    try {
        Grid(g.horizon, g.dt);
    } catch (const ConfigError& e) {
        r.fail("grid.dt", fmt::format("grid.dt = {} does not fit T = {}: {}", g.dt, g.horizon,
                                      e.what()));
    }
    if (g.dim < 1) r.fail("grid.d", "grid.d must be >= 1");
    if (spec.potential.kind == "spectral" && g.dim > 3)
        r.fail("grid.d", "spectral potentials support d <= 3");
}

void read_sampler(const Reader& r, ExperimentSpec& spec) {
    SamplerSpec& s = spec.sampler;
    s.lambdas = r.numbers("sampler.lambda", s.lambdas);
    if (s.lambdas.empty()) r.fail("sampler.lambda", "sampler.lambda list is empty");
    for (double& l : s.lambdas) {
        if (!std::isfinite(l)) r.fail("sampler.lambda", "sampler.lambda values must be finite");
        if (l == 0.0) l = 0.0; // folds -0 into +0 so both name the same task
    }
    if (std::set<double>(s.lambdas.begin(), s.lambdas.end()).size() != s.lambdas.size())
        r.fail("sampler.lambda", "sampler.lambda contains a repeated value");
    if (r.has("sampler.seeds")) {
        s.seeds.clear();
        for (const std::string& w : r.words("sampler.seeds"))
            s.seeds.push_back(r.to_count("sampler.seeds", w));
        if (s.seeds.empty()) r.fail("sampler.seeds", "sampler.seeds list is empty");
        if (std::set<std::uint64_t>(s.seeds.begin(), s.seeds.end()).size() != s.seeds.size())
            r.fail("sampler.seeds", "sampler.seeds contains a repeated seed");
    }
    s.sweeps = r.count("sampler.sweeps", s.sweeps);
    s.rho = r.number("sampler.rho", s.rho);
    s.block = r.count("sampler.block", s.block);
    s.thin = r.count("sampler.thin", s.thin);
    s.audit_every = r.count("sampler.audit_every", s.audit_every);
    if (r.has("sampler.burn_in") && r.raw("sampler.burn_in") != "auto")
        s.burn_in = r.count("sampler.burn_in", 0);
    s.initial = r.text("sampler.initial", s.initial);
    if (s.initial != "wiener" && s.initial != "zero")
        r.fail("sampler.initial", fmt::format("unknown initial path '{}' (wiener, zero)", s.initial));

    // The sampler's own checks, reported at the offending key.
    const Grid grid(spec.grid.horizon, spec.grid.dt);
    const SamplerConfig c = make_sampler_config(spec, s.lambdas.front(), s.seeds.front());
    if (!(c.rho > 0.0 && c.rho < 1.0)) r.fail("sampler.rho", "sampler.rho must lie in (0, 1)");
    if (c.block < 1 || c.block > grid.n_steps())
        r.fail("sampler.block", fmt::format("sampler.block must lie in [1, {}] steps", grid.n_steps()));
    if (c.n_sweeps < 1) r.fail("sampler.sweeps", "sampler.sweeps must be >= 1");
    if (c.burn_in && *c.burn_in >= c.n_sweeps)
        r.fail("sampler.burn_in", "sampler.burn_in must be smaller than sampler.sweeps");
    if (c.thin < 1) r.fail("sampler.thin", "sampler.thin must be >= 1");
    if (c.audit_every < 1) r.fail("sampler.audit_every", "sampler.audit_every must be >= 1");
    c.validate(grid);
}

void read_analysis(const Reader& r, ExperimentSpec& spec) {
    AnalysisSpec& a = spec.analysis;
    static const std::set<std::string> conditions = {"h1", "h2", "h3", "h3b", "h4"};
    static const std::set<std::string> estimators = {"diffusion", "certificate", "covariance",
                                                     "dobrushin", "clt",         "mixing"};
    a.conditions = r.words("analysis.conditions");
    for (const std::string& c : a.conditions)
        if (!conditions.count(c))
            r.fail("analysis.conditions", fmt::format("unknown condition '{}'", c));
    a.estimators = r.words("analysis.estimators");
    for (const std::string& e : a.estimators)
        if (!estimators.count(e))
            r.fail("analysis.estimators", fmt::format("unknown estimator '{}'", e));
    a.condition_tol = r.number("analysis.condition_tol", a.condition_tol);
    if (!(a.condition_tol > 0.0)) r.fail("analysis.condition_tol", "analysis.condition_tol must be > 0");

    const Grid grid(spec.grid.horizon, spec.grid.dt);
    const Interval bulk = bulk_window(grid);
    a.diffusion_a = r.number("analysis.diffusion_a", a.diffusion_a);
    a.diffusion_b = r.number("analysis.diffusion_b", a.diffusion_b);
    if (a.wants("diffusion") || a.wants("certificate")) {
        if (!(a.diffusion_a < a.diffusion_b))
            r.fail("analysis.diffusion_b", "analysis.diffusion_a must be < analysis.diffusion_b");
        const std::pair<const char*, double> ends[] = {{"analysis.diffusion_a", a.diffusion_a},
                                                       {"analysis.diffusion_b", a.diffusion_b}};
        for (const auto& [key, t] : ends) {
            if (!grid.is_node(t) || t < bulk.lo - 1e-9 || t > bulk.hi + 1e-9)
                r.fail(key, fmt::format("{} = {} must be a grid node in the bulk [{}, {}]", key, t,
                                        bulk.lo, bulk.hi));
        }
    }

    a.block_length = r.number("analysis.block_length", a.block_length);
    a.n_max = r.count("analysis.n_max", a.n_max);
    a.mixing_n_max = r.count("analysis.mixing_n_max", a.mixing_n_max);
    if (a.wants("covariance") || a.wants("dobrushin") || a.wants("mixing")) {
        const double steps = a.block_length / grid.dt();
        if (!(a.block_length > 0.0) || std::fabs(steps - std::round(steps)) > 1e-9)
            r.fail("analysis.block_length",
                   fmt::format("analysis.block_length = {} must be a positive multiple of dt = {}",
                               a.block_length, grid.dt()));
        const auto blocks = static_cast<std::size_t>(
            std::floor(bulk.hi / a.block_length + 1e-9) - std::ceil(bulk.lo / a.block_length - 1e-9));
        const std::size_t need =
            std::max(a.wants("covariance") ? a.n_max : 0, a.wants("mixing") ? a.mixing_n_max : 0);
        if (blocks < need + 1)
            r.fail(a.wants("covariance") ? "analysis.n_max" : "analysis.mixing_n_max",
                   fmt::format("lag {} needs {} bulk blocks of length {}, only {} fit", need,
                               need + 1, a.block_length, blocks));
    }
    a.direction = r.numbers("analysis.direction", {});
    if (!a.direction.empty()) {
        if (a.direction.size() != spec.grid.dim)
            r.fail("analysis.direction",
                   fmt::format("analysis.direction has {} components, grid.d is {}",
                               a.direction.size(), spec.grid.dim));
        double n = 0.0;
        for (double v : a.direction) n += v * v;
        if (!(n > 0.0)) r.fail("analysis.direction", "analysis.direction must be non-zero");
        for (double& v : a.direction) v /= std::sqrt(n);
    }
    a.covariance_method = r.text("analysis.covariance_method", a.covariance_method);
    if (a.covariance_method != "direct" && a.covariance_method != "score" &&
        a.covariance_method != "both")
        r.fail("analysis.covariance_method",
               fmt::format("unknown covariance method '{}' (direct, score, both)",
                           a.covariance_method));
    a.epsilons = r.numbers("analysis.epsilons", a.epsilons);
    if (a.wants("clt")) {
        if (a.epsilons.empty()) r.fail("analysis.epsilons", "analysis.epsilons list is empty");
        for (double e : a.epsilons) {
            if (!(e > 0.0 && e <= 1.0))
                r.fail("analysis.epsilons", fmt::format("epsilon {} must lie in (0, 1]", e));
            if (0.5 / e > bulk.hi + 1e-9)
                r.fail("analysis.epsilons",
                       fmt::format("epsilon {} needs a window of length {} but the bulk is [{}, {}]",
                                   e, 1.0 / e, bulk.lo, bulk.hi));
        }
    }
    a.probe_slope = r.number("analysis.probe_slope", a.probe_slope);
    a.sigma_sweeps = r.count("analysis.sigma_sweeps", a.sigma_sweeps);
    if (a.wants("dobrushin") && a.sigma_sweeps < 10)
        r.fail("analysis.sigma_sweeps", "analysis.sigma_sweeps must be >= 10");
}

std::string join_numbers(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : ", ") + fmt::format("{:.17g}", x);
    return out;
}

} // namespace

ExperimentSpec parse_spec(const std::string& text, const std::string& source) {
    const Reader r = tokenize(text, source);
    ExperimentSpec spec;
    spec.source = source;
    spec.text = text;
    read_potential(r, spec);
    read_grid(r, spec);
    read_sampler(r, spec);
    read_analysis(r, spec);
    spec.output_dir = r.text("output.dir", "");
    return spec;
}

ExperimentSpec load_spec(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw SpecError(file, 0, "cannot open spec file");
    std::stringstream buf;
    buf << in.rdbuf();
    ExperimentSpec spec = parse_spec(buf.str(), file);
    const std::filesystem::path table = spec.potential.table_file;
    if (!table.empty() && table.is_relative())
        spec.potential.table_file =
            (std::filesystem::path(file).parent_path() / table).lexically_normal().string();
    return spec;
}

std::string canonical_text(const ExperimentSpec& spec) {
    const PotentialSpec& p = spec.potential;
    const SamplerSpec& s = spec.sampler;
    const AnalysisSpec& a = spec.analysis;
    std::string out;
    auto line = [&](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };
    auto num = [](double v) { return fmt::format("{:.17g}", v); };
    line("potential.kind", p.kind);
    line("potential.scale", num(p.scale));
    line("potential.exponent", num(p.exponent));
    line("potential.table", p.table_file);
    line("potential.quadrature", p.rule == QuadRule::gauss2 ? "gauss2" : "midpoint");
    line("potential.dispersion", std::to_string(static_cast<int>(p.spectral.dispersion)));
    line("potential.mass", num(p.spectral.mass));
    line("potential.form", std::to_string(static_cast<int>(p.spectral.form)));
    line("potential.width", num(p.spectral.width));
    line("potential.shift", num(p.spectral.shift));
    line("potential.cutoff", num(p.spectral.cutoff));
    line("potential.panels", std::to_string(p.spectral.panels));
    line("potential.tolerance", num(p.spectral.tolerance));
    line("grid.T", num(spec.grid.horizon));
    line("grid.dt", num(spec.grid.dt));
    line("grid.d", std::to_string(spec.grid.dim));
    line("sampler.lambda", join_numbers(s.lambdas));
    line("sampler.seeds", fmt::format("{}", fmt::join(s.seeds, ", ")));
    line("sampler.sweeps", std::to_string(s.sweeps));
    line("sampler.rho", num(s.rho));
    line("sampler.block", std::to_string(s.block));
    line("sampler.thin", std::to_string(s.thin));
    line("sampler.burn_in", s.burn_in ? std::to_string(*s.burn_in) : "auto");
    line("sampler.audit_every", std::to_string(s.audit_every));
    line("sampler.initial", s.initial);
    line("analysis.conditions", fmt::format("{}", fmt::join(a.conditions, ", ")));
    line("analysis.estimators", fmt::format("{}", fmt::join(a.estimators, ", ")));
    line("analysis.condition_tol", num(a.condition_tol));
    line("analysis.diffusion_a", num(a.diffusion_a));
    line("analysis.diffusion_b", num(a.diffusion_b));
    line("analysis.block_length", num(a.block_length));
    line("analysis.direction", join_numbers(a.direction));
    line("analysis.n_max", std::to_string(a.n_max));
    line("analysis.covariance_method", a.covariance_method);
    line("analysis.epsilons", join_numbers(a.epsilons));
    line("analysis.mixing_n_max", std::to_string(a.mixing_n_max));
    line("analysis.probe_slope", num(a.probe_slope));
    line("analysis.sigma_sweeps", std::to_string(a.sigma_sweeps));
    return out;
}

std::uint64_t spec_hash(const ExperimentSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text(spec)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Potential make_potential(const ExperimentSpec& spec) {
    const PotentialSpec& p = spec.potential;
    if (p.kind == "nelson") return Potential::nelson();
    if (p.kind == "powerlaw") return Potential::power_law(p.scale, p.exponent);
    if (p.kind == "spectral") return Potential::spectral(p.spectral, spec.grid.dim);
    return Potential::table(load_radial_table(p.table_file));
}

Grid make_grid(const ExperimentSpec& spec) { return Grid(spec.grid.horizon, spec.grid.dt); }

EnergyContext make_context(const ExperimentSpec& spec) {
    return EnergyContext(make_potential(spec), make_grid(spec), spec.potential.rule);
}

SamplerConfig make_sampler_config(const ExperimentSpec& spec, double lambda, std::uint64_t seed) {
    const SamplerSpec& s = spec.sampler;
    SamplerConfig c;
    c.lambda = lambda;
    c.rho = s.rho;
    c.block = s.block;
    c.n_sweeps = s.sweeps;
    c.burn_in = s.burn_in;
    c.thin = s.thin;
    c.seed = seed;
    c.audit_every = s.audit_every;
    return c;
}

} // namespace pathgibbs
