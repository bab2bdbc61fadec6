#include "pathgibbs/runner.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/erf.hpp>
#include <fmt/format.h>

#include "pathgibbs/conditions.hpp"
#include "pathgibbs/estimators.hpp"
#include "pathgibbs/sampler.hpp"
#include "pathgibbs/stats.hpp"

namespace pathgibbs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kIncomplete = "INCOMPLETE";

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string read_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw MissingInputError(fmt::format("cannot read {}", file.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

ConditionReport condition_report(const ExperimentSpec& spec) {
    const Potential pot = make_potential(spec);
    const IncrementPath probe =
        sample_wiener(make_grid(spec), spec.grid.dim, derive_seed(spec.sampler.seeds.front(), 0xc0d));
    return check_conditions(pot, std::span(&probe, 1), spec.analysis.condition_tol);
}

Verdict verdict_of(const ConditionReport& r, const std::string& name) {
    if (name == "h1") return r.h1.verdict;
    if (name == "h2") return r.h2.verdict;
    if (name == "h3") return r.h3.verdict;
    if (name == "h3b") return r.h3b.verdict;
    return r.h4.verdict;
}

bool requested_hold(const ExperimentSpec& spec, const ConditionReport& report, std::ostream& log) {
    bool all = true;
    for (const std::string& c : spec.analysis.conditions) {
        const Verdict v = verdict_of(report, c);
        log << fmt::format("{}: {}\n", c, to_string(v));
        all = all && v == Verdict::holds;
    }
    return all;
}

/// Renames a complete task directory into place. A crash between the two
/// renames leaves <name>.old, which the next run restores.
void publish(const fs::path& partial, const fs::path& final_dir) {
    const fs::path old = final_dir.string() + ".old";
    fs::remove_all(old);
    if (fs::exists(final_dir)) fs::rename(final_dir, old);
    fs::rename(partial, final_dir);
    fs::remove_all(old);
}

void recover(const fs::path& final_dir) {
    const fs::path old = final_dir.string() + ".old";
    if (!fs::exists(final_dir) && fs::exists(old)) fs::rename(old, final_dir);
}

struct TaskOutcome {
    std::string status = "pending";
    double wall_clock = 0.0;
    std::size_t n_samples = 0;
};

TaskOutcome run_task(const ExperimentSpec& spec, const EnergyContext& ctx, const Task& task,
                     const fs::path& tasks_dir, const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path final_dir = tasks_dir / task.name;
    const fs::path partial = tasks_dir / (task.name + ".partial");
    recover(final_dir);
    fs::remove_all(partial);
    fs::create_directories(partial / "samples");
    std::ofstream(partial / kIncomplete) << "task " << task.name << " in progress\n";

    const SamplerConfig config = make_sampler_config(spec, task.lambda, task.chain_seed);
    std::optional<IncrementPath> initial;
    if (spec.sampler.initial == "zero") initial.emplace(ctx.grid(), spec.grid.dim);
    const ChainResult result = run_chain(ctx, config, spec.grid.dim, initial);

    for (std::size_t i = 0; i < result.samples.size(); ++i) {
        std::ofstream out(partial / "samples" / fmt::format("{:04d}.csv", i));
        write_path_csv(out, result.samples[i], task.chain_seed);
        out.close();
        if (!out) throw std::runtime_error(fmt::format("write failed for task {}", task.name));
        if (options.on_sample) options.on_sample(task.name, i + 1);
    }
    {
        const ChainDiagnostics& d = result.diagnostics;
        std::ofstream out(partial / "diagnostics.csv");
        out << "sweep,H_T,acceptance\n";
        for (std::size_t k = 0; k < d.energy_trace.size(); ++k)
            out << fmt::format("{},{:.17g},{:.17g}\n", k + 1, d.energy_trace[k],
                               d.acceptance_trace[k]);
        if (!out) throw std::runtime_error(fmt::format("write failed for task {}", task.name));
    }
    const ChainDiagnostics& d = result.diagnostics;
    const json task_json = {{"name", task.name},
                            {"lambda", task.lambda},
                            {"seed", task.seed},
                            {"chain_seed", task.chain_seed},
                            {"n_samples", result.samples.size()},
                            {"sample_sweeps", result.sample_sweeps},
                            {"acceptance_rate", d.acceptance_rate},
                            {"iact", d.iact},
                            {"burn_in", d.burn_in},
                            {"audits", d.audits},
                            {"max_audit_error", d.max_audit_error},
                            {"unconverged", d.unconverged},
                            {"warnings", d.warnings}};
    std::ofstream(partial / "task.json") << dump(task_json);
    fs::remove(partial / kIncomplete);
    publish(partial, final_dir);

    TaskOutcome outcome;
    outcome.status = d.unconverged ? "complete (unconverged)" : "complete";
    outcome.n_samples = result.samples.size();
    outcome.wall_clock =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return outcome;
}

/// Runs f(i) for i in [0, n) on up to `threads` workers; the first
/// exception is rethrown after every worker has stopped.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    const std::size_t count = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<IncrementPath> load_samples(const fs::path& task_dir) {
    const fs::path dir = task_dir / "samples";
    if (!fs::is_directory(dir))
        throw MissingInputError(fmt::format("missing samples directory {}", dir.string()));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.size() < 2)
        throw MissingInputError(fmt::format("{} holds {} samples, need at least 2", dir.string(),
                                            files.size()));
    std::vector<IncrementPath> out;
    for (const fs::path& f : files) {
        std::ifstream in(f);
        try {
            out.push_back(read_path_csv(in).path);
        } catch (const ArgumentError& e) {
            throw MissingInputError(fmt::format("unreadable sample {}: {}", f.string(), e.what()));
        }
    }
    return out;
}

json verdict(const std::string& name, bool pass, json values) {
    return {{"name", name}, {"pass", pass}, {"values", std::move(values)}};
}

json skipped(const std::string& name, const std::string& reason) {
    return {{"name", name}, {"pass", nullptr}, {"skipped", reason}};
}

double normal_quantile(double p) { return std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0); }

struct DiffusionPoint {
    double lambda;
    std::uint64_t seed;
    double normalized, se, sigma_minus_sq;
};

void write_text(const fs::path& file, const std::string& content) {
    std::ofstream out(file);
    out << content;
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", file.string()));
}

/// Estimators for one task; appends verdicts and plot data.
json analyze_task(const ExperimentSpec& spec, const EnergyContext& ctx, const Task& task,
                  std::span<const IncrementPath> samples, const ConditionReport* report,
                  const fs::path& out_dir, const fs::path& plot_dir,
                  std::vector<DiffusionPoint>& diffusion_points) {
    const AnalysisSpec& a = spec.analysis;
    const std::size_t dim = spec.grid.dim;
    std::vector<double> direction = a.direction;
    if (direction.empty()) {
        direction.assign(dim, 0.0);
        direction[0] = 1.0;
    }
    std::optional<DecayData> decay;
    std::string decay_problem;
    if (report) {
        try {
            decay = effective_decay(ctx.potential(), *report);
        } catch (const ArgumentError& e) {
            decay_problem = e.what();
        }
    }
    json verdicts = json::array();
    fs::create_directories(out_dir);

    if (a.wants("diffusion") || a.wants("certificate")) {
        const DiffusionEstimate d = diffusion(samples, a.diffusion_a, a.diffusion_b);
        write_text(out_dir / "diffusion.json", dump(to_json(d)));
        DiffusionPoint point{task.lambda, task.seed, d.normalized, d.normalized_se,
                             std::numeric_limits<double>::quiet_NaN()};
        if (task.lambda == 0.0)
            verdicts.push_back(verdict(
                "diffusion_normalization", std::fabs(d.normalized - 1.0) <= 5.0 * d.normalized_se,
                {{"normalized", d.normalized}, {"se", d.normalized_se}, {"tolerance_se", 5}}));
        if (a.wants("certificate")) {
            if (!decay) {
                verdicts.push_back(skipped("lower_bound_certificate", decay_problem));
            } else if (task.lambda < 0.0) {
                verdicts.push_back(skipped("lower_bound_certificate", "lambda < 0"));
            } else {
                const LowerBoundCertificate c =
                    lower_bound_certificate(*decay, task.lambda, a.diffusion_a, a.diffusion_b);
                write_text(out_dir / "certificate.json", dump(to_json(c)));
                point.sigma_minus_sq = c.sigma_minus_sq;
                verdicts.push_back(verdict(
                    "lower_bound_certificate",
                    d.normalized >= c.sigma_minus_sq - 3.0 * d.normalized_se,
                    {{"normalized", d.normalized},
                     {"se", d.normalized_se},
                     {"sigma_minus_sq", c.sigma_minus_sq},
                     {"tolerance_se", 3}}));
            }
        }
        diffusion_points.push_back(point);
    }

    if (a.wants("covariance")) {
        std::vector<CovarianceDecay> results;
        if (a.covariance_method != "score")
            results.push_back(covariance_decay(samples, a.block_length, direction, a.n_max));
        if (a.covariance_method != "direct")
            results.push_back(covariance_decay_score(ctx, task.lambda, samples, a.block_length,
                                                     direction, a.n_max));
        json all = json::array();
        for (const CovarianceDecay& c : results) {
            all.push_back(to_json(c));
            std::ofstream csv(out_dir / fmt::format("covariance_{}.csv", c.method));
            write_covariance_csv(csv, c);
        }
        write_text(out_dir / "covariance.json", dump(all));
        const CovarianceDecay& used = results.back();

        std::string dat = "# n |cov| se\n";
        for (const CovarianceRow& r : used.rows)
            if (r.n >= 1) dat += fmt::format("{} {:.17g} {:.17g}\n", r.n, std::fabs(r.cov), r.se);
        write_text(plot_dir / fmt::format("covariance_{}.dat", task.name), dat);
        write_text(plot_dir / fmt::format("covariance_{}.gp", task.name),
                   fmt::format("set logscale xy\nset xlabel 'n'\nset ylabel '|Cov(Y_0, Y_n)|'\n"
                               "set title 'covariance decay, {} ({} estimator)'\n"
                               "plot 'covariance_{}.dat' using 1:2:3 with yerrorbars title 'data'\n",
                               task.name, used.method, task.name));

        const std::size_t half = a.n_max / 2;
        const CovarianceRow& full = used.rows[a.n_max];
        const CovarianceRow& mid = used.rows[half];
        verdicts.push_back(verdict(
            "covariance_partial_sums_stable",
            std::fabs(full.partial_sum - mid.partial_sum) <=
                2.0 * std::hypot(full.partial_sum_se, mid.partial_sum_se),
            {{"sigma_sq_n_max", full.partial_sum},
             {"sigma_sq_half", mid.partial_sum},
             {"tolerance_se", 2}}));
        if (report && report->h3b.verdict == Verdict::holds) {
            const double gamma = report->h3b.gamma_fit;
            const double threshold = -(gamma - 2.0) + 0.3;
            verdicts.push_back(verdict("covariance_decay_exponent",
                                       std::isfinite(used.exponent) && used.exponent <= threshold,
                                       {{"exponent", json(std::isfinite(used.exponent)
                                                              ? json(used.exponent)
                                                              : json(nullptr))},
                                        {"gamma", gamma},
                                        {"threshold", threshold},
                                        {"fit_points", used.fit_points},
                                        {"method", used.method}}));
        }
    }

    if (a.wants("dobrushin")) {
        if (!decay) {
            verdicts.push_back(skipped("dobrushin_threshold", decay_problem));
        } else {
            SamplerConfig config =
                make_sampler_config(spec, task.lambda, derive_seed(task.chain_seed, 0x5157));
            config.n_sweeps = a.sigma_sweeps;
            config.burn_in.reset();
            config.block = std::min(config.block, ctx.grid().n_steps());
            const SigmaSqEstimate s =
                sigma_sq_estimate(ctx, config, a.block_length, dim, a.probe_slope);
            const DobrushinReport r = dobrushin_bound(*decay, task.lambda, a.block_length, s.conservative);
            write_text(out_dir / "dobrushin.json",
                       dump({{"sigma_sq", to_json(s)}, {"bound", to_json(r)}}));
            verdicts.push_back(verdict("dobrushin_threshold", r.lambda_star > 0.0,
                                       {{"lambda_star", r.lambda_star},
                                        {"row_bound", r.row_bound},
                                        {"status", r.status}}));
        }
    }

    if (a.wants("clt")) {
        std::vector<std::vector<double>> axes;
        for (std::size_t c = 0; c < dim; ++c) {
            axes.emplace_back(dim, 0.0);
            axes.back()[c] = 1.0;
        }
        const CltReport r = clt_test(samples, a.epsilons, axes);
        write_text(out_dir / "clt.json", dump(to_json(r)));

        std::string dat = "# epsilon normal_quantile standardized_value\n";
        for (const CltScale& s : r.scales) {
            if (s.ks.empty()) continue;
            std::vector<double> v = s.ks.front().values;
            std::sort(v.begin(), v.end());
            const double m = mean(v), sd = std::sqrt(variance(v));
            for (std::size_t k = 0; k < v.size(); ++k)
                dat += fmt::format("{:.17g} {:.17g} {:.17g}\n", s.epsilon,
                                   normal_quantile((static_cast<double>(k) + 0.5) /
                                                   static_cast<double>(v.size())),
                                   (v[k] - m) / sd);
            dat += "\n\n";
        }
        write_text(plot_dir / fmt::format("clt_qq_{}.dat", task.name), dat);
        std::string gp = "set xlabel 'normal quantile'\nset ylabel 'standardized X^eps'\n"
                         "set key left\nplot x title 'identity'";
        for (std::size_t k = 0; k < r.scales.size(); ++k)
            gp += fmt::format(", 'clt_qq_{}.dat' index {} using 2:3 title 'eps = {}'", task.name, k,
                              r.scales[k].epsilon);
        write_text(plot_dir / fmt::format("clt_qq_{}.gp", task.name), gp + "\n");

        bool normal = true, isotropic = true, monotone = true;
        double min_p = 1.0, max_z = 0.0;
        for (const CltScale& s : r.scales) {
            for (const KsDirection& k : s.ks) {
                min_p = std::min(min_p, k.p_value);
                normal = normal && k.p_value >= 0.01;
            }
            max_z = std::max({max_z, s.max_diag_z, s.max_offdiag_z});
        }
        isotropic = max_z <= 4.0;
        std::vector<const CltScale*> order;
        for (const CltScale& s : r.scales)
            if (!s.ks.empty()) order.push_back(&s);
        std::sort(order.begin(), order.end(),
                  [](const CltScale* x, const CltScale* y) { return x->epsilon > y->epsilon; });
        for (std::size_t k = 1; k < order.size(); ++k)
            for (std::size_t c = 0; c < dim; ++c) {
                const KsDirection& prev = order[k - 1]->ks[c];
                const KsDirection& next = order[k]->ks[c];
                if (next.distance > prev.distance + 2.0 * std::hypot(prev.distance_se, next.distance_se))
                    monotone = false;
            }
        if (task.lambda == 0.0)
            verdicts.push_back(verdict("clt_normality", normal, {{"min_p_value", min_p}, {"level", 0.01}}));
        if (order.size() >= 2)
            verdicts.push_back(verdict("clt_ks_non_increasing", monotone, {{"tolerance_se", 2}}));
        verdicts.push_back(verdict("clt_isotropy", isotropic, {{"max_z", max_z}, {"tolerance_se", 4}}));
    }

    if (a.wants("mixing")) {
        const std::vector<MixingRow> rows = mixing_proxy(samples, a.block_length, a.mixing_n_max);
        write_text(out_dir / "mixing.json", dump(to_json(rows)));
        std::ofstream csv(out_dir / "mixing.csv");
        write_mixing_csv(csv, rows);
    }
    return verdicts;
}

void write_diffusion_plot(const fs::path& plot_dir, std::vector<DiffusionPoint> points) {
    std::sort(points.begin(), points.end(), [](const DiffusionPoint& x, const DiffusionPoint& y) {
        return std::tie(x.lambda, x.seed) < std::tie(y.lambda, y.seed);
    });
    std::string dat = "# lambda seed normalized se sigma_minus_sq\n";
    for (const DiffusionPoint& p : points)
        dat += fmt::format("{:.17g} {} {:.17g} {:.17g} {}\n", p.lambda, p.seed, p.normalized, p.se,
                           std::isfinite(p.sigma_minus_sq) ? fmt::format("{:.17g}", p.sigma_minus_sq)
                                                           : std::string("nan"));
    write_text(plot_dir / "diffusion_vs_lambda.dat", dat);
    write_text(plot_dir / "diffusion_vs_lambda.gp",
               "set xlabel 'lambda'\nset ylabel 'E[X_ab^2] / |b - a|'\n"
               "plot 'diffusion_vs_lambda.dat' using 1:3:4 with yerrorbars title 'estimate', \\\n"
               "     '' using 1:5 with linespoints title 'certified lower bound'\n");
}

} // namespace

std::vector<Task> tasks_of(const ExperimentSpec& spec) {
    std::vector<Task> out;
    for (double lambda : spec.sampler.lambdas)
        for (std::uint64_t seed : spec.sampler.seeds) {
            Task t;
            t.lambda = lambda;
            t.seed = seed;
            t.chain_seed = derive_seed(seed, std::bit_cast<std::uint64_t>(lambda));
            t.name = fmt::format("lambda_{}_seed_{}", lambda, seed);
            out.push_back(t);
        }
    return out;
}

fs::path output_dir(const ExperimentSpec& spec, const RunOptions& options) {
    if (!options.out.empty()) return options.out;
    if (spec.output_dir.empty())
        throw ConfigError(fmt::format("{}: no output directory (set [output] dir or --out)",
                                      spec.source));
    return spec.output_dir;
}

void write_file_atomic(const fs::path& file, const std::string& content) {
    const fs::path tmp = file.string() + ".tmp";
    write_text(tmp, content);
    fs::rename(tmp, file);
}

int cmd_check(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log) {
    if (spec.analysis.empty()) {
        log << "analysis block is empty, nothing to check\n";
        return exit_ok;
    }
    const ConditionReport report = condition_report(spec);
    const fs::path out = output_dir(spec, options);
    fs::create_directories(out);
    write_file_atomic(out / "conditions.json", dump(to_json(report)));
    return requested_hold(spec, report, log) ? exit_ok : exit_condition_failed;
}

int cmd_sample(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log) {
    if (!options.force && !spec.analysis.conditions.empty()) {
        const ConditionReport report = condition_report(spec);
        if (!requested_hold(spec, report, log)) {
            log << "requested conditions do not hold; use --force to sample anyway\n";
            return exit_condition_failed;
        }
    }
    const fs::path out = output_dir(spec, options);
    fs::create_directories(out / "tasks");
    const EnergyContext ctx = make_context(spec);
    const std::vector<Task> tasks = tasks_of(spec);
    std::vector<TaskOutcome> outcomes(tasks.size());
    std::atomic<bool> numeric_failure{false};

    parallel_for(tasks.size(), options.threads, [&](std::size_t i) {
        try {
            outcomes[i] = run_task(spec, ctx, tasks[i], out / "tasks", options);
        } catch (const NumericError& e) {
            outcomes[i].status = fmt::format("numeric failure: {}", e.what());
            numeric_failure = true;
        }
    });

    json manifest = {{"code_version", kCodeVersion},
                     {"spec_hash", hex(spec_hash(spec))},
                     {"spec_source", spec.source},
                     {"spec_text", spec.text},
                     {"resolved", canonical_text(spec)},
                     {"table_file", spec.potential.table_file},
                     {"threads", options.threads},
                     {"tasks", json::array()}};
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        manifest["tasks"].push_back({{"name", tasks[i].name},
                                     {"lambda", tasks[i].lambda},
                                     {"seed", tasks[i].seed},
                                     {"chain_seed", tasks[i].chain_seed},
                                     {"status", outcomes[i].status},
                                     {"n_samples", outcomes[i].n_samples},
                                     {"wall_clock_s", outcomes[i].wall_clock}});
        log << fmt::format("{}: {} ({} samples, {:.2f} s)\n", tasks[i].name, outcomes[i].status,
                           outcomes[i].n_samples, outcomes[i].wall_clock);
    }
    write_file_atomic(out / "manifest.json", dump(manifest));
    return numeric_failure ? exit_numeric_failure : exit_ok;
}

int cmd_analyze(const fs::path& run_dir, const ExperimentSpec* analysis_override,
                std::ostream& log) {
    const fs::path manifest_file = run_dir / "manifest.json";
    if (!fs::exists(manifest_file))
        throw MissingInputError(fmt::format("{} is not a complete run (no manifest.json)",
                                            run_dir.string()));
    const json manifest = json::parse(read_file(manifest_file));
    ExperimentSpec spec =
        parse_spec(manifest.at("spec_text").get<std::string>(), manifest_file.string());
    spec.potential.table_file = manifest.value("table_file", spec.potential.table_file);
    if (analysis_override) {
        if (analysis_override->grid.horizon != spec.grid.horizon ||
            analysis_override->grid.dt != spec.grid.dt || analysis_override->grid.dim != spec.grid.dim)
            throw ConfigError(fmt::format("{}: grid differs from the run in {}",
                                          analysis_override->source, run_dir.string()));
        spec.analysis = analysis_override->analysis;
    }
    if (spec.analysis.estimators.empty()) {
        log << "no estimators requested\n";
        return exit_ok;
    }

    const std::vector<Task> tasks = tasks_of(spec);
    for (const Task& t : tasks) {
        const fs::path dir = run_dir / "tasks" / t.name;
        if (!fs::is_directory(dir) || fs::exists(dir / kIncomplete))
            throw MissingInputError(fmt::format("task {} is missing or incomplete in {}", t.name,
                                                run_dir.string()));
    }
    const EnergyContext ctx = make_context(spec);
    const AnalysisSpec& a = spec.analysis;
    std::optional<ConditionReport> report;
    if (a.wants("certificate") || a.wants("covariance") || a.wants("dobrushin"))
        report = condition_report(spec);

    const fs::path plot_dir = run_dir / "plots";
    fs::create_directories(plot_dir);
    std::vector<DiffusionPoint> points;
    json verdicts = {{"spec_hash", hex(spec_hash(spec))},
                     {"code_version", kCodeVersion},
                     {"tasks", json::array()}};
    bool all_pass = true;
    for (const Task& t : tasks) {
        const std::vector<IncrementPath> samples = load_samples(run_dir / "tasks" / t.name);
        const json v = analyze_task(spec, ctx, t, samples, report ? &*report : nullptr,
                                    run_dir / "analysis" / t.name, plot_dir, points);
        for (const json& item : v) {
            if (item["pass"].is_boolean()) all_pass = all_pass && item["pass"].get<bool>();
            log << fmt::format("{} {}: {}\n", t.name, item["name"].get<std::string>(),
                               item["pass"].is_null() ? "skipped"
                               : item["pass"].get<bool>() ? "pass"
                                                          : "FAIL");
        }
        verdicts["tasks"].push_back({{"task", t.name}, {"lambda", t.lambda}, {"seed", t.seed},
                                     {"verdicts", v}});
    }
    verdicts["all_pass"] = all_pass;
    if (report) verdicts["conditions"] = to_json(*report);
    if (!points.empty()) write_diffusion_plot(plot_dir, points);
    write_file_atomic(run_dir / "verdicts.json", dump(verdicts));
    return exit_ok;
}

int cmd_all(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log) {
    if (!spec.analysis.empty()) {
        const int check = cmd_check(spec, options, log);
        if (check != exit_ok && !options.force) {
            log << "requested conditions do not hold; use --force to continue\n";
            return check;
        }
    }
    RunOptions sample_options = options;
    sample_options.force = true;
    const int sample = cmd_sample(spec, sample_options, log);
    if (sample != exit_ok) return sample;
    return cmd_analyze(output_dir(spec, options), nullptr, log);
}

int run_guarded(const std::function<int()>& command, std::ostream& err) {
    try {
        return command();
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const ArgumentError& e) {
        err << "configuration error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const MissingInputError& e) {
        err << "missing input: " << e.what() << "\n";
        return exit_missing_input;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return exit_numeric_failure;
    } catch (const json::exception& e) {
        err << "missing input: malformed JSON: " << e.what() << "\n";
        return exit_missing_input;
    } catch (const Interrupted& e) {
        err << "interrupted: " << e.what() << "\n";
        return 130;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_condition_failed;
    }
}

} // namespace pathgibbs
