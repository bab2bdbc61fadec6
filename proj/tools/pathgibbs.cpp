#include <atomic>
#include <csignal>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "pathgibbs/config.hpp"
#include "pathgibbs/runner.hpp"

using namespace pathgibbs;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Path-space Gibbs measures: hypothesis checks, sampling and analysis"};
    app.require_subcommand(1);

    std::string spec_file;
    std::string out_dir;
    std::size_t threads = 1;
    bool force = false;
    auto common = [&](CLI::App* sub, bool spec_required) {
        auto* opt = sub->add_option("--spec", spec_file, "experiment spec file");
        if (spec_required) opt->required();
        sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
        sub->add_option("--threads", threads, "concurrent (lambda, seed) tasks")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--force", force, "sample even when requested conditions fail");
    };
    auto* check = app.add_subcommand("check", "evaluate the hypotheses on W, write conditions.json");
    auto* sample = app.add_subcommand("sample", "run the chains into a run directory");
    auto* analyze = app.add_subcommand("analyze", "estimators, verdicts.json and plot scripts");
    auto* all = app.add_subcommand("all", "check, sample and analyze");
    common(check, true);
    common(sample, true);
    common(analyze, false);
    common(all, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config_error;
    }

    return run_guarded(
        [&]() -> int {
            RunOptions options;
            options.out = out_dir;
            options.threads = threads;
            options.force = force;
            // Ctrl-C stops at the next sample file; the task stays .partial.
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            options.on_sample = [](const std::string& task, std::size_t) {
                if (g_interrupted) throw Interrupted("signal received while sampling " + task);
            };
            if (analyze->parsed()) {
                if (spec_file.empty() && out_dir.empty())
                    throw ConfigError("analyze needs --out RUN_DIR or --spec FILE");
                if (spec_file.empty()) return cmd_analyze(out_dir, nullptr, std::cout);
                const ExperimentSpec spec = load_spec(spec_file);
                return cmd_analyze(output_dir(spec, options), &spec, std::cout);
            }
            const ExperimentSpec spec = load_spec(spec_file);
            if (check->parsed()) return cmd_check(spec, options, std::cout);
            if (sample->parsed()) return cmd_sample(spec, options, std::cout);
            return cmd_all(spec, options, std::cout);
        },
        std::cerr);
}
