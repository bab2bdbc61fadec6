#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathgibbs/config.hpp"

namespace pathgibbs {

inline constexpr const char* kCodeVersion = "0.1.0";

enum ExitCode : int {
    exit_ok = 0,
    exit_condition_failed = 1,
    exit_config_error = 2,
    exit_missing_input = 3,
    exit_numeric_failure = 4,
};

/// A run directory or sample file that analysis needs is absent or incomplete.
class MissingInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Interruption raised by the progress hook (tests) or a signal handler.
class Interrupted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    std::filesystem::path out;    ///< overrides [output] dir when non-empty
    std::size_t threads = 1;      ///< concurrent (lambda, seed) tasks
    bool force = false;           ///< sample even when requested conditions fail
    /// Called after each sample file is written; may throw Interrupted.
    std::function<void(const std::string& task, std::size_t files_written)> on_sample;
};

/// One (lambda, seed) chain. Its stream seed depends on the seed and the
/// bit pattern of lambda only, so adding lambdas leaves other tasks unchanged.
struct Task {
    double lambda = 0.0;
    std::uint64_t seed = 1;
    std::uint64_t chain_seed = 0;
    std::string name; ///< directory name under tasks/
};
std::vector<Task> tasks_of(const ExperimentSpec& spec);

std::filesystem::path output_dir(const ExperimentSpec& spec, const RunOptions& options);

/// Writes conditions.json (unless the analysis block is empty). Returns
/// exit_ok iff every requested condition holds, else exit_condition_failed.
int cmd_check(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log);

/// Runs every task into tasks/<name>/ (samples/NNNN.csv, diagnostics.csv,
/// task.json) and writes manifest.json. A task is built in <name>.partial
/// with an INCOMPLETE marker and renamed into place only when complete.
int cmd_sample(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log);

/// Reads a complete run directory and writes analysis/<task>/ reports,
/// verdicts.json and plots/. When `analysis_override` is given its analysis
/// block replaces the one stored in the manifest. MissingInputError when
/// the run is absent or incomplete.
int cmd_analyze(const std::filesystem::path& run_dir, const ExperimentSpec* analysis_override,
                std::ostream& log);

int cmd_all(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log);

/// Maps the library's exceptions to exit codes and prints the message.
int run_guarded(const std::function<int()>& command, std::ostream& err);

/// Writes `content` to `file` through a temporary and a rename.
void write_file_atomic(const std::filesystem::path& file, const std::string& content);

} // namespace pathgibbs
