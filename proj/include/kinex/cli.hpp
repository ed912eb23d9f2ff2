#pragma once

// Command-line front end: configuration, the five run commands, run
// directories and their manifests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kinex/models.hpp"

namespace kinex::cli {

enum class Command { Simulate, Evolve, Steady, Residual, Sweep };

std::string_view to_string(Command command);

/// Invalid configuration; key() names the offending option (without dashes).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(message), key_(std::move(key))
    {
    }
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct RunConfig {
    Command command = Command::Simulate;
    models::ModelParams model;
    /// Full --lambda / --omega lists; sweep and residual iterate over them.
    std::vector<double> lambdas;
    std::vector<double> omegas;
    std::size_t n_agents = 10000;
    std::uint64_t n_steps = 10000000;
    std::uint64_t seed = 1;
    std::size_t replicas = 1;
    std::string grid = "auto";      // auto (kinetics::default_grid per point) | uniform | loghead
    std::string hist = "default";   // default (200 bins) | fine (500 bins), on [0, 10<u>]
    std::string initial = "delta";  // delta | exponential
    std::filesystem::path out = "kinex-run";
    unsigned jobs = 1;
    double tol = 1e-4;
    int max_iter = 100;
    std::optional<double> dt;
    std::optional<std::uint64_t> burn_in;
    std::optional<std::uint64_t> sample_every;
    std::optional<std::filesystem::path> mc_hist;

    /// Flat key=value echo used by the manifest.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Result of command-line parsing: a validated config, or an exit code when
/// parsing ended early (help, or an error already reported on err).
struct ParseOutcome {
    std::optional<RunConfig> config;
    int exit_code = 0;
};

/// args excludes the program name. Flags override --config file values.
ParseOutcome parse_command_line(const std::vector<std::string>& args, std::ostream& out,
                                std::ostream& err);

/// Applies per-command defaults and checks every field; throws ConfigError.
RunConfig validate(RunConfig config, bool agents_given, bool grid_given);

/// What a command produced inside its run directory.
struct RunOutput {
    std::vector<std::string> artifacts;
    std::vector<std::pair<std::string, std::string>> summary;
    int exit_code = 0;
};

RunOutput cmd_simulate(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log);
RunOutput cmd_steady(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log);
RunOutput cmd_residual(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log);
RunOutput cmd_evolve(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log);
/// One sub-directory per parameter value (each a complete run with its own
/// manifest) plus index.csv. A failed point is marked in the index and makes
/// the exit code 3.
RunOutput cmd_sweep(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log);

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// Writes summary.txt (if non-empty) and then manifest.txt, which must be the
/// last file written into the directory.
void finish_run_directory(const std::filesystem::path& dir, const RunConfig& config, RunOutput& output,
                          double wall_seconds);

/// Artifacts whose recorded digest does not match the file on disk (missing
/// files included). Throws DomainError when there is no manifest.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

/// Full program: parse, run, write the manifest. Returns the exit code
/// (0 success, 2 invalid configuration, 3 numeric or runtime failure).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace kinex::cli
