#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "varint/core.hpp"
#include "varint/diagnostics.hpp"
#include "varint/problems.hpp"
#include "varint/relaxation.hpp"

namespace varint {

/// Contents of a run configuration file.
struct RunConfig {
    std::string problem;
    ProblemOptions options;
    std::filesystem::path output_dir = "varint_out";
    std::uint64_t seed = 0;
    /// Uniform noise of this amplitude added to the free components of the guess.
    double guess_noise = 0.0;
    /// Use the serial reference kernel.
    bool serial = false;
};

/// A run configuration together with the problem it describes. Solver
/// fields given in the file override problem.config.
struct ParsedConfig {
    RunConfig run;
    Problem problem;
};

/// Parses and validates a JSON run configuration. Unknown keys and
/// out-of-range values raise ConfigError naming the offending field (and the
/// line for syntax errors).
ParsedConfig parse_run_config(const std::string& text);
ParsedConfig load_run_config(const std::filesystem::path& path);

/// Initial guess of a parsed configuration, including seeded noise.
Trajectory initial_guess(const ParsedConfig& cfg);

/// k, t_k, then the γ·n state columns, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in, int gamma, int dim);
Trajectory read_trajectory_csv(const std::filesystem::path& path, int gamma, int dim);

void write_residuals_csv(const std::filesystem::path& path, const SolveReport& rep);

nlohmann::json to_json(const ConvergenceReport& rep);
nlohmann::json to_json(const SolveReport& rep);
nlohmann::json to_json(const SolverConfig& cfg);

}  // namespace varint
