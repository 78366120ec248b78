#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cqeo/runner_config.hpp"

namespace cqeo::runner {

inline constexpr const char* kToolName = "cqeo";
inline constexpr const char* kToolVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitUnstable = 3;

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct RunManifest {
    std::string command;  ///< coupling | cooling | pa | parasitic | bae | compare | sweep
    nlohmann::json scenario = nlohmann::json::object();  ///< preset with overrides applied
    std::string preset;
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 1;
    unsigned jobs = 0;
    std::string format = "csv";  ///< csv | json
    std::filesystem::path trajectory_dump;  ///< compare only; empty = off
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::string message;
    Table table;
    std::filesystem::path data_file;
    std::filesystem::path sidecar_file;
};

/// Executes one manifest: evaluates the scenario (or sweep), writes the data file
/// and a JSON sidecar into out_dir. Config problems yield kExitConfig, a demanded
/// but nonexistent steady state yields kExitUnstable.
RunOutcome run_scenario(const RunManifest& manifest);

/// Closed form vs Lyapunov vs stochastic oracle, one row per observable.
Table compare_report(const ResolvedScenario& resolved, std::ostream* trajectory_dump = nullptr);

/// Time series of the requested covariance entries under covariance evolution.
Table covariance_series_table(const ResolvedScenario& resolved);

std::string to_csv(const Table& table);
nlohmann::json to_json(const Table& table);

/// Full command-line entry point; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cqeo::runner
