#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cqeo/builders.hpp"
#include "cqeo/errors.hpp"
#include "cqeo/oracle.hpp"
#include "cqeo/physics_params.hpp"

namespace cqeo::runner {

/// Config validation failure; the message names the offending field.
class ConfigError : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

struct SweepAxis {
    std::string path;  ///< dotted path into the scenario document
    double from = 0.0;
    double to = 0.0;
    bool log_scale = false;
    std::size_t points = 1;

    std::vector<double> values() const;
};

struct Tolerances {
    double closed_form_rel = 1e-9;  ///< closed form vs Lyapunov, relative
    double oracle_sigma = 3.0;      ///< oracle vs Lyapunov, in standard errors
};

// Typed view of a scenario document after unit conversion and defaults.
struct ResolvedScenario {
    ScenarioConfig scenario;
    std::optional<EomDeviceParams> device;
    std::optional<PumpConfig> pump;  ///< present when a pump power is given
    double pump_photons = 0.0;       ///< |alpha|^2 fed to the builder

    // Back-action-evading time series.
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::string initial = "vacuum";  ///< "vacuum" or "thermal"
    std::vector<std::pair<std::string, std::string>> covariance_entries;

    bool oracle_enabled = true;
    TrajectoryEnsembleSpec oracle;
    Tolerances tolerances;
    bool require_steady_state = true;
    std::vector<std::string> outputs;  ///< requested observables; empty = all
    std::vector<SweepAxis> sweep;
};

/// Parses "<path>=<value>"; value is read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);
void set_path(nlohmann::json& doc, const std::string& path, nlohmann::json value);

/// Preset by file path, or by name in $CQEO_PRESET_DIR, ./presets, or the
/// installed preset directory.
nlohmann::json load_preset(const std::string& name_or_path);
nlohmann::json parse_document(const std::string& text, const std::string& origin);

std::vector<SweepAxis> parse_sweep(const nlohmann::json& doc);

/// Converts a scenario document into typed inputs. `regime` wins over any
/// "regime" key in the document when given.
ResolvedScenario resolve_scenario(const nlohmann::json& doc, std::optional<Regime> regime, std::uint64_t seed);

}  // namespace cqeo::runner
