#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cqeo/linear_system.hpp"
#include "cqeo/physics_params.hpp"

namespace cqeo {

enum class Regime { Cooling, ParametricAmp, ParasiticThreeMode, BackActionEvading };

std::string_view regime_name(Regime regime);
Regime regime_from_name(std::string_view name);

// Which sideband configuration to linearize, and the classical pump fields that
// set its couplings. Amplitudes are dimensionless intracavity field magnitudes
// (|alpha|^2 is a photon number).
struct ScenarioConfig {
    Regime regime = Regime::Cooling;
    double g = 0.0;     ///< single-photon coupling rate, rad/s
    ModeSpec optical;   ///< center optical mode; gamma is gamma_a
    ModeSpec microwave; ///< gamma is gamma_b

    // Bath occupations. When unset they follow from the mode's temperature.
    std::optional<double> optical_occupation;
    std::optional<double> microwave_occupation;

    double alpha_minus = 0.0;  ///< red sideband |alpha_-|
    double alpha_plus = 0.0;   ///< blue sideband |alpha_+|
    double alpha0 = 0.0;       ///< detuned center-mode pump |alpha_0|, taken real
    double theta_plus = 0.0;   ///< phase of alpha_+, rad
    double theta_minus = 0.0;  ///< phase of alpha_-, rad

    double delta = 0.0;  ///< Delta omega - omega_b, rad/s (parasitic regime)
    double sideband_occupation_minus = 0.0;  ///< N(omega_a - Delta omega)
    double sideband_occupation_plus = 0.0;   ///< N(omega_a + Delta omega)

    bool include_microwave_bath = false;  ///< back-action-evading regime only

    double n_a() const { return optical_occupation.value_or(optical.occupation()); }
    double n_b() const { return microwave_occupation.value_or(microwave.occupation()); }
    /// theta = (theta_+ + theta_-)/2, the optical quadrature angle.
    double theta() const { return 0.5 * (theta_plus + theta_minus); }
    /// nu = (theta_+ - theta_-)/2, the microwave quadrature angle.
    double nu() const { return 0.5 * (theta_plus - theta_minus); }
};

/// Red-sideband beam-splitter coupling of modes (a, b); the parametric term is dropped.
LinearQuantumSystemd build_cooling_system(const ScenarioConfig& cfg);

/// Blue-sideband two-mode squeezing of (a, b); stable only below threshold.
LinearQuantumSystemd build_parametric_system(const ScenarioConfig& cfg);

/// Three-mode system over (am, ap, b): am is the rotating-frame red sideband mode
/// detuned by 2 delta, ap the blue mode, with the center mode a classical pump alpha0.
LinearQuantumSystemd build_parasitic_system(const ScenarioConfig& cfg);

/// Double-sideband pumping in the (X_a, Y_a, X_b, Y_b) basis. The quadrature
/// angles theta, nu are absorbed into the basis, so the matrices do not depend
/// on the pump phases.
LinearQuantumSystemd build_bae_system(const ScenarioConfig& cfg);

/// Dispatches on cfg.regime.
LinearQuantumSystemd build_system(const ScenarioConfig& cfg);

}  // namespace cqeo
