#pragma once

#include <numbers>
#include <optional>

#include <json.hpp>

namespace cqeo {

// CODATA 2018 exact/recommended values.
struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;  // J s
    static constexpr double k_B = 1.380649e-23;      // J/K
    static constexpr double c = 299792458.0;         // m/s
};

// All frequencies are angular (rad/s) inside the library. These helpers are the
// only sanctioned way in from "Hz" or "2pi x Hz" numbers.
constexpr double angular_from_hz(double hz) { return 2.0 * std::numbers::pi * hz; }
constexpr double hz_from_angular(double omega) { return omega / (2.0 * std::numbers::pi); }
constexpr double angular_from_wavelength(double lambda_m) {
    return 2.0 * std::numbers::pi * PhysicalConstants::c / lambda_m;
}

/// Electro-optic modulator embedded as the capacitor of a microwave resonator.
struct EomDeviceParams {
    double n = 0.0;        ///< optical refractive index
    double r = 0.0;        ///< electro-optic coefficient, m/V
    double l = 0.0;        ///< medium length along the optical axis, m
    double d = 0.0;        ///< medium thickness, m
    double tau = 0.0;      ///< optical round-trip time, s
    double C = 0.0;        ///< resonator capacitance, F
    double omega_a = 0.0;  ///< optical angular frequency, rad/s
    double omega_b = 0.0;  ///< microwave angular frequency, rad/s
    /// Reduction of g from partial optical/microwave mode overlap, in (0, 1].
    double overlap_factor = 1.0;

    /// Throws InvalidParameter when a field is out of range. r = 0 is allowed.
    void validate() const;
};

/// One bosonic mode and its bath.
struct ModeSpec {
    double omega = 0.0;             ///< rad/s
    double gamma = 0.0;             ///< energy decay rate, rad/s
    double bath_temperature = 0.0;  ///< K

    void validate() const;
    double occupation() const;
};

struct PumpConfig {
    double power = 0.0;  ///< W
    double omega = 0.0;  ///< optical carrier, rad/s
    double delta = 0.0;  ///< pump minus nearest resonance, rad/s
    double phase = 0.0;  ///< rad, wrapped to (-pi, pi]

    void validate() const;
};

/// Wraps an angle into (-pi, pi].
double wrap_phase(double phase);

// g = overlap * (omega_a n r l / (c tau d)) * sqrt(hbar omega_b / 2C); here n is
// folded in as n^3.
double coupling_rate(const EomDeviceParams& dev);

/// Zero-point voltage amplitude multiplying (b + b^dagger).
double voltage_zero_point(double omega_b, double C);

/// Round-trip phase shift per volt, omega_a n^3 r l / (c d).
double phase_per_volt(const EomDeviceParams& dev);

/// Bose-Einstein occupation; exactly 0 at T = 0.
double thermal_occupation(double omega, double temperature);

/// Intracavity photon number of a CW pump on a Lorentzian resonance of linewidth gamma_a.
double pump_photon_number(const PumpConfig& pump, double gamma_a);

// JSON loaders. Keys carry unit suffixes; every frequency accepts either
// "<name>_rad_per_s" or "<name>_Hz" (the latter multiplied by 2pi).
EomDeviceParams device_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EomDeviceParams& dev);
ModeSpec mode_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModeSpec& mode);
PumpConfig pump_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PumpConfig& pump);

/// Reads an angular frequency stored as "<base>_rad_per_s" or "<base>_Hz". When
/// wavelength_key is given, a vacuum wavelength in metres under that key is also
/// accepted. More than one spelling present is an error; nullopt when absent.
std::optional<double> read_angular(const nlohmann::json& j, const std::string& base,
                                   const std::string& wavelength_key = {});

}  // namespace cqeo
