#include "cqeo/physics_params.hpp"

#include <cmath>
#include <string>

#include "cqeo/errors.hpp"

namespace cqeo {

namespace {

using PC = PhysicalConstants;

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw InvalidParameter(std::string(name) + " must be positive and finite, got " + std::to_string(value));
    }
}

void require_nonnegative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw InvalidParameter(std::string(name) + " must be nonnegative and finite, got " + std::to_string(value));
    }
}

double required_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw InvalidParameter(std::string("missing field '") + key + "'");
    if (!j.at(key).is_number()) throw InvalidParameter(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

double optional_number(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw InvalidParameter(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

double required_angular(const nlohmann::json& j, const std::string& base, const std::string& wavelength_key = {}) {
    auto value = read_angular(j, base, wavelength_key);
    if (!value) {
        std::string msg = "missing field '" + base + "_rad_per_s' (or '" + base + "_Hz'";
        if (!wavelength_key.empty()) msg += " or '" + wavelength_key + "'";
        throw InvalidParameter(msg + ")");
    }
    return *value;
}

}  // namespace

void EomDeviceParams::validate() const {
    require_positive(n, "n");
    require_nonnegative(r, "r");
    require_positive(l, "l");
    require_positive(d, "d");
    require_positive(tau, "tau");
    require_positive(C, "C");
    require_positive(omega_a, "omega_a");
    require_positive(omega_b, "omega_b");
    if (!(overlap_factor > 0.0 && overlap_factor <= 1.0)) {
        throw InvalidParameter("overlap_factor must lie in (0, 1]");
    }
    if (l > PC::c * tau * (1.0 + 1e-12)) {
        throw InvalidParameter("medium length l exceeds the optical round-trip length c*tau");
    }
    if (omega_b >= omega_a) {
        throw InvalidParameter("microwave frequency must be far below the optical frequency");
    }
}

void ModeSpec::validate() const {
    require_positive(omega, "omega");
    require_nonnegative(gamma, "gamma");
    require_nonnegative(bath_temperature, "bath_temperature");
}

double ModeSpec::occupation() const { return thermal_occupation(omega, bath_temperature); }

void PumpConfig::validate() const {
    require_nonnegative(power, "power");
    require_positive(omega, "pump omega");
    if (!std::isfinite(delta)) throw InvalidParameter("pump detuning must be finite");
    if (!std::isfinite(phase)) throw InvalidParameter("pump phase must be finite");
}

double wrap_phase(double phase) {
    constexpr double pi = std::numbers::pi;
    double wrapped = std::remainder(phase, 2.0 * pi);  // [-pi, pi]
    if (wrapped <= -pi) wrapped += 2.0 * pi;
    return wrapped;
}

double voltage_zero_point(double omega_b, double C) {
    require_positive(omega_b, "omega_b");
    require_positive(C, "C");
    return std::sqrt(PC::hbar * omega_b / (2.0 * C));
}

double phase_per_volt(const EomDeviceParams& dev) {
    dev.validate();
    return dev.omega_a * dev.n * dev.n * dev.n * dev.r * dev.l / (PC::c * dev.d);
}

double coupling_rate(const EomDeviceParams& dev) {
    return dev.overlap_factor * phase_per_volt(dev) * voltage_zero_point(dev.omega_b, dev.C) / dev.tau;
}

double thermal_occupation(double omega, double temperature) {
    require_positive(omega, "omega");
    require_nonnegative(temperature, "temperature");
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(PC::hbar * omega / (PC::k_B * temperature));
}

double pump_photon_number(const PumpConfig& pump, double gamma_a) {
    pump.validate();
    require_positive(gamma_a, "gamma_a");
    return gamma_a * pump.power /
           (PC::hbar * pump.omega * (pump.delta * pump.delta + 0.25 * gamma_a * gamma_a));
}

std::optional<double> read_angular(const nlohmann::json& j, const std::string& base,
                                   const std::string& wavelength_key) {
    const std::string rad = base + "_rad_per_s";
    const std::string hz = base + "_Hz";
    const bool has_rad = j.contains(rad);
    const bool has_hz = j.contains(hz);
    const bool has_wl = !wavelength_key.empty() && j.contains(wavelength_key);
    if (int(has_rad) + int(has_hz) + int(has_wl) > 1) {
        throw InvalidParameter("conflicting unit spellings given for '" + base + "'");
    }
    if (has_rad) return required_number(j, rad.c_str());
    if (has_hz) return angular_from_hz(required_number(j, hz.c_str()));
    if (has_wl) {
        const double lambda = required_number(j, wavelength_key.c_str());
        require_positive(lambda, wavelength_key.c_str());
        return angular_from_wavelength(lambda);
    }
    return std::nullopt;
}

EomDeviceParams device_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidParameter("device block must be a JSON object");
    EomDeviceParams dev;
    dev.n = required_number(j, "n");
    if (j.contains("r_m_per_V") && j.contains("n3r_m_per_V")) {
        throw InvalidParameter("give either 'r_m_per_V' or 'n3r_m_per_V', not both");
    }
    if (j.contains("n3r_m_per_V")) {
        require_positive(dev.n, "n");
        dev.r = required_number(j, "n3r_m_per_V") / (dev.n * dev.n * dev.n);
    } else {
        dev.r = required_number(j, "r_m_per_V");
    }
    dev.l = required_number(j, "l_m");
    dev.d = required_number(j, "d_m");
    if (j.contains("tau_s") && j.contains("l_over_c_tau")) {
        throw InvalidParameter("give either 'tau_s' or 'l_over_c_tau', not both");
    }
    if (j.contains("l_over_c_tau")) {
        const double ratio = required_number(j, "l_over_c_tau");
        require_positive(ratio, "l_over_c_tau");
        dev.tau = dev.l / (PhysicalConstants::c * ratio);
    } else {
        dev.tau = required_number(j, "tau_s");
    }
    dev.C = required_number(j, "C_F");
    dev.omega_a = required_angular(j, "omega_a", "lambda0_m");
    dev.omega_b = required_angular(j, "omega_b");
    dev.overlap_factor = optional_number(j, "overlap_factor", 1.0);
    dev.validate();
    return dev;
}

nlohmann::json to_json(const EomDeviceParams& dev) {
    return {{"n", dev.n},         {"r_m_per_V", dev.r},
            {"l_m", dev.l},       {"d_m", dev.d},
            {"tau_s", dev.tau},   {"C_F", dev.C},
            {"omega_a_rad_per_s", dev.omega_a}, {"omega_b_rad_per_s", dev.omega_b},
            {"overlap_factor", dev.overlap_factor}};
}

ModeSpec mode_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidParameter("mode block must be a JSON object");
    ModeSpec mode;
    mode.omega = required_angular(j, "omega", "lambda0_m");
    mode.gamma = required_angular(j, "gamma");
    mode.bath_temperature = optional_number(j, "T_K", 0.0);
    mode.validate();
    return mode;
}

nlohmann::json to_json(const ModeSpec& mode) {
    return {{"omega_rad_per_s", mode.omega}, {"gamma_rad_per_s", mode.gamma}, {"T_K", mode.bath_temperature}};
}

PumpConfig pump_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidParameter("pump block must be a JSON object");
    PumpConfig pump;
    pump.power = required_number(j, "power_W");
    pump.omega = required_angular(j, "omega", "lambda0_m");
    pump.delta = read_angular(j, "delta").value_or(0.0);
    pump.phase = wrap_phase(optional_number(j, "phase_rad", 0.0));
    pump.validate();
    return pump;
}

nlohmann::json to_json(const PumpConfig& pump) {
    return {{"power_W", pump.power},
            {"omega_rad_per_s", pump.omega},
            {"delta_rad_per_s", pump.delta},
            {"phase_rad", pump.phase}};
}

}  // namespace cqeo
