#include "cqeo/runner_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cqeo/closed_form.hpp"

#ifndef CQEO_PRESET_DIR
#define CQEO_PRESET_DIR "presets"
#endif

namespace cqeo::runner {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& block) {
    if (!j.is_object()) throw ConfigError(block + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError(block + ": unknown field '" + key + "'");
    }
}

template <typename F>
auto in_block(const std::string& block, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidParameter& e) {
        throw ConfigError(block + ": " + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(block + ": " + e.what());
    }
}

double number(const json& j, const std::string& key, const std::string& block) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(block + "." + key + ": expected a number");
    return v.get<double>();
}

// Times accept "<base>_s", "<base>_optical_lifetimes" (1/gamma_a) or
// "<base>_microwave_lifetimes" (1/gamma_b).
std::optional<double> read_time(const json& j, const std::string& base, const std::string& block, double gamma_a,
                                double gamma_b) {
    std::optional<double> out;
    auto take = [&](const std::string& key, double unit) {
        if (!j.contains(key)) return;
        if (out) throw ConfigError(block + ": conflicting spellings for '" + base + "'");
        if (!(unit > 0.0) || !std::isfinite(unit)) throw ConfigError(block + "." + key + ": reference rate is zero");
        out = number(j, key, block) * unit;
    };
    take(base + "_s", 1.0);
    take(base + "_optical_lifetimes", 1.0 / gamma_a);
    take(base + "_microwave_lifetimes", gamma_b > 0.0 ? 1.0 / gamma_b : 0.0);
    return out;
}

std::size_t count(const json& j, const std::string& key, const std::string& block, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(block + "." + key + ": expected a nonnegative integer");
    return v.get<std::size_t>();
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("malformed parameter path '" + path + "'");
        parts.push_back(part);
    }
    if (parts.empty()) throw ConfigError("empty parameter path");
    return parts;
}

const std::set<std::string> kTopLevel = {"name",     "description", "regime",    "g_rad_per_s", "g_Hz",
                                         "device",   "optical",     "microwave", "occupations", "pump",
                                         "pump_photons", "cooperativity", "parasitic", "bae", "time",
                                         "oracle",   "tolerances",  "outputs",   "sweep",       "require_steady_state",
                                         "seed"};

}  // namespace

std::vector<double> SweepAxis::values() const {
    std::vector<double> v;
    if (points == 1) return {from};
    for (std::size_t k = 0; k < points; ++k) {
        const double s = static_cast<double>(k) / static_cast<double>(points - 1);
        v.push_back(log_scale ? std::exp(std::log(from) + s * (std::log(to) - std::log(from))) : from + s * (to - from));
    }
    v.back() = to;
    v.front() = from;
    return v;
}

void set_path(json& doc, const std::string& path, json value) {
    const auto parts = split_path(path);
    json* node = &doc;
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        if (!node->is_object()) throw ConfigError("parameter path '" + path + "' crosses a non-object at '" + parts[k] + "'");
        node = &(*node)[parts[k]];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ConfigError("parameter path '" + path + "' does not end in an object");
    (*node)[parts.back()] = std::move(value);
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    set_path(doc, path, std::move(value));
}

json parse_document(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line:column.
        std::size_t line = 1, col = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

json load_preset(const std::string& name_or_path) {
    std::vector<std::filesystem::path> candidates{name_or_path};
    const std::string file = name_or_path.ends_with(".json") ? name_or_path : name_or_path + ".json";
    if (const char* env = std::getenv("CQEO_PRESET_DIR")) candidates.emplace_back(std::filesystem::path(env) / file);
    candidates.emplace_back(std::filesystem::path("presets") / file);
    candidates.emplace_back(std::filesystem::path(CQEO_PRESET_DIR) / file);
    for (const auto& p : candidates) {
        std::error_code ec;
        if (std::filesystem::is_regular_file(p, ec)) {
            std::ifstream in(p);
            std::stringstream ss;
            ss << in.rdbuf();
            return parse_document(ss.str(), p.string());
        }
    }
    throw ConfigError("preset '" + name_or_path + "' not found");
}

std::vector<SweepAxis> parse_sweep(const json& doc) {
    std::vector<SweepAxis> axes;
    if (!doc.contains("sweep")) return axes;
    const auto& s = doc.at("sweep");
    if (!s.is_array()) throw ConfigError("sweep: expected an array of axes");
    for (std::size_t k = 0; k < s.size(); ++k) {
        const std::string block = "sweep[" + std::to_string(k) + "]";
        const auto& a = s[k];
        check_keys(a, {"path", "from", "to", "scale", "points"}, block);
        SweepAxis axis;
        if (!a.contains("path") || !a.at("path").is_string()) throw ConfigError(block + ".path: expected a string");
        axis.path = a.at("path").get<std::string>();
        axis.from = number(a, "from", block);
        axis.to = number(a, "to", block);
        axis.points = count(a, "points", block, 2);
        const std::string scale = a.value("scale", std::string("linear"));
        if (scale != "linear" && scale != "log") throw ConfigError(block + ".scale: expected 'linear' or 'log'");
        axis.log_scale = scale == "log";
        if (axis.points == 0) throw ConfigError(block + ".points: must be positive");
        if (axis.log_scale && !(axis.from > 0.0 && axis.to > 0.0)) throw ConfigError(block + ": log axis needs positive bounds");
        split_path(axis.path);
        axes.push_back(std::move(axis));
    }
    if (axes.size() > 2) throw ConfigError("sweep: at most 2 axes are supported");
    return axes;
}

ResolvedScenario resolve_scenario(const json& doc, std::optional<Regime> regime, std::uint64_t seed) {
    check_keys(doc, kTopLevel, "config");
    ResolvedScenario out;
    auto& sc = out.scenario;

    if (regime) {
        sc.regime = *regime;
    } else {
        if (!doc.contains("regime") || !doc.at("regime").is_string()) throw ConfigError("config.regime: required for this command");
        sc.regime = in_block("config.regime", [&] { return regime_from_name(doc.at("regime").get<std::string>()); });
    }

    if (doc.contains("device")) {
        const auto& d = doc.at("device");
        check_keys(d, {"n", "r_m_per_V", "n3r_m_per_V", "l_m", "d_m", "tau_s", "l_over_c_tau", "C_F", "omega_a_rad_per_s",
                       "omega_a_Hz", "lambda0_m", "omega_b_rad_per_s", "omega_b_Hz", "overlap_factor"},
                   "device");
        out.device = in_block("device", [&] { return device_from_json(d); });
    }

    const std::set<std::string> mode_keys = {"omega_rad_per_s", "omega_Hz", "lambda0_m", "gamma_rad_per_s", "gamma_Hz", "T_K"};
    auto mode_block = [&](const char* name, double device_omega) {
        json m = doc.contains(name) ? doc.at(name) : json::object();
        check_keys(m, mode_keys, name);
        if (!m.contains("omega_rad_per_s") && !m.contains("omega_Hz") && !m.contains("lambda0_m") && device_omega > 0.0) {
            m["omega_rad_per_s"] = device_omega;
        }
        return in_block(name, [&] { return mode_from_json(m); });
    };
    sc.optical = mode_block("optical", out.device ? out.device->omega_a : 0.0);
    sc.microwave = mode_block("microwave", out.device ? out.device->omega_b : 0.0);

    auto g = in_block("config", [&] { return read_angular(doc, "g"); });
    if (g) {
        sc.g = *g;
    } else if (out.device) {
        sc.g = coupling_rate(*out.device);
    } else {
        throw ConfigError("config: give 'g_rad_per_s', 'g_Hz' or a 'device' block");
    }
    if (!(sc.g >= 0.0)) throw ConfigError("config.g: must be nonnegative");

    if (doc.contains("occupations")) {
        const auto& o = doc.at("occupations");
        check_keys(o, {"N_a", "N_b"}, "occupations");
        if (o.contains("N_a")) sc.optical_occupation = number(o, "N_a", "occupations");
        if (o.contains("N_b")) sc.microwave_occupation = number(o, "N_b", "occupations");
    }

    const double gamma_a = sc.optical.gamma;
    const double gamma_b = sc.microwave.gamma;

    if (doc.contains("pump")) {
        json p = doc.at("pump");
        check_keys(p, {"power_W", "omega_rad_per_s", "omega_Hz", "lambda0_m", "delta_rad_per_s", "delta_Hz", "mu", "phase_rad"},
                   "pump");
        if (p.contains("mu")) {
            if (p.contains("delta_rad_per_s") || p.contains("delta_Hz")) throw ConfigError("pump: give either 'mu' or a detuning");
            const double mu = number(p, "mu", "pump");
            p["delta_rad_per_s"] = in_block("pump.mu", [&] { return detuning_from_mu(gamma_a, mu); });
            p.erase("mu");
        }
        if (!p.contains("omega_rad_per_s") && !p.contains("omega_Hz") && !p.contains("lambda0_m")) {
            p["omega_rad_per_s"] = sc.optical.omega;
        }
        if (p.contains("power_W")) {
            out.pump = in_block("pump", [&] { return pump_from_json(p); });
            sc.delta = out.pump->delta;
        } else {
            sc.delta = in_block("pump", [&] { return read_angular(p, "delta").value_or(0.0); });
        }
    }

    const bool has_photons = doc.contains("pump_photons");
    const bool has_coop = doc.contains("cooperativity");
    if (has_photons && has_coop) throw ConfigError("config: give either 'pump_photons' or 'cooperativity'");
    if (has_photons) {
        out.pump_photons = number(doc, "pump_photons", "config");
    } else if (has_coop) {
        if (!(sc.g > 0.0) || !(gamma_a > 0.0) || !(gamma_b > 0.0)) {
            throw ConfigError("config.cooperativity: needs positive g, gamma_a and gamma_b");
        }
        out.pump_photons = number(doc, "cooperativity", "config") * gamma_a * gamma_b / (4.0 * sc.g * sc.g);
    } else if (out.pump) {
        out.pump_photons = in_block("pump", [&] { return pump_photon_number(*out.pump, gamma_a); });
    }
    if (!(out.pump_photons >= 0.0) || !std::isfinite(out.pump_photons)) throw ConfigError("config: pump photon number must be nonnegative");

    const double amplitude = std::sqrt(out.pump_photons);
    const double phase = out.pump ? out.pump->phase : 0.0;
    switch (sc.regime) {
        case Regime::Cooling:
            sc.alpha_minus = amplitude;
            sc.theta_minus = phase;
            break;
        case Regime::ParametricAmp:
            sc.alpha_plus = amplitude;
            sc.theta_plus = phase;
            break;
        case Regime::ParasiticThreeMode:
            sc.alpha0 = amplitude;
            break;
        case Regime::BackActionEvading:
            sc.alpha_plus = sc.alpha_minus = amplitude;
            break;
    }

    if (doc.contains("parasitic")) {
        const auto& p = doc.at("parasitic");
        check_keys(p, {"N_sideband_minus", "N_sideband_plus"}, "parasitic");
        if (p.contains("N_sideband_minus")) sc.sideband_occupation_minus = number(p, "N_sideband_minus", "parasitic");
        if (p.contains("N_sideband_plus")) sc.sideband_occupation_plus = number(p, "N_sideband_plus", "parasitic");
    }
    if (sc.regime == Regime::ParasiticThreeMode && sc.delta == 0.0) {
        throw ConfigError("pump: the parasitic regime needs a nonzero detuning ('delta_*' or 'mu')");
    }

    if (doc.contains("bae")) {
        const auto& b = doc.at("bae");
        check_keys(b, {"theta_plus_rad", "theta_minus_rad", "include_microwave_bath"}, "bae");
        if (b.contains("theta_plus_rad")) sc.theta_plus = wrap_phase(number(b, "theta_plus_rad", "bae"));
        if (b.contains("theta_minus_rad")) sc.theta_minus = wrap_phase(number(b, "theta_minus_rad", "bae"));
        if (b.contains("include_microwave_bath")) {
            if (!b.at("include_microwave_bath").is_boolean()) throw ConfigError("bae.include_microwave_bath: expected a boolean");
            sc.include_microwave_bath = b.at("include_microwave_bath").get<bool>();
        }
    }

    const json time = doc.contains("time") ? doc.at("time") : json::object();
    check_keys(time, {"dt_s", "dt_optical_lifetimes", "dt_microwave_lifetimes", "n_steps", "initial", "covariance_entries"}, "time");
    out.dt = read_time(time, "dt", "time", gamma_a, gamma_b).value_or(0.1 / gamma_a);
    out.n_steps = count(time, "n_steps", "time", 1000);
    if (!(out.dt > 0.0)) throw ConfigError("time.dt: must be positive");
    out.initial = time.value("initial", std::string("vacuum"));
    if (out.initial != "vacuum" && out.initial != "thermal") throw ConfigError("time.initial: expected 'vacuum' or 'thermal'");
    if (time.contains("covariance_entries")) {
        const auto& entries = time.at("covariance_entries");
        if (!entries.is_array()) throw ConfigError("time.covariance_entries: expected an array of label pairs");
        for (const auto& e : entries) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
                throw ConfigError("time.covariance_entries: each entry must be [row_label, col_label]");
            }
            out.covariance_entries.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
    } else {
        out.covariance_entries = {{"X_a", "X_a"}, {"Y_a", "Y_a"}, {"X_b", "X_b"}, {"Y_b", "Y_b"}};
    }

    // Oracle defaults scale with the slowest damping in the problem.
    const double slow = std::min(gamma_a, gamma_b > 0.0 ? gamma_b : gamma_a);
    const json oracle = doc.contains("oracle") ? doc.at("oracle") : json::object();
    check_keys(oracle, {"enabled", "n_trajectories", "dt_s", "dt_optical_lifetimes", "dt_microwave_lifetimes", "t_final_s",
                        "t_final_optical_lifetimes", "t_final_microwave_lifetimes", "burn_in_s", "burn_in_optical_lifetimes",
                        "burn_in_microwave_lifetimes", "scheme", "sample_stride"},
               "oracle");
    out.oracle_enabled = oracle.value("enabled", true);
    out.oracle.n_trajectories = count(oracle, "n_trajectories", "oracle", 1000);
    out.oracle.dt = read_time(oracle, "dt", "oracle", gamma_a, gamma_b).value_or(0.5 / slow);
    out.oracle.burn_in = read_time(oracle, "burn_in", "oracle", gamma_a, gamma_b).value_or(10.0 / slow);
    out.oracle.t_final = read_time(oracle, "t_final", "oracle", gamma_a, gamma_b).value_or(out.oracle.burn_in + 50.0 / slow);
    out.oracle.sample_stride = count(oracle, "sample_stride", "oracle", 1);
    const std::string scheme = oracle.value("scheme", std::string("exact"));
    if (scheme == "exact") {
        out.oracle.scheme = Scheme::Exact;
    } else if (scheme == "euler") {
        out.oracle.scheme = Scheme::EulerMaruyama;
    } else {
        throw ConfigError("oracle.scheme: expected 'exact' or 'euler'");
    }
    out.oracle.seed = seed;
    in_block("oracle", [&] {
        out.oracle.validate();
        return 0;
    });

    out.tolerances.closed_form_rel = sc.regime == Regime::ParasiticThreeMode ? 0.05 : 1e-9;
    if (doc.contains("tolerances")) {
        const auto& t = doc.at("tolerances");
        check_keys(t, {"closed_form_rel", "oracle_sigma"}, "tolerances");
        if (t.contains("closed_form_rel")) out.tolerances.closed_form_rel = number(t, "closed_form_rel", "tolerances");
        if (t.contains("oracle_sigma")) out.tolerances.oracle_sigma = number(t, "oracle_sigma", "tolerances");
    }

    if (doc.contains("require_steady_state")) {
        if (!doc.at("require_steady_state").is_boolean()) throw ConfigError("config.require_steady_state: expected a boolean");
        out.require_steady_state = doc.at("require_steady_state").get<bool>();
    }
    if (doc.contains("outputs")) {
        const auto& o = doc.at("outputs");
        if (!o.is_array()) throw ConfigError("config.outputs: expected an array of observable names");
        for (const auto& name : o) {
            if (!name.is_string()) throw ConfigError("config.outputs: expected strings");
            out.outputs.push_back(name.get<std::string>());
        }
    }
    out.sweep = parse_sweep(doc);

    // Catch bad physics early so the CLI can report it as a config error.
    in_block("scenario", [&] { return build_system(sc); });
    return out;
}

}  // namespace cqeo::runner
