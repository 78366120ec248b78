#include "cqeo/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cqeo/builders.hpp"
#include "cqeo/closed_form.hpp"
#include "cqeo/oracle.hpp"
#include "cqeo/solver.hpp"

namespace cqeo::runner {

namespace {

using json = nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    return std::get<std::string>(c);
}

double flag(bool b) { return b ? 1.0 : 0.0; }

// One evaluated point: values keyed by column name plus whether a demanded
// steady state was missing.
struct Point {
    std::map<std::string, Cell> values;
    bool unstable = false;
};

std::optional<Regime> command_regime(const std::string& command) {
    if (command == "cooling") return Regime::Cooling;
    if (command == "pa") return Regime::ParametricAmp;
    if (command == "parasitic") return Regime::ParasiticThreeMode;
    if (command == "bae") return Regime::BackActionEvading;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Point evaluations, one per subcommand.
// ---------------------------------------------------------------------------

const std::vector<std::string> kCouplingColumns = {"g_rad_per_s",       "g_Hz",
                                                   "phase_per_volt_rad_per_V", "voltage_zero_point_V",
                                                   "tau_s",             "omega_a_rad_per_s",
                                                   "omega_b_rad_per_s"};

Point evaluate_coupling(const json& doc) {
    if (!doc.contains("device")) throw ConfigError("config: the coupling command needs a 'device' block");
    EomDeviceParams dev;
    try {
        dev = device_from_json(doc.at("device"));
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("device: ") + e.what());
    }
    Point p;
    const double g = coupling_rate(dev);
    p.values = {{"g_rad_per_s", g},
                {"g_Hz", hz_from_angular(g)},
                {"phase_per_volt_rad_per_V", phase_per_volt(dev)},
                {"voltage_zero_point_V", voltage_zero_point(dev.omega_b, dev.C)},
                {"tau_s", dev.tau},
                {"omega_a_rad_per_s", dev.omega_a},
                {"omega_b_rad_per_s", dev.omega_b}};
    return p;
}

const std::vector<std::string> kCoolingColumns = {
    "g_rad_per_s", "gamma_a_rad_per_s", "gamma_b_rad_per_s", "alpha_minus_sq", "N_a",   "N_b",
    "G0",          "G",                 "G_limit",           "n_ss_closed_form", "n_ss_lyapunov", "stable",
    "max_re_eig_rad_per_s", "lyapunov_residual"};

Point evaluate_cooling(const ResolvedScenario& r) {
    const auto& sc = r.scenario;
    const auto sys = build_cooling_system(sc);
    const auto rep = steady_state(sys);
    const auto cf = cooling_figures(sc.g, r.pump_photons, sc.optical.gamma, sc.microwave.gamma, sc.n_a(), sc.n_b());
    Point p;
    p.unstable = !rep.stable;
    p.values = {{"g_rad_per_s", sc.g},
                {"gamma_a_rad_per_s", sc.optical.gamma},
                {"gamma_b_rad_per_s", sc.microwave.gamma},
                {"alpha_minus_sq", r.pump_photons},
                {"N_a", sc.n_a()},
                {"N_b", sc.n_b()},
                {"G0", cf.G0},
                {"G", cf.G},
                {"G_limit", cooling_limit(sc.optical.gamma, sc.microwave.gamma)},
                {"n_ss_closed_form", cf.n_ss},
                {"n_ss_lyapunov", rep.state ? occupation(*rep.state, "b") : kNaN},
                {"stable", flag(rep.stable)},
                {"max_re_eig_rad_per_s", rep.max_drift_eigenvalue_real_part},
                {"lyapunov_residual", rep.residual}};
    return p;
}

const std::vector<std::string> kPaColumns = {"g_rad_per_s", "gamma_a_rad_per_s", "gamma_b_rad_per_s", "alpha_plus_sq",
                                             "C_plus",      "above_threshold",   "stable",            "max_re_eig_rad_per_s",
                                             "n_a_ss",      "n_b_ss",            "log_negativity"};

Point evaluate_pa(const ResolvedScenario& r) {
    const auto& sc = r.scenario;
    const auto sys = build_parametric_system(sc);
    const auto rep = steady_state(sys);
    const double c_plus = pa_threshold(sc.g, r.pump_photons, sc.optical.gamma, sc.microwave.gamma);
    Point p;
    p.unstable = !rep.stable;
    p.values = {{"g_rad_per_s", sc.g},
                {"gamma_a_rad_per_s", sc.optical.gamma},
                {"gamma_b_rad_per_s", sc.microwave.gamma},
                {"alpha_plus_sq", r.pump_photons},
                {"C_plus", c_plus},
                {"above_threshold", flag(c_plus >= 1.0)},
                {"stable", flag(rep.stable)},
                {"max_re_eig_rad_per_s", rep.max_drift_eigenvalue_real_part},
                {"n_a_ss", rep.state ? occupation(*rep.state, "a") : kNaN},
                {"n_b_ss", rep.state ? occupation(*rep.state, "b") : kNaN},
                {"log_negativity", rep.state ? log_negativity(*rep.state, {"a", "b"}) : kNaN}};
    return p;
}

std::vector<std::string> parasitic_columns(const ResolvedScenario& r) {
    std::vector<std::string> cols = {"g_rad_per_s", "gamma_a_rad_per_s", "gamma_b_rad_per_s", "delta_rad_per_s",
                                     "mu",          "alpha0_sq",         "Gamma0",            "Gamma",
                                     "N_b",         "n_ss_closed_form",  "n_ss_lyapunov",     "linewidth_ratio",
                                     "coupling_ratio", "approximation_valid", "stable"};
    if (r.pump) {
        for (const char* c : {"delta_opt_rad_per_s", "mu_opt", "n_min", "alpha0_sq_opt", "optimum_bracketed"}) cols.push_back(c);
    }
    return cols;
}

Point evaluate_parasitic(const ResolvedScenario& r) {
    const auto& sc = r.scenario;
    const auto sys = build_parasitic_system(sc);
    const auto rep = steady_state(sys);
    const auto pf = parasitic_figures(sc.g, r.pump_photons, sc.optical.gamma, sc.microwave.gamma, sc.delta, sc.n_b());
    Point p;
    p.unstable = !rep.stable;
    p.values = {{"g_rad_per_s", sc.g},
                {"gamma_a_rad_per_s", sc.optical.gamma},
                {"gamma_b_rad_per_s", sc.microwave.gamma},
                {"delta_rad_per_s", sc.delta},
                {"mu", pf.mu},
                {"alpha0_sq", r.pump_photons},
                {"Gamma0", pf.Gamma0},
                {"Gamma", pf.Gamma},
                {"N_b", sc.n_b()},
                {"n_ss_closed_form", pf.n_ss},
                {"n_ss_lyapunov", rep.state ? occupation(*rep.state, "b") : kNaN},
                {"linewidth_ratio", pf.linewidth_ratio},
                {"coupling_ratio", pf.coupling_ratio},
                {"approximation_valid", flag(pf.approximation_valid)},
                {"stable", flag(rep.stable)}};
    if (r.pump) {
        const auto opt = optimal_parasitic_detuning(*r.pump, sc.g, sc.optical.gamma, sc.microwave.gamma, sc.n_b());
        p.values["delta_opt_rad_per_s"] = opt.delta_opt;
        p.values["mu_opt"] = opt.mu_opt;
        p.values["n_min"] = opt.n_min;
        p.values["alpha0_sq_opt"] = opt.alpha0_sq;
        p.values["optimum_bracketed"] = flag(opt.bracketed);
    }
    return p;
}

std::vector<std::string> point_columns(const std::string& command, Regime regime, const ResolvedScenario* r) {
    if (command == "coupling") return kCouplingColumns;
    switch (regime) {
        case Regime::Cooling: return kCoolingColumns;
        case Regime::ParametricAmp: return kPaColumns;
        case Regime::ParasiticThreeMode: return parasitic_columns(*r);
        case Regime::BackActionEvading: break;
    }
    throw ConfigError("the bae regime produces a time series; use the 'bae' command without a sweep");
}

Point evaluate_point(const std::string& command, const json& doc, std::uint64_t seed, Regime* regime_out) {
    if (command == "coupling") return evaluate_coupling(doc);
    const auto r = resolve_scenario(doc, command_regime(command), seed);
    if (regime_out) *regime_out = r.scenario.regime;
    switch (r.scenario.regime) {
        case Regime::Cooling: return evaluate_cooling(r);
        case Regime::ParametricAmp: return evaluate_pa(r);
        case Regime::ParasiticThreeMode: return evaluate_parasitic(r);
        case Regime::BackActionEvading: break;
    }
    throw ConfigError("the bae regime produces a time series; use the 'bae' command without a sweep");
}

std::vector<std::string> select_columns(const std::vector<std::string>& available, const std::vector<std::string>& requested) {
    if (requested.empty()) return available;
    for (const auto& name : requested) {
        if (std::find(available.begin(), available.end(), name) == available.end()) {
            throw ConfigError("config.outputs: unknown observable '" + name + "' for this command");
        }
    }
    return requested;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
    unsigned workers = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(m);
                if (!failure) failure = std::current_exception();
                next.store(n);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

// Evaluates the command at every sweep point; rows come back in sweep order.
Table point_table(const RunManifest& m, bool& any_unstable) {
    const auto axes = parse_sweep(m.scenario);
    std::optional<ResolvedScenario> base;
    Regime regime = Regime::Cooling;
    std::vector<std::string> requested;
    if (m.command != "coupling") {
        base = resolve_scenario(m.scenario, command_regime(m.command), m.seed);
        regime = base->scenario.regime;
        requested = base->outputs;
    } else if (m.scenario.contains("outputs")) {
        requested = m.scenario.at("outputs").get<std::vector<std::string>>();
    }
    if (m.command == "sweep" && axes.empty()) throw ConfigError("sweep: the sweep command needs at least one axis");

    const auto observables = select_columns(point_columns(m.command, regime, base ? &*base : nullptr), requested);

    std::vector<std::vector<double>> grid{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : grid) {
            for (double v : axis.values()) {
                auto point = prefix;
                point.push_back(v);
                next.push_back(std::move(point));
            }
        }
        grid = std::move(next);
    }

    Table table;
    for (const auto& axis : axes) table.columns.push_back(axis.path);
    table.columns.insert(table.columns.end(), observables.begin(), observables.end());
    table.rows.resize(grid.size());
    std::vector<char> unstable(grid.size(), 0);

    parallel_for(grid.size(), m.jobs, [&](std::size_t i) {
        json doc = m.scenario;
        for (std::size_t a = 0; a < axes.size(); ++a) set_path(doc, axes[a].path, grid[i][a]);
        doc.erase("sweep");
        const Point p = evaluate_point(m.command, doc, m.seed, nullptr);
        std::vector<Cell> row;
        for (double v : grid[i]) row.emplace_back(v);
        for (const auto& name : observables) row.push_back(p.values.at(name));
        table.rows[i] = std::move(row);
        unstable[i] = p.unstable;
    });
    any_unstable = std::any_of(unstable.begin(), unstable.end(), [](char c) { return c != 0; });
    return table;
}

GaussianStated initial_state(const ResolvedScenario& r, const StateBasis& basis) {
    auto state = vacuum_state<double>(basis);
    if (r.initial == "thermal") {
        for (const auto& mode : basis.modes()) {
            const double n = mode == "b" ? r.scenario.n_b() : r.scenario.n_a();
            const auto k = basis.mode_offset(mode);
            state.covariance(k, k) = state.covariance(k + 1, k + 1) = n + 0.5;
        }
    }
    return state;
}

std::string entry_column(const std::pair<std::string, std::string>& e) {
    return e.first == e.second ? "var_" + e.first : "cov_" + e.first + "__" + e.second;
}

// ---------------------------------------------------------------------------
// Comparison rows
// ---------------------------------------------------------------------------

const std::vector<std::string> kCompareColumns = {"observable", "closed_form", "lyapunov", "oracle", "oracle_se",
                                                  "closed_vs_lyapunov_rel", "oracle_z", "status"};

void add_compare_row(Table& t, const std::string& name, double closed, double lyap, double oracle, double se,
                     const Tolerances& tol, const std::string& failure = {}) {
    double rel = kNaN, z = kNaN;
    if (std::isfinite(closed) && std::isfinite(lyap)) {
        const double scale = std::max(std::abs(lyap), std::numeric_limits<double>::min());
        rel = std::abs(closed - lyap) / scale;
    }
    if (std::isfinite(oracle) && std::isfinite(lyap)) {
        if (se > 0.0) {
            z = (oracle - lyap) / se;
        } else {
            z = std::abs(oracle - lyap) <= 1e-12 * std::max(1.0, std::abs(lyap)) ? 0.0 : std::numeric_limits<double>::infinity();
        }
    }
    std::string status;
    if (!failure.empty()) {
        status = "error:" + failure;
    } else if (!std::isfinite(lyap)) {
        status = "fail";
    } else {
        const bool ok_closed = std::isnan(rel) || rel <= tol.closed_form_rel;
        const bool ok_oracle = std::isnan(z) || std::abs(z) <= tol.oracle_sigma;
        status = ok_closed && ok_oracle ? "pass" : "fail";
    }
    t.rows.push_back({name, closed, lyap, oracle, se, rel, z, status});
}

void sidecar_resolved(json& j, const ResolvedScenario& r) {
    const auto& sc = r.scenario;
    j = {{"regime", std::string(regime_name(sc.regime))},
         {"g_rad_per_s", sc.g},
         {"optical", to_json(sc.optical)},
         {"microwave", to_json(sc.microwave)},
         {"N_a", sc.n_a()},
         {"N_b", sc.n_b()},
         {"pump_photons", r.pump_photons},
         {"alpha_minus", sc.alpha_minus},
         {"alpha_plus", sc.alpha_plus},
         {"alpha0", sc.alpha0},
         {"theta_plus_rad", sc.theta_plus},
         {"theta_minus_rad", sc.theta_minus},
         {"delta_rad_per_s", sc.delta},
         {"include_microwave_bath", sc.include_microwave_bath}};
    if (r.device) j["device"] = to_json(*r.device);
    if (r.pump) j["pump"] = to_json(*r.pump);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Empirical stability verdict from the oracle alone: the total quadrature
// variance of a stable system saturates after burn-in, an unstable one keeps
// growing between the two snapshots (or overflows the divergence guard).
bool oracle_reports_stable(const LinearQuantumSystemd& sys, const TrajectoryEnsembleSpec& spec) {
    TrajectoryEnsembleSpec snap = spec;
    snap.trajectory_dump = nullptr;
    const double t1 = std::max(1.0, std::round(spec.burn_in / spec.dt)) * spec.dt;
    const double t2 = std::floor(spec.t_final / spec.dt + 1e-9) * spec.dt;
    snap.burn_in = 0.0;
    snap.t_final = t2;
    try {
        const auto m = simulate_snapshots(sys, snap, {t1, t2});
        const double v1 = m[0].covariance.trace(), v2 = m[1].covariance.trace();
        const double se = std::hypot(m[0].standard_errors.diagonal().norm(), m[1].standard_errors.diagonal().norm());
        return !(v2 - v1 > 3.0 * se && v2 > 1.5 * v1);
    } catch (const EnsembleDivergence&) {
        return false;
    }
}

}  // namespace

Table covariance_series_table(const ResolvedScenario& r) {
    const auto sys = build_system(r.scenario);
    for (const auto& e : r.covariance_entries) {
        sys.basis.index_of(e.first);
        sys.basis.index_of(e.second);
    }
    const auto series = evolve_covariance(sys, initial_state(r, sys.basis), r.dt, r.n_steps);
    Table t;
    t.columns.push_back("time_s");
    for (const auto& e : r.covariance_entries) t.columns.push_back(entry_column(e));
    for (std::size_t k = 0; k < series.states.size(); ++k) {
        std::vector<Cell> row{series.times[k]};
        for (const auto& e : r.covariance_entries) row.emplace_back(quadrature_covariance(series.states[k], e.first, e.second));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table compare_report(const ResolvedScenario& r, std::ostream* trajectory_dump) {
    const auto& sc = r.scenario;
    const auto sys = build_system(sc);
    Table t;
    t.columns = kCompareColumns;

    TrajectoryEnsembleSpec spec = r.oracle;
    spec.trajectory_dump = trajectory_dump;

    if (sc.regime == Regime::BackActionEvading) {
        const GaussianStated start = initial_state(r, sys.basis);
        const double t_end = static_cast<double>(r.n_steps) * r.dt;
        const auto series = evolve_covariance(sys, start, r.dt, r.n_steps);
        const auto& last = series.states.back();

        std::optional<MomentEstimate> oracle;
        std::string oracle_error;
        if (r.oracle_enabled) {
            try {
                TrajectoryEnsembleSpec snap = spec;
                snap.dt = r.dt;
                snap.t_final = t_end;
                snap.burn_in = 0.0;
                oracle = simulate_snapshots(sys, snap, {t_end}, start).front();
            } catch (const std::exception& e) {
                oracle_error = std::string("oracle: ") + e.what();
            }
        }
        const bool bath_off = !sc.include_microwave_bath;
        const double var_xa0 = quadrature_variance(start, "X_a");
        const double stationary_xa = 2.0 * sc.n_a() + 1.0;
        const double ga = sys.drift(sys.basis.index_of("Y_a"), sys.basis.index_of("X_b")) / 2.0;  // g|alpha|
        const std::map<std::string, double> closed = {
            {"X_a", stationary_xa + (var_xa0 - stationary_xa) * std::exp(-sc.optical.gamma * t_end)},
            {"X_b", bath_off ? quadrature_variance(start, "X_b") : kNaN},
            {"Y_b", bath_off ? bae_conjugate_variance(ga, sc.optical.gamma, sc.n_a(), var_xa0, quadrature_variance(start, "Y_b"), t_end)
                             : kNaN}};
        for (const std::string label : {"X_a", "X_b", "Y_b"}) {
            const auto k = sys.basis.index_of(label);
            add_compare_row(t, "var_" + label + "_at_t_end", closed.at(label), quadrature_variance(last, label),
                            oracle ? 2.0 * oracle->covariance(k, k) : kNaN, oracle ? 2.0 * oracle->standard_errors(k, k) : kNaN,
                            r.tolerances, oracle_error);
        }
        return t;
    }

    const auto rep = steady_state(sys);
    std::optional<MomentEstimate> oracle;
    std::string oracle_error;
    double oracle_stable = kNaN;
    if (r.oracle_enabled) {
        try {
            if (sc.regime == Regime::ParametricAmp) oracle_stable = flag(oracle_reports_stable(sys, spec));
            if (sc.regime != Regime::ParametricAmp || (rep.stable && oracle_stable == 1.0)) oracle = simulate_ensemble(sys, spec);
        } catch (const std::exception& e) {
            oracle_error = std::string("oracle: ") + e.what();
        }
    }

    const auto lyap_occ = [&](const std::string& mode) { return rep.state ? occupation(*rep.state, mode) : kNaN; };
    const auto oracle_occ = [&](const std::string& mode) {
        return oracle ? oracle->occupations(sys.basis.mode_offset(mode) / 2) : kNaN;
    };
    const auto oracle_se = [&](const std::string& mode) {
        return oracle ? oracle->occupation_standard_errors(sys.basis.mode_offset(mode) / 2) : kNaN;
    };

    switch (sc.regime) {
        case Regime::Cooling: {
            const auto cf = cooling_figures(sc.g, r.pump_photons, sc.optical.gamma, sc.microwave.gamma, sc.n_a(), sc.n_b());
            add_compare_row(t, "n_b", cf.n_ss, lyap_occ("b"), oracle_occ("b"), oracle_se("b"), r.tolerances, oracle_error);
            add_compare_row(t, "n_a", kNaN, lyap_occ("a"), oracle_occ("a"), oracle_se("a"), r.tolerances, oracle_error);
            break;
        }
        case Regime::ParasiticThreeMode: {
            const auto pf = parasitic_figures(sc.g, r.pump_photons, sc.optical.gamma, sc.microwave.gamma, sc.delta, sc.n_b());
            add_compare_row(t, "n_b", pf.n_ss, lyap_occ("b"), oracle_occ("b"), oracle_se("b"), r.tolerances, oracle_error);
            break;
        }
        case Regime::ParametricAmp: {
            const double c_plus = pa_threshold(sc.g, r.pump_photons, sc.optical.gamma, sc.microwave.gamma);
            const double closed_stable = flag(c_plus < 1.0);
            const double lyap_stable = flag(rep.stable);
            std::string status = "pass";
            if (!oracle_error.empty()) {
                status = "error:" + oracle_error;
            } else if (closed_stable != lyap_stable || (!std::isnan(oracle_stable) && oracle_stable != lyap_stable)) {
                status = "fail";
            }
            t.rows.push_back({std::string("stable"), closed_stable, lyap_stable, oracle_stable, kNaN, kNaN, kNaN, status});
            t.rows.push_back({std::string("C_plus"), c_plus, kNaN, kNaN, kNaN, kNaN, kNaN, std::string("info")});
            if (rep.stable) {
                add_compare_row(t, "n_b", kNaN, lyap_occ("b"), oracle_occ("b"), oracle_se("b"), r.tolerances, oracle_error);
                add_compare_row(t, "n_a", kNaN, lyap_occ("a"), oracle_occ("a"), oracle_se("a"), r.tolerances, oracle_error);
            }
            break;
        }
        case Regime::BackActionEvading: break;
    }
    return t;
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t k = 0; k < table.columns.size(); ++k) {
        if (k) out += ',';
        out += table.columns[k];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            out += cell_text(row[k]);
        }
        out += '\n';
    }
    return out;
}

json to_json(const Table& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json obj = json::object();
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (const auto* d = std::get_if<double>(&row[k])) {
                obj[table.columns[k]] = std::isfinite(*d) ? json(*d) : json(format_number(*d));
            } else {
                obj[table.columns[k]] = std::get<std::string>(row[k]);
            }
        }
        rows.push_back(std::move(obj));
    }
    return {{"columns", table.columns}, {"rows", std::move(rows)}};
}

RunOutcome run_scenario(const RunManifest& m) {
    RunOutcome outcome;
    static const std::vector<std::string> commands = {"coupling", "cooling", "pa", "parasitic", "bae", "compare", "sweep"};
    try {
        if (std::find(commands.begin(), commands.end(), m.command) == commands.end()) {
            throw ConfigError("unknown command '" + m.command + "'");
        }
        if (m.format != "csv" && m.format != "json") throw ConfigError("--format must be csv or json");

        std::optional<ResolvedScenario> resolved;
        bool unstable = false;
        if (m.command == "bae" || m.command == "compare") {
            resolved = resolve_scenario(m.scenario, command_regime(m.command), m.seed);
            if (!resolved->sweep.empty()) throw ConfigError("sweep: not supported by the '" + m.command + "' command");
            if (m.command == "bae") {
                outcome.table = covariance_series_table(*resolved);
            } else {
                std::ofstream dump;
                if (!m.trajectory_dump.empty()) {
                    dump.open(m.trajectory_dump);
                    if (!dump) throw ConfigError("cannot open trajectory dump file " + m.trajectory_dump.string());
                }
                outcome.table = compare_report(*resolved, dump.is_open() ? &dump : nullptr);
            }
        } else {
            outcome.table = point_table(m, unstable);
            if (m.command != "coupling") resolved = resolve_scenario(m.scenario, command_regime(m.command), m.seed);
        }

        std::filesystem::create_directories(m.out_dir);
        outcome.data_file = m.out_dir / (m.command + (m.format == "csv" ? ".csv" : ".json"));
        outcome.sidecar_file = m.out_dir / (m.command + ".run.json");
        {
            std::ofstream data(outcome.data_file, std::ios::binary);
            if (m.format == "csv") {
                data << to_csv(outcome.table);
            } else {
                data << to_json(outcome.table).dump(2) << '\n';
            }
            if (!data) throw Error("failed writing " + outcome.data_file.string());
        }

        const bool demand = !resolved || resolved->require_steady_state;
        if (unstable && demand) {
            outcome.exit_code = kExitUnstable;
            outcome.message = "no steady state: the drift is not Hurwitz at one or more points";
        }

        json side = {{"tool", kToolName},
                     {"version", kToolVersion},
                     {"command", m.command},
                     {"preset", m.preset},
                     {"seed", m.seed},
                     {"format", m.format},
                     {"config", m.scenario},
                     {"data_file", outcome.data_file.filename().string()},
                     {"exit_code", outcome.exit_code},
                     {"timestamp_utc", utc_timestamp()}};
        if (resolved) sidecar_resolved(side["resolved"], *resolved);
        std::ofstream(outcome.sidecar_file) << side.dump(2) << '\n';
        if (outcome.message.empty()) outcome.message = "ok";
    } catch (const ConfigError& e) {
        outcome.exit_code = kExitConfig;
        outcome.message = std::string("config error: ") + e.what();
    } catch (const json::exception& e) {
        outcome.exit_code = kExitConfig;
        outcome.message = std::string("config error: ") + e.what();
    } catch (const std::exception& e) {
        outcome.exit_code = kExitFailure;
        outcome.message = std::string("error: ") + e.what();
    }
    return outcome;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cavity electro-optics: linearized Langevin dynamics, Gaussian steady states and checks", kToolName};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    RunManifest manifest;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string dump;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"coupling", "device geometry -> coupling rate g"},
        {"cooling", "red-sideband cooling steady state"},
        {"pa", "blue-sideband parametric amplification and entanglement"},
        {"parasitic", "detuned center-mode pumping with parasitic down-conversion"},
        {"bae", "back-action-evading quadrature dynamics (time series)"},
        {"compare", "closed form vs Lyapunov vs stochastic oracle"},
        {"sweep", "parameter sweep of the regime named in the config"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--preset", manifest.preset, "preset name or JSON file");
        sub->add_option("--set", overrides, "override, e.g. --set optical.gamma_Hz=40e6")->allow_extra_args(false);
        sub->add_option("--out", manifest.out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "random seed (u64)");
        sub->add_option("--jobs", manifest.jobs, "worker threads, 0 = all cores");
        sub->add_option("--format", manifest.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        if (name == "compare") sub->add_option("--dump-trajectories", dump, "write per-trajectory CSV here");
        sub->callback([&manifest, name = name] { manifest.command = name; });
    }

    std::vector<std::string> argv_store{kToolName};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (!manifest.preset.empty()) manifest.scenario = load_preset(manifest.preset);
        for (const auto& o : overrides) apply_override(manifest.scenario, o);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (seed) {
        manifest.seed = *seed;
    } else if (manifest.scenario.contains("seed") && manifest.scenario.at("seed").is_number_unsigned()) {
        manifest.seed = manifest.scenario.at("seed").get<std::uint64_t>();
    }
    manifest.scenario.erase("seed");
    manifest.trajectory_dump = dump;

    const RunOutcome outcome = run_scenario(manifest);
    if (outcome.exit_code == kExitConfig || outcome.exit_code == kExitFailure) {
        err << outcome.message << '\n';
        return outcome.exit_code;
    }
    if (outcome.table.rows.size() == 1) {
        for (std::size_t k = 0; k < outcome.table.columns.size(); ++k) {
            out << outcome.table.columns[k] << " = " << cell_text(outcome.table.rows[0][k]) << '\n';
        }
    } else if (manifest.command == "compare") {
        out << to_csv(outcome.table);
    }
    out << "wrote " << outcome.data_file.string() << " (" << outcome.table.rows.size() << " rows) and "
        << outcome.sidecar_file.string() << '\n';
    if (outcome.exit_code != kExitOk) err << outcome.message << '\n';
    return outcome.exit_code;
}

}  // namespace cqeo::runner
