#include "cqeo/closed_form.hpp"

#include <cmath>
#include <string>

#include "cqeo/errors.hpp"

namespace cqeo {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw InvalidParameter(what);
}

void check_rates(double gamma_a, double gamma_b) {
    require(gamma_a > 0.0 && std::isfinite(gamma_a), "gamma_a must be positive");
    require(gamma_b > 0.0 && std::isfinite(gamma_b), "gamma_b must be positive");
}

}  // namespace

CoolingFigures cooling_figures(double g, double alpha_minus_sq, double gamma_a, double gamma_b, double n_a, double n_b) {
    check_rates(gamma_a, gamma_b);
    require(g >= 0.0, "g must be nonnegative");
    require(alpha_minus_sq >= 0.0, "|alpha_-|^2 must be nonnegative");
    require(n_a >= 0.0 && n_b >= 0.0, "occupations must be nonnegative");
    CoolingFigures f;
    f.G0 = 4.0 * g * g * alpha_minus_sq / (gamma_a * gamma_b);
    f.G = f.G0 / (1.0 + (gamma_b / gamma_a) * (1.0 + f.G0));
    f.n_ss = (n_b + f.G * n_a) / (1.0 + f.G);
    return f;
}

double cooling_limit(double gamma_a, double gamma_b) {
    check_rates(gamma_a, gamma_b);
    return gamma_a / gamma_b;
}

double mu_from_detuning(double gamma_a, double delta) {
    require(gamma_a > 0.0, "gamma_a must be positive");
    if (delta == 0.0) throw ZeroDetuning();
    return gamma_a * gamma_a / (16.0 * delta * delta);
}

double detuning_from_mu(double gamma_a, double mu) {
    require(gamma_a > 0.0, "gamma_a must be positive");
    require(mu > 0.0 && std::isfinite(mu), "mu must be positive");
    return gamma_a / (4.0 * std::sqrt(mu));
}

ParasiticFigures parasitic_figures(double g, double alpha0_sq, double gamma_a, double gamma_b, double delta, double n_b) {
    check_rates(gamma_a, gamma_b);
    require(g >= 0.0, "g must be nonnegative");
    require(alpha0_sq >= 0.0, "|alpha_0|^2 must be nonnegative");
    require(n_b >= 0.0, "N_b must be nonnegative");
    ParasiticFigures f;
    f.mu = mu_from_detuning(gamma_a, delta);
    f.Gamma0 = 4.0 * g * g * alpha0_sq / (gamma_a * gamma_b);
    f.Gamma = f.Gamma0 / (1.0 + f.mu);
    f.n_ss = (n_b + f.Gamma * f.mu) / (1.0 + f.Gamma);
    f.linewidth_ratio = gamma_b / gamma_a;
    f.coupling_ratio = 2.0 * g * std::sqrt(alpha0_sq) / gamma_a;
    f.approximation_valid = f.linewidth_ratio <= 0.1 && f.coupling_ratio <= 0.1;
    return f;
}

ParasiticOptimum optimal_parasitic_detuning(const PumpConfig& pump, double g, double gamma_a, double gamma_b, double n_b) {
    check_rates(gamma_a, gamma_b);
    require(n_b >= 0.0, "N_b must be nonnegative");

    // n_ss - N_b = Gamma (mu - N_b) / (1 + Gamma) has the same minimizer as n_ss
    // and does not lose the Gamma-dependence to cancellation when N_b is large.
    auto excess = [&](double log_delta) {
        PumpConfig p = pump;
        p.delta = std::exp(log_delta);
        const auto f = parasitic_figures(g, pump_photon_number(p, gamma_a), gamma_a, gamma_b, p.delta, n_b);
        return f.Gamma * (f.mu - n_b) / (1.0 + f.Gamma);
    };

    const double lo0 = std::log(gamma_a / 100.0);
    const double hi0 = std::log(100.0 * gamma_a);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = lo0, hi = hi0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = excess(x1), f2 = excess(x2);
    // Stop once the bracket in delta is below 1e-6 relative, i.e. |hi - lo| in log.
    int iterations = 0;
    while (hi - lo > 1e-6) {
        if (!std::isfinite(f1) || !std::isfinite(f2)) throw ConvergenceError("objective is not finite during detuning search");
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = excess(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = excess(x2);
        }
        if (++iterations > 500) throw ConvergenceError("golden-section search did not converge");
    }

    ParasiticOptimum out;
    const double log_opt = 0.5 * (lo + hi);
    out.delta_opt = std::exp(log_opt);
    out.mu_opt = mu_from_detuning(gamma_a, out.delta_opt);
    PumpConfig p = pump;
    p.delta = out.delta_opt;
    out.alpha0_sq = pump_photon_number(p, gamma_a);
    out.n_min = parasitic_figures(g, out.alpha0_sq, gamma_a, gamma_b, out.delta_opt, n_b).n_ss;
    const double edge = 1e-4 * (hi0 - lo0);
    out.bracketed = (log_opt - lo0) > edge && (hi0 - log_opt) > edge;
    return out;
}

double pa_threshold(double g, double alpha_plus_sq, double gamma_a, double gamma_b) {
    check_rates(gamma_a, gamma_b);
    require(g >= 0.0, "g must be nonnegative");
    require(alpha_plus_sq >= 0.0, "|alpha_+|^2 must be nonnegative");
    return 4.0 * g * g * alpha_plus_sq / (gamma_a * gamma_b);
}

double bae_conjugate_variance(double g_alpha, double gamma_a, double n_a, double var_xa0, double var_yb0, double t) {
    require(gamma_a > 0.0, "gamma_a must be positive");
    require(g_alpha >= 0.0 && n_a >= 0.0 && t >= 0.0, "g|alpha|, N_a and t must be nonnegative");
    const double lambda = 0.5 * gamma_a;
    const double stationary = 2.0 * n_a + 1.0;
    const double decay = -std::expm1(-lambda * t);  // 1 - e^{-lambda t}
    // Var(int_0^t X_a) for an Ornstein-Uhlenbeck process started off stationarity.
    const double integrated = 2.0 * stationary / lambda * (t - decay / lambda) +
                              (var_xa0 - stationary) * decay * decay / (lambda * lambda);
    return var_yb0 + 4.0 * g_alpha * g_alpha * integrated;
}

}  // namespace cqeo
