#pragma once

#include "cqeo/physics_params.hpp"

namespace cqeo {

/// Red-sideband cooling figures of merit for the two-mode beam-splitter model.
struct CoolingFigures {
    double G0 = 0.0;    ///< bare cooperativity 4 g^2 |alpha_-|^2 / (gamma_a gamma_b)
    double G = 0.0;     ///< G0 / (1 + (gamma_b/gamma_a)(1 + G0))
    double n_ss = 0.0;  ///< (N_b + G N_a) / (1 + G)
};

CoolingFigures cooling_figures(double g, double alpha_minus_sq, double gamma_a, double gamma_b, double n_a, double n_b);

/// Saturated cooling gain, gamma_a / gamma_b.
double cooling_limit(double gamma_a, double gamma_b);

// Parasitic down-conversion through the blue optical mode. The expressions
// assume N(omega_a +- Delta omega) = 0, gamma_b << gamma_a and 2 g |alpha_0| << gamma_a.
struct ParasiticFigures {
    double Gamma0 = 0.0;  ///< 4 g^2 |alpha_0|^2 / (gamma_a gamma_b)
    double Gamma = 0.0;   ///< Gamma0 / (1 + mu)
    double mu = 0.0;      ///< gamma_a^2 / (16 delta^2), also the occupation floor
    double n_ss = 0.0;    ///< (N_b + Gamma mu) / (1 + Gamma)

    double linewidth_ratio = 0.0;   ///< gamma_b / gamma_a
    double coupling_ratio = 0.0;    ///< 2 g |alpha_0| / gamma_a
    bool approximation_valid = false;  ///< both ratios <= 0.1
};

ParasiticFigures parasitic_figures(double g, double alpha0_sq, double gamma_a, double gamma_b, double delta, double n_b);

double mu_from_detuning(double gamma_a, double delta);
/// Positive detuning giving mu.
double detuning_from_mu(double gamma_a, double mu);

struct ParasiticOptimum {
    double delta_opt = 0.0;  ///< rad/s
    double mu_opt = 0.0;
    double n_min = 0.0;
    double alpha0_sq = 0.0;  ///< pump photon number at delta_opt
    /// False when the minimum sits on an edge of the search interval, i.e. the
    /// objective keeps decreasing outside [gamma_a/100, 100 gamma_a].
    bool bracketed = false;
};

/// Minimizes the parasitic steady occupation over delta > 0 with the pump photon
/// number |alpha_0|^2(delta) of `pump` folded in (pump.delta is ignored).
/// Golden-section search over log(delta) in [gamma_a/100, 100 gamma_a].
ParasiticOptimum optimal_parasitic_detuning(const PumpConfig& pump, double g, double gamma_a, double gamma_b, double n_b);

/// Blue-sideband cooperativity C+ = 4 g^2 |alpha_+|^2 / (gamma_a gamma_b); C+ >= 1
/// is above the oscillation threshold.
double pa_threshold(double g, double alpha_plus_sq, double gamma_a, double gamma_b);

/// Var(Y_b)(t) under back-action-evading pumping with no microwave damping,
/// from integrating dY_b/dt = 2 g|alpha| X_a while X_a relaxes from its initial
/// variance towards 2 N_a + 1 at rate gamma_a/2. Variances use the vacuum = 1
/// normalization of X = c + c^dagger; X_a and Y_b start uncorrelated.
double bae_conjugate_variance(double g_alpha, double gamma_a, double n_a, double var_xa0, double var_yb0, double t);

}  // namespace cqeo
