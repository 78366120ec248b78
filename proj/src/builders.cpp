#include "cqeo/builders.hpp"

#include <cmath>
#include <complex>

#include "cqeo/errors.hpp"

namespace cqeo {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

// Accumulates complex amplitude equations dc_i/dt = sum kappa c_j (+ kappa c_j^dagger)
// and expands them into the real quadrature drift with c = (x + i y)/sqrt(2).
class QuadratureDrift {
public:
    explicit QuadratureDrift(Eigen::Index modes) : a_(Eigen::MatrixXd::Zero(2 * modes, 2 * modes)) {}

    // kappa c_j  ->  [[Re, -Im], [Im, Re]]
    void couple(Eigen::Index i, Eigen::Index j, cplx kappa) {
        a_(2 * i, 2 * j) += kappa.real();
        a_(2 * i, 2 * j + 1) -= kappa.imag();
        a_(2 * i + 1, 2 * j) += kappa.imag();
        a_(2 * i + 1, 2 * j + 1) += kappa.real();
    }

    // kappa c_j^dagger  ->  [[Re, Im], [Im, -Re]]
    void couple_conjugate(Eigen::Index i, Eigen::Index j, cplx kappa) {
        a_(2 * i, 2 * j) += kappa.real();
        a_(2 * i, 2 * j + 1) += kappa.imag();
        a_(2 * i + 1, 2 * j) += kappa.imag();
        a_(2 * i + 1, 2 * j + 1) -= kappa.real();
    }

    void damp(Eigen::Index i, double gamma) { couple(i, i, cplx(-0.5 * gamma, 0.0)); }

    const Eigen::MatrixXd& matrix() const { return a_; }

private:
    Eigen::MatrixXd a_;
};

void expect_regime(const ScenarioConfig& cfg, Regime wanted) {
    if (cfg.regime != wanted) {
        throw WrongRegime("builder for '" + std::string(regime_name(wanted)) + "' called with regime '" +
                          std::string(regime_name(cfg.regime)) + "'");
    }
}

void require_rate(double value, const char* name, bool strictly_positive = true) {
    const bool ok = strictly_positive ? value > 0.0 : value >= 0.0;
    if (!ok || !std::isfinite(value)) throw InvalidParameter(std::string(name) + " out of range");
}

void check_common(const ScenarioConfig& cfg) {
    require_rate(cfg.g, "g", false);
    require_rate(cfg.optical.gamma, "optical gamma");
    require_rate(cfg.alpha_minus, "|alpha_-|", false);
    require_rate(cfg.alpha_plus, "|alpha_+|", false);
    require_rate(cfg.alpha0, "|alpha_0|", false);
    require_rate(cfg.n_a(), "optical occupation", false);
    require_rate(cfg.n_b(), "microwave occupation", false);
}

LinearQuantumSystemd finish(std::string regime, std::vector<std::string> modes, const QuadratureDrift& drift,
                            std::vector<NoiseInput> inputs) {
    LinearQuantumSystemd sys;
    sys.regime = std::move(regime);
    sys.basis = StateBasis(std::move(modes));
    sys.drift = drift.matrix();
    sys.noise_inputs = std::move(inputs);
    sys.diffusion = sys.diffusion_from_inputs();
    sys.check_dimensions();
    return sys;
}

}  // namespace

std::string_view regime_name(Regime regime) {
    switch (regime) {
        case Regime::Cooling: return "cooling";
        case Regime::ParametricAmp: return "parametric";
        case Regime::ParasiticThreeMode: return "parasitic";
        case Regime::BackActionEvading: return "bae";
    }
    return "unknown";
}

Regime regime_from_name(std::string_view name) {
    if (name == "cooling") return Regime::Cooling;
    if (name == "parametric" || name == "pa") return Regime::ParametricAmp;
    if (name == "parasitic") return Regime::ParasiticThreeMode;
    if (name == "bae") return Regime::BackActionEvading;
    throw InvalidParameter("unknown regime '" + std::string(name) + "'");
}

LinearQuantumSystemd build_cooling_system(const ScenarioConfig& cfg) {
    expect_regime(cfg, Regime::Cooling);
    check_common(cfg);
    require_rate(cfg.microwave.gamma, "microwave gamma");

    const cplx alpha = std::polar(cfg.alpha_minus, cfg.theta_minus);
    QuadratureDrift drift(2);
    drift.couple(0, 1, I * cfg.g * alpha);
    drift.couple(1, 0, I * cfg.g * std::conj(alpha));
    drift.damp(0, cfg.optical.gamma);
    drift.damp(1, cfg.microwave.gamma);
    return finish("cooling", {"a", "b"}, drift,
                  {{"A", "a", cfg.n_a(), cfg.optical.gamma}, {"B", "b", cfg.n_b(), cfg.microwave.gamma}});
}

LinearQuantumSystemd build_parametric_system(const ScenarioConfig& cfg) {
    expect_regime(cfg, Regime::ParametricAmp);
    check_common(cfg);
    require_rate(cfg.microwave.gamma, "microwave gamma");

    const cplx alpha = std::polar(cfg.alpha_plus, cfg.theta_plus);
    QuadratureDrift drift(2);
    drift.couple_conjugate(0, 1, I * cfg.g * alpha);
    drift.couple_conjugate(1, 0, I * cfg.g * alpha);
    drift.damp(0, cfg.optical.gamma);
    drift.damp(1, cfg.microwave.gamma);
    return finish("parametric", {"a", "b"}, drift,
                  {{"A", "a", cfg.n_a(), cfg.optical.gamma}, {"B", "b", cfg.n_b(), cfg.microwave.gamma}});
}

LinearQuantumSystemd build_parasitic_system(const ScenarioConfig& cfg) {
    expect_regime(cfg, Regime::ParasiticThreeMode);
    check_common(cfg);
    require_rate(cfg.microwave.gamma, "microwave gamma");
    if (cfg.delta == 0.0) throw ZeroDetuning();
    if (!std::isfinite(cfg.delta)) throw InvalidParameter("delta must be finite");
    require_rate(cfg.sideband_occupation_minus, "N(omega_a - Delta omega)", false);
    require_rate(cfg.sideband_occupation_plus, "N(omega_a + Delta omega)", false);

    constexpr Eigen::Index am = 0, ap = 1, b = 2;
    const cplx alpha0{cfg.alpha0, 0.0};
    QuadratureDrift drift(3);
    drift.couple(am, am, I * 2.0 * cfg.delta);
    drift.couple_conjugate(am, b, I * cfg.g * alpha0);
    drift.couple(ap, b, I * cfg.g * alpha0);
    drift.couple(b, ap, I * cfg.g * std::conj(alpha0));
    drift.couple_conjugate(b, am, I * cfg.g * alpha0);
    drift.damp(am, cfg.optical.gamma);
    drift.damp(ap, cfg.optical.gamma);
    drift.damp(b, cfg.microwave.gamma);
    return finish("parasitic", {"am", "ap", "b"}, drift,
                  {{"A_minus", "am", cfg.sideband_occupation_minus, cfg.optical.gamma},
                   {"A_plus", "ap", cfg.sideband_occupation_plus, cfg.optical.gamma},
                   {"B", "b", cfg.n_b(), cfg.microwave.gamma}});
}

LinearQuantumSystemd build_bae_system(const ScenarioConfig& cfg) {
    expect_regime(cfg, Regime::BackActionEvading);
    check_common(cfg);
    const double scale = std::max(cfg.alpha_plus, cfg.alpha_minus);
    if (std::abs(cfg.alpha_plus - cfg.alpha_minus) > 1e-12 * scale) {
        throw UnequalSidebands("back-action evasion needs |alpha_+| == |alpha_-|");
    }

    // In the frames a' = e^{-i theta} a, b' = e^{-i nu} b both couplings reduce to
    // i g|alpha| (c' + c'^dagger), so X_a, Y_a, X_b, Y_b are plain quadratures of a', b'.
    const cplx k = I * cfg.g * cfg.alpha_plus;
    QuadratureDrift drift(2);
    drift.couple(0, 1, k);
    drift.couple_conjugate(0, 1, k);
    drift.couple(1, 0, k);
    drift.couple_conjugate(1, 0, k);
    drift.damp(0, cfg.optical.gamma);

    std::vector<NoiseInput> inputs{{"A", "a", cfg.n_a(), cfg.optical.gamma}};
    if (cfg.include_microwave_bath) {
        require_rate(cfg.microwave.gamma, "microwave gamma");
        drift.damp(1, cfg.microwave.gamma);
        inputs.push_back({"B", "b", cfg.n_b(), cfg.microwave.gamma});
    }
    return finish("bae", {"a", "b"}, drift, std::move(inputs));
}

LinearQuantumSystemd build_system(const ScenarioConfig& cfg) {
    switch (cfg.regime) {
        case Regime::Cooling: return build_cooling_system(cfg);
        case Regime::ParametricAmp: return build_parametric_system(cfg);
        case Regime::ParasiticThreeMode: return build_parasitic_system(cfg);
        case Regime::BackActionEvading: return build_bae_system(cfg);
    }
    throw WrongRegime("unhandled regime");
}

}  // namespace cqeo
