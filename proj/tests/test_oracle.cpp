#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cqeo/builders.hpp"
#include "cqeo/closed_form.hpp"
#include "cqeo/oracle.hpp"
#include "cqeo/philox.hpp"
#include "cqeo/solver.hpp"

using namespace cqeo;

namespace {

LinearQuantumSystemd single_mode(double gamma, double n) {
    LinearQuantumSystemd sys;
    sys.regime = "single-mode";
    sys.basis = StateBasis({"a"});
    sys.noise_inputs = {{"A", "a", n, gamma}};
    sys.drift = -0.5 * gamma * Eigen::MatrixXd::Identity(2, 2);
    sys.diffusion = sys.diffusion_from_inputs();
    return sys;
}

TrajectoryEnsembleSpec spec(std::size_t n, double dt, double burn_in, double t_final, std::uint64_t seed) {
    TrajectoryEnsembleSpec s;
    s.n_trajectories = n;
    s.dt = dt;
    s.burn_in = burn_in;
    s.t_final = t_final;
    s.seed = seed;
    return s;
}

bool identical(const MomentEstimate& a, const MomentEstimate& b) {
    return a.mean == b.mean && a.covariance == b.covariance && a.standard_errors == b.standard_errors &&
           a.occupations == b.occupations && a.n_samples == b.n_samples;
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32(Philox4x32::Key{0, 0})(C{0, 0, 0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32(Philox4x32::Key{0xffffffff, 0xffffffff})(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32(Philox4x32::Key{0xa4093822, 0x299f31d0})(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("Box-Muller normals have unit moments") {
    const Philox4x32 rng(123u);
    double s1 = 0, s2 = 0, s4 = 0;
    const int n = 200000;
    for (std::uint32_t k = 0; k < n / 2; ++k) {
        for (double z : normal_pair(rng({k, 0, 0, 0}))) {
            CHECK(std::isfinite(z));
            s1 += z;
            s2 += z * z;
            s4 += z * z * z * z;
        }
    }
    CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(n));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(5.0 * std::sqrt(2.0 / n)));
    CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("diffusion factorization") {
    CHECK((factor_diffusion(Eigen::MatrixXd::Identity(3, 3)) * factor_diffusion(Eigen::MatrixXd::Identity(3, 3)).transpose() -
           Eigen::MatrixXd::Identity(3, 3))
              .norm() < 1e-15);
    CHECK(factor_diffusion(Eigen::MatrixXd::Zero(4, 4)).norm() == 0.0);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 50; ++k) {
        Eigen::MatrixXd m(6, 3 + k % 4);
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = nd(rng);
        const Eigen::MatrixXd d = m * m.transpose();  // rank deficient when cols < 6
        const Eigen::MatrixXd b = factor_diffusion(d);
        CHECK((b * b.transpose() - d).norm() <= 1e-10 * d.norm());
    }

    Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
    indefinite(1, 1) = -0.25;
    try {
        factor_diffusion(indefinite);
        FAIL("indefinite diffusion accepted");
    } catch (const IndefiniteDiffusion& e) {
        CHECK(e.eigenvalue() == doctest::Approx(-0.25));
    }
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.3;
    CHECK_THROWS_AS(factor_diffusion(asym), IndefiniteDiffusion);
}

TEST_CASE("spec validation") {
    const auto sys = single_mode(1.0, 0.0);
    CHECK_THROWS_AS(simulate_ensemble(sys, spec(1, 0.1, 0, 1, 0)), InvalidParameter);
    CHECK_THROWS_AS(simulate_ensemble(sys, spec(10, 0.0, 0, 1, 0)), InvalidParameter);
    CHECK_THROWS_AS(simulate_ensemble(sys, spec(10, 0.1, 2, 1, 0)), InvalidParameter);
    auto bad = sys;
    bad.diffusion(0, 0) = -1.0;
    CHECK_THROWS_AS(simulate_ensemble(bad, spec(10, 0.1, 0, 1, 0)), IndefiniteDiffusion);
}

TEST_CASE("single damped thermal mode") {
    const auto sys = single_mode(1.0, 2.0);
    const auto est = simulate_ensemble(sys, spec(2000, 0.5, 10.0, 60.0, 99));
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(est.covariance(i, i) - 2.5) < 3.0 * est.standard_errors(i, i));
        CHECK(std::abs(est.mean(i)) < 3.0 * est.mean_standard_errors(i));
    }
    CHECK(std::abs(est.covariance(0, 1)) < 3.0 * est.standard_errors(0, 1));
    CHECK(std::abs(est.occupations(0) - 2.0) < 3.0 * est.occupation_standard_errors(0));
    CHECK(est.covariance == est.covariance.transpose());
    CHECK((est.standard_errors.array() > 0.0).all());
    CHECK(est.n_effective > 100.0);
    CHECK(est.n_samples == 2000u * 101u);
}

TEST_CASE("reported standard errors are calibrated") {
    // z-scores of the three covariance entries over many seeds should have unit spread.
    const auto sys = single_mode(1.0, 1.0);
    double sum = 0, sum2 = 0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto est = simulate_ensemble(sys, spec(256, 0.5, 10.0, 110.0, 1000 + seed));
        const double exact[3] = {1.5, 1.5, 0.0};
        const double value[3] = {est.covariance(0, 0), est.covariance(1, 1), est.covariance(0, 1)};
        const double se[3] = {est.standard_errors(0, 0), est.standard_errors(1, 1), est.standard_errors(0, 1)};
        for (int k = 0; k < 3; ++k) {
            const double z = (value[k] - exact[k]) / se[k];
            sum += z;
            sum2 += z * z;
            ++count;
        }
    }
    const double rms = std::sqrt(sum2 / count);
    CHECK(rms > 0.8);
    CHECK(rms < 1.25);
}

TEST_CASE("seed determinism and thread independence") {
    auto cfg = ScenarioConfig{};
    cfg.regime = Regime::Cooling;
    cfg.g = 0.1;
    cfg.optical = {1e3, 1.0, 0.0};
    cfg.microwave = {1.0, 0.2, 0.0};
    cfg.alpha_minus = 2.0;
    cfg.optical_occupation = 0.5;
    cfg.microwave_occupation = 5.0;
    const auto sys = build_cooling_system(cfg);
    auto s = spec(300, 0.5, 20.0, 80.0, 42);
    s.jobs = 1;
    const auto a = simulate_ensemble(sys, s);
    s.jobs = 7;
    const auto b = simulate_ensemble(sys, s);
    CHECK(identical(a, b));
    s.seed = 43;
    CHECK_FALSE(identical(a, simulate_ensemble(sys, s)));
}

TEST_CASE("cooling occupation against the closed form") {
    ScenarioConfig cfg;
    cfg.regime = Regime::Cooling;
    cfg.g = 0.1;
    cfg.optical = {1e3, 1.0, 0.0};
    cfg.microwave = {1.0, 0.2, 0.0};
    cfg.alpha_minus = 2.0;
    cfg.optical_occupation = 0.5;
    cfg.microwave_occupation = 5.0;
    const auto est = simulate_ensemble(build_cooling_system(cfg), spec(2000, 2.5, 50.0, 300.0, 7));
    const auto cf = cooling_figures(0.1, 4.0, 1.0, 0.2, 0.5, 5.0);
    CHECK(std::abs(est.occupations(1) - cf.n_ss) < 3.0 * est.occupation_standard_errors(1));
}

TEST_CASE("Euler-Maruyama agrees at small steps") {
    const auto sys = single_mode(1.0, 2.0);
    auto s = spec(1000, 0.01, 10.0, 40.0, 5);
    s.scheme = Scheme::EulerMaruyama;
    s.sample_stride = 50;
    const auto est = simulate_ensemble(sys, s);
    CHECK(std::abs(est.covariance(0, 0) - 2.5) < 3.0 * est.standard_errors(0, 0));
}

TEST_CASE("back-action evasion in time bins") {
    ScenarioConfig cfg;
    cfg.regime = Regime::BackActionEvading;
    cfg.g = 0.05;
    cfg.optical = {1e3, 1.0, 0.0};
    cfg.microwave = {1.0, 0.01, 0.0};
    cfg.alpha_plus = cfg.alpha_minus = 2.0;
    const auto sys = build_bae_system(cfg);
    const auto snaps = simulate_snapshots(sys, spec(3000, 0.5, 0.0, 100.0, 11), {10.0, 40.0, 70.0, 100.0});
    const auto xb = sys.basis.index_of("X_b"), yb = sys.basis.index_of("Y_b");
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        CHECK(std::abs(snaps[k].covariance(xb, xb) - 0.5) < 3.0 * snaps[k].standard_errors(xb, xb));
        if (k > 0) CHECK(snaps[k].covariance(yb, yb) > snaps[k - 1].covariance(yb, yb));
    }
    CHECK(std::abs(2.0 * snaps.back().covariance(yb, yb) - 16.68) < 3.0 * 2.0 * snaps.back().standard_errors(yb, yb));
    CHECK_THROWS_AS(simulate_snapshots(sys, spec(10, 0.5, 0.0, 100.0, 1), {10.25}), InvalidParameter);
    CHECK_THROWS_AS(simulate_snapshots(sys, spec(10, 0.5, 0.0, 100.0, 1), {200.0}), InvalidParameter);
}

TEST_CASE("unstable systems are reported") {
    ScenarioConfig cfg;
    cfg.regime = Regime::ParametricAmp;
    cfg.g = 0.1;
    cfg.optical = {1e3, 1.0, 0.0};
    cfg.microwave = {1.0, 0.5, 0.0};
    cfg.alpha_plus = std::sqrt(3.0 * 0.5) / 0.2;  // C+ = 3
    CHECK_THROWS_AS(simulate_ensemble(build_parametric_system(cfg), spec(20, 0.5, 0.0, 3000.0, 1)), EnsembleDivergence);
}

TEST_CASE("refinement pair shares Brownian paths") {
    const auto sys = single_mode(1.0, 2.0);
    auto s = spec(1000, 0.5, 10.0, 60.0, 3);
    const auto pair = simulate_refinement_pair(sys, s);
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(pair.fine.covariance(i, i) - pair.coarse.covariance(i, i)) < pair.coarse.standard_errors(i, i));
    }
    s.scheme = Scheme::EulerMaruyama;
    s.dt = 0.02;
    const auto em = simulate_refinement_pair(sys, s);
    CHECK(std::abs(em.fine.covariance(0, 0) - em.coarse.covariance(0, 0)) < em.coarse.standard_errors(0, 0));
}

TEST_CASE("trajectory dump") {
    const auto sys = single_mode(1.0, 0.0);
    std::ostringstream os;
    auto s = spec(3, 0.5, 0.0, 1.0, 1);
    s.trajectory_dump = &os;
    simulate_ensemble(sys, s);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "trajectory_id,time_s,X_a,Y_a");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3 * 3);
    CHECK(os.str().find("\n0,0,") != std::string::npos);
}
