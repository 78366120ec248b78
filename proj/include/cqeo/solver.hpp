#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cqeo/errors.hpp"
#include "cqeo/gaussian_state.hpp"
#include "cqeo/linear_system.hpp"

namespace cqeo {

// ---------------------------------------------------------------------------
// Linear algebra kernels
// ---------------------------------------------------------------------------

/// Solves A V + V A^T + D = 0 through the Kronecker form
/// (I (x) A + A (x) I) vec(V) = -vec(D). Intended for dim <= 8.
template <typename DerivedA, typename DerivedD>
MatrixX<typename DerivedA::Scalar> solve_lyapunov(const Eigen::MatrixBase<DerivedA>& A,
                                                   const Eigen::MatrixBase<DerivedD>& D) {
    using Scalar = typename DerivedA::Scalar;
    const auto n = A.rows();
    if (A.cols() != n || D.rows() != n || D.cols() != n) throw DimensionMismatch("Lyapunov operands must be square and equal size");
    const auto nn = n * n;
    MatrixX<Scalar> kron = MatrixX<Scalar>::Zero(nn, nn);
    for (Eigen::Index j = 0; j < n; ++j) {
        // column block j of vec(V): A V contributes A on the diagonal block,
        // V A^T contributes A(j, k) I in block (j, k).
        kron.block(j * n, j * n, n, n) += A;
        for (Eigen::Index k = 0; k < n; ++k) {
            kron.block(j * n, k * n, n, n).diagonal().array() += A(j, k);
        }
    }
    const MatrixX<Scalar> d = D;
    const Eigen::Map<const VectorX<Scalar>> rhs(d.data(), nn);
    const Eigen::FullPivLU<MatrixX<Scalar>> lu(kron);
    VectorX<Scalar> x = lu.solve(-rhs);
    // One round of refinement; cheap at these sizes.
    const VectorX<Scalar> r = -rhs - kron * x;
    x += lu.solve(r);
    MatrixX<Scalar> v = Eigen::Map<MatrixX<Scalar>>(x.data(), n, n);
    return Scalar(0.5) * (v + v.transpose());
}

template <typename DerivedA, typename DerivedV, typename DerivedD>
typename DerivedA::Scalar lyapunov_residual(const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedV>& V,
                                            const Eigen::MatrixBase<DerivedD>& D) {
    return (A * V + V * A.transpose() + D).norm();
}

/// Largest real part over the eigenvalues of A.
template <typename Derived>
typename Derived::Scalar max_real_eigenvalue(const Eigen::MatrixBase<Derived>& A) {
    using Scalar = typename Derived::Scalar;
    const MatrixX<Scalar> a = A;
    Eigen::EigenSolver<MatrixX<Scalar>> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

/// Exact one-step discretization of du = A u dt + dW, <dW dW^T> = D dt:
/// u(t + dt) = transition u(t) + w, w ~ N(0, noise).
template <typename Scalar>
struct DiscreteStep {
    MatrixX<Scalar> transition;
    MatrixX<Scalar> noise;
};

// Van Loan block exponential: exp([[-A, D], [0, A^T]] dt) = [[., F^-1 Q], [0, F^T]].
template <typename DerivedA, typename DerivedD>
DiscreteStep<typename DerivedA::Scalar> discretize(const Eigen::MatrixBase<DerivedA>& A,
                                                   const Eigen::MatrixBase<DerivedD>& D, double dt) {
    using Scalar = typename DerivedA::Scalar;
    const auto n = A.rows();
    MatrixX<Scalar> m = MatrixX<Scalar>::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = -A;
    m.topRightCorner(n, n) = D;
    m.bottomRightCorner(n, n) = A.transpose();
    const MatrixX<Scalar> e = (m * Scalar(dt)).exp();
    DiscreteStep<Scalar> step;
    step.transition = e.bottomRightCorner(n, n).transpose();
    const MatrixX<Scalar> q = step.transition * e.topRightCorner(n, n);
    step.noise = Scalar(0.5) * (q + q.transpose());
    return step;
}

// ---------------------------------------------------------------------------
// Steady state and transients
// ---------------------------------------------------------------------------

template <typename Scalar>
struct SolverReport {
    std::optional<GaussianState<Scalar>> state;  ///< present iff stable
    bool stable = false;
    Scalar max_drift_eigenvalue_real_part = Scalar(0);
    Scalar residual = std::numeric_limits<Scalar>::quiet_NaN();
};

using SolverReportd = SolverReport<double>;

struct StabilityOptions {
    /// Drift counts as Hurwitz when max Re(eig) < -margin_scale * |A|.
    double margin_scale = 1e-12;
};

/// Unique steady state of a Hurwitz system, or stable = false otherwise.
template <typename Scalar>
SolverReport<Scalar> steady_state(const LinearQuantumSystem<Scalar>& sys, StabilityOptions options = {}) {
    sys.check_dimensions();
    SolverReport<Scalar> report;
    report.max_drift_eigenvalue_real_part = max_real_eigenvalue(sys.drift);
    const Scalar margin = Scalar(options.margin_scale) * sys.drift.norm();
    report.stable = report.max_drift_eigenvalue_real_part < -margin;
    if (!report.stable) return report;

    MatrixX<Scalar> v = solve_lyapunov(sys.drift, sys.diffusion);
    report.residual = lyapunov_residual(sys.drift, v, sys.diffusion);
    report.state = GaussianState<Scalar>{sys.basis, VectorX<Scalar>::Zero(sys.dim()), std::move(v)};
    return report;
}

template <typename Scalar>
struct CovarianceSeries {
    std::vector<double> times;  ///< s, starting at 0
    std::vector<GaussianState<Scalar>> states;
};

/// Propagates mean and covariance with the exact per-step transition
/// V <- F V F^T + Q, symmetrizing after every step. Returns n_steps + 1 states.
template <typename Scalar>
CovarianceSeries<Scalar> evolve_covariance(const LinearQuantumSystem<Scalar>& sys, const GaussianState<Scalar>& initial,
                                           double dt, std::size_t n_steps) {
    sys.check_dimensions();
    initial.check_dimensions();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
    if (!(initial.basis == sys.basis)) throw DimensionMismatch("initial state basis differs from the system basis");
    if (!is_physical(initial.covariance, 1e-9)) throw UnphysicalState("initial covariance violates the uncertainty principle");

    const auto step = discretize(sys.drift, sys.diffusion, dt);
    if (!step.transition.allFinite() || !step.noise.allFinite()) {
        throw StepInstability("matrix exponential overflowed; use a smaller dt");
    }

    // Blow-up guard for stable systems: covariance can never exceed the larger
    // of its start and its stationary value by orders of magnitude.
    Scalar bound = std::numeric_limits<Scalar>::infinity();
    if (max_real_eigenvalue(sys.drift) < Scalar(0)) {
        const MatrixX<Scalar> vss = solve_lyapunov(sys.drift, sys.diffusion);
        bound = Scalar(1e6) * (Scalar(1) + initial.covariance.norm() + vss.norm());
    }

    CovarianceSeries<Scalar> series;
    series.times.reserve(n_steps + 1);
    series.states.reserve(n_steps + 1);
    series.times.push_back(0.0);
    series.states.push_back(initial);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const auto& prev = series.states.back();
        GaussianState<Scalar> next{sys.basis, step.transition * prev.mean, MatrixX<Scalar>()};
        const MatrixX<Scalar> v = step.transition * prev.covariance * step.transition.transpose() + step.noise;
        next.covariance = Scalar(0.5) * (v + v.transpose());
        if (!next.covariance.allFinite() || next.covariance.norm() > bound) {
            throw StepInstability("covariance blew up at step " + std::to_string(k) + "; retry with a smaller dt than " +
                                  std::to_string(dt) + " s");
        }
        series.times.push_back(static_cast<double>(k) * dt);
        series.states.push_back(std::move(next));
    }
    return series;
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

/// <c^dagger c> of one mode: (V_XX + V_YY)/2 - 1/2 + (m_X^2 + m_Y^2)/2 in the
/// internal convention, i.e. (Var X + Var Y)/4 - 1/2 + ... in the reported one.
template <typename Scalar>
Scalar occupation(const GaussianState<Scalar>& state, const std::string& mode) {
    state.check_dimensions();
    const auto k = state.basis.mode_offset(mode);
    const auto& v = state.covariance;
    const auto& m = state.mean;
    const Scalar n = Scalar(0.5) * (v(k, k) + v(k + 1, k + 1)) - Scalar(0.5) +
                     Scalar(0.5) * (m(k) * m(k) + m(k + 1) * m(k + 1));
    if (n < Scalar(0)) {
        if (n < Scalar(-1e-9)) throw UnphysicalState("negative occupation for mode '" + mode + "'");
        return Scalar(0);
    }
    return n;
}

/// Variance of X = c + c^dagger (or Y) normalized so vacuum reports 1, i.e.
/// twice the internal covariance entry.
template <typename Scalar>
Scalar quadrature_variance(const GaussianState<Scalar>& state, const std::string& label) {
    state.check_dimensions();
    const auto k = state.basis.index_of(label);
    return Scalar(2) * state.covariance(k, k);
}

/// Covariance entry in the same reported normalization as quadrature_variance.
template <typename Scalar>
Scalar quadrature_covariance(const GaussianState<Scalar>& state, const std::string& row, const std::string& col) {
    return Scalar(2) * state.covariance(state.basis.index_of(row), state.basis.index_of(col));
}

/// Covariance of the 2k-dimensional subsystem formed by the given modes.
template <typename Scalar>
MatrixX<Scalar> reduced_covariance(const GaussianState<Scalar>& state, const std::vector<std::string>& modes) {
    const auto m = static_cast<Eigen::Index>(modes.size());
    std::vector<Eigen::Index> idx;
    for (const auto& mode : modes) {
        const auto k = state.basis.mode_offset(mode);
        idx.push_back(k);
        idx.push_back(k + 1);
    }
    MatrixX<Scalar> out(2 * m, 2 * m);
    for (Eigen::Index i = 0; i < 2 * m; ++i)
        for (Eigen::Index j = 0; j < 2 * m; ++j) out(i, j) = state.covariance(idx[i], idx[j]);
    return out;
}

/// Logarithmic negativity max(0, -ln(2 nu_-)) of a two-mode bipartition, nu_-
/// the smallest symplectic eigenvalue after transposing the second mode.
template <typename Scalar>
Scalar log_negativity(const GaussianState<Scalar>& state, const std::pair<std::string, std::string>& partition) {
    state.check_dimensions();
    if (partition.first == partition.second) throw InvalidParameter("partition needs two distinct modes");
    MatrixX<Scalar> v = reduced_covariance(state, {partition.first, partition.second});
    if (!is_physical(v, 1e-9)) throw UnphysicalState("two-mode covariance is not a physical state");
    // Partial transpose = Y -> -Y on the second mode.
    v.row(3) *= Scalar(-1);
    v.col(3) *= Scalar(-1);
    const Scalar nu_minus = symplectic_eigenvalues(v).minCoeff();
    return std::max(Scalar(0), -std::log(Scalar(2) * nu_minus));
}

template <typename Scalar>
nlohmann::json to_json(const SolverReport<Scalar>& report) {
    nlohmann::json j = {{"stable", report.stable},
                        {"max_drift_eigenvalue_real_part_rad_per_s", static_cast<double>(report.max_drift_eigenvalue_real_part)}};
    if (report.state) {
        j["state"] = to_json(*report.state);
        j["residual"] = static_cast<double>(report.residual);
    } else {
        j["state"] = nullptr;
        j["residual"] = nullptr;
    }
    return j;
}

}  // namespace cqeo
