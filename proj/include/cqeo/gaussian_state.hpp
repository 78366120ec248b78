#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "cqeo/linear_system.hpp"

namespace cqeo {

// Symmetrized second moments over a quadrature basis. Internal convention:
// vacuum covariance is (1/2) I, [X_m, Y_m] = i per canonical pair.
template <typename Scalar>
struct GaussianState {
    StateBasis basis;
    VectorX<Scalar> mean;
    MatrixX<Scalar> covariance;

    Eigen::Index dim() const { return basis.dim(); }

    void check_dimensions() const {
        if (mean.size() != dim() || covariance.rows() != dim() || covariance.cols() != dim()) {
            throw DimensionMismatch("Gaussian state shape does not match its basis");
        }
    }
};

using GaussianStated = GaussianState<double>;

/// Block-diagonal symplectic form with blocks [[0, 1], [-1, 0]].
template <typename Scalar>
MatrixX<Scalar> symplectic_form(Eigen::Index dim) {
    MatrixX<Scalar> omega = MatrixX<Scalar>::Zero(dim, dim);
    for (Eigen::Index k = 0; k + 1 < dim; k += 2) {
        omega(k, k + 1) = Scalar(1);
        omega(k + 1, k) = Scalar(-1);
    }
    return omega;
}

template <typename Scalar>
GaussianState<Scalar> vacuum_state(const StateBasis& basis) {
    return {basis, VectorX<Scalar>::Zero(basis.dim()), Scalar(0.5) * MatrixX<Scalar>::Identity(basis.dim(), basis.dim())};
}

/// Product of thermal states with the same occupation on every mode.
template <typename Scalar>
GaussianState<Scalar> thermal_state(const StateBasis& basis, Scalar occupation) {
    auto state = vacuum_state<Scalar>(basis);
    state.covariance *= Scalar(2) * occupation + Scalar(1);
    return state;
}

/// Smallest eigenvalue of the Hermitian matrix V + (i/2) Omega.
template <typename Derived>
typename Derived::Scalar uncertainty_margin(const Eigen::MatrixBase<Derived>& covariance) {
    using Scalar = typename Derived::Scalar;
    using Complex = std::complex<Scalar>;
    const auto n = covariance.rows();
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> h = covariance.template cast<Complex>();
    h += Complex(0, Scalar(0.5)) * symplectic_form<Scalar>(n).template cast<Complex>();
    Eigen::SelfAdjointEigenSolver<decltype(h)> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Robertson-Schroedinger physicality, V + (i/2) Omega >= -tol * max(1, |V|).
template <typename Derived>
bool is_physical(const Eigen::MatrixBase<Derived>& covariance, double tol = 1e-9) {
    using Scalar = typename Derived::Scalar;
    if (!covariance.allFinite()) return false;
    const double scale = std::max(1.0, static_cast<double>(covariance.cwiseAbs().maxCoeff()));
    const double asym = static_cast<double>((covariance - covariance.transpose()).cwiseAbs().maxCoeff());
    if (asym > tol * scale) return false;
    const MatrixX<Scalar> sym = Scalar(0.5) * (covariance + covariance.transpose());
    return static_cast<double>(uncertainty_margin(sym)) >= -tol * scale;
}

/// Williamson symplectic eigenvalues, ascending, one per mode.
template <typename Derived>
VectorX<typename Derived::Scalar> symplectic_eigenvalues(const Eigen::MatrixBase<Derived>& covariance) {
    using Scalar = typename Derived::Scalar;
    const auto n = covariance.rows();
    const MatrixX<Scalar> m = symplectic_form<Scalar>(n) * covariance;
    Eigen::EigenSolver<MatrixX<Scalar>> es(m, false);
    // Eigenvalues come in pairs +/- i nu; keep the nonnegative imaginary parts.
    std::vector<Scalar> nus;
    for (Eigen::Index k = 0; k < n; ++k) nus.push_back(std::abs(es.eigenvalues()(k).imag()));
    std::sort(nus.begin(), nus.end());
    VectorX<Scalar> out(n / 2);
    for (Eigen::Index k = 0; k < n / 2; ++k) out(k) = Scalar(0.5) * (nus[2 * k] + nus[2 * k + 1]);
    return out;
}

template <typename Scalar>
nlohmann::json to_json(const GaussianState<Scalar>& state) {
    nlohmann::json mean = nlohmann::json::array();
    for (Eigen::Index k = 0; k < state.mean.size(); ++k) mean.push_back(static_cast<double>(state.mean(k)));
    return {{"labels", state.basis.labels()},
            {"mean", std::move(mean)},
            {"covariance", detail::matrix_to_json(state.covariance)},
            {"convention", "symmetrized covariance, vacuum = 1/2 per quadrature"}};
}

template <typename Scalar = double>
GaussianState<Scalar> gaussian_state_from_json(const nlohmann::json& j) {
    GaussianState<Scalar> state;
    state.basis = StateBasis::from_labels(j.at("labels").get<std::vector<std::string>>());
    const auto n = state.basis.dim();
    const auto& mean = j.at("mean");
    if (!mean.is_array() || static_cast<Eigen::Index>(mean.size()) != n) throw DimensionMismatch("mean has wrong length");
    state.mean.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) state.mean(k) = Scalar(mean[static_cast<std::size_t>(k)].get<double>());
    state.covariance = detail::matrix_from_json<Scalar>(j.at("covariance"), n, "covariance");
    return state;
}

}  // namespace cqeo
