#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cqeo/errors.hpp"
#include "cqeo/gaussian_state.hpp"
#include "cqeo/linear_system.hpp"

namespace cqeo {

/// B with B B^T = D for symmetric PSD D; zero columns for null directions.
/// Throws IndefiniteDiffusion when an eigenvalue is below -1e-12 |D|.
template <typename Derived>
MatrixX<typename Derived::Scalar> factor_diffusion(const Eigen::MatrixBase<Derived>& D) {
    using Scalar = typename Derived::Scalar;
    const MatrixX<Scalar> d = D;
    if (d.rows() != d.cols()) throw DimensionMismatch("diffusion must be square");
    const Scalar scale = d.cwiseAbs().maxCoeff();
    if (scale == Scalar(0)) return MatrixX<Scalar>::Zero(d.rows(), d.cols());
    if ((d - d.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
        throw IndefiniteDiffusion("diffusion matrix is not symmetric", 0.0);
    }
    const MatrixX<Scalar> sym = Scalar(0.5) * (d + d.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(sym);
    const auto& lambda = es.eigenvalues();
    const Scalar floor = Scalar(-1e-12) * sym.norm();
    if (lambda.minCoeff() < floor) {
        throw IndefiniteDiffusion("diffusion matrix has negative eigenvalue " +
                                      std::to_string(static_cast<double>(lambda.minCoeff())),
                                  static_cast<double>(lambda.minCoeff()));
    }
    return es.eigenvectors() * lambda.cwiseMax(Scalar(0)).cwiseSqrt().asDiagonal();
}

enum class Scheme { Exact, EulerMaruyama };

struct TrajectoryEnsembleSpec {
    std::size_t n_trajectories = 1000;
    double dt = 0.0;       ///< s
    double t_final = 0.0;  ///< s
    std::uint64_t seed = 0;
    double burn_in = 0.0;  ///< s; samples at t >= burn_in enter the estimate
    Scheme scheme = Scheme::Exact;
    std::size_t sample_stride = 1;  ///< use every k-th step after burn-in
    unsigned jobs = 0;              ///< worker threads; 0 = hardware concurrency
    /// When set, every sampled state of every trajectory is written as CSV
    /// (trajectory_id, time_s, one column per basis label).
    std::ostream* trajectory_dump = nullptr;

    void validate() const;
};

struct MomentEstimate {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;       ///< internal convention (vacuum 1/2)
    Eigen::MatrixXd standard_errors;  ///< jackknife, per covariance entry
    Eigen::VectorXd mean_standard_errors;
    /// Per mode (pairs 2k, 2k+1): (V_XX + V_YY)/2 - 1/2 and its jackknife error.
    Eigen::VectorXd occupations;
    Eigen::VectorXd occupation_standard_errors;
    double n_effective = 0.0;  ///< independent-sample equivalent of the variance estimates
    std::size_t n_samples = 0;
};

/// Stationary moments from an ensemble of independent trajectories of
/// du = A u dt + dW, started from `initial` (vacuum when omitted). Each
/// trajectory contributes its time samples after burn-in; errors come from a
/// delete-one-block jackknife over trajectories. Bit-reproducible given the seed
/// regardless of the number of worker threads.
MomentEstimate simulate_ensemble(const LinearQuantumSystemd& sys, const TrajectoryEnsembleSpec& spec,
                                 const std::optional<GaussianStated>& initial = std::nullopt);

/// Cross-trajectory moments at fixed times (one sample per trajectory per time).
/// Times must be nonnegative multiples of spec.dt no later than t_final.
std::vector<MomentEstimate> simulate_snapshots(const LinearQuantumSystemd& sys, const TrajectoryEnsembleSpec& spec,
                                               const std::vector<double>& times,
                                               const std::optional<GaussianStated>& initial = std::nullopt);

struct RefinementPair {
    MomentEstimate coarse;  ///< step spec.dt
    MomentEstimate fine;    ///< step spec.dt / 2
};

/// Runs spec.dt and spec.dt/2 on shared Brownian paths (each coarse increment is
/// built from the two fine normals it spans) and samples both at the coarse
/// times, so their difference isolates the discretization error.
RefinementPair simulate_refinement_pair(const LinearQuantumSystemd& sys, const TrajectoryEnsembleSpec& spec,
                                        const std::optional<GaussianStated>& initial = std::nullopt);

}  // namespace cqeo
