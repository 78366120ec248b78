#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cqeo/errors.hpp"

namespace cqeo {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Ordered quadrature basis. Each mode m contributes the canonical pair
// ("X_m", "Y_m") at positions (2k, 2k+1).
class StateBasis {
public:
    StateBasis() = default;

    explicit StateBasis(std::vector<std::string> modes) : modes_(std::move(modes)) {
        for (std::size_t k = 0; k < modes_.size(); ++k) {
            if (modes_[k].empty()) throw InvalidParameter("mode names must be nonempty");
            for (std::size_t j = 0; j < k; ++j) {
                if (modes_[j] == modes_[k]) throw InvalidParameter("duplicate mode name '" + modes_[k] + "'");
            }
        }
        labels_.reserve(2 * modes_.size());
        for (const auto& m : modes_) {
            labels_.push_back("X_" + m);
            labels_.push_back("Y_" + m);
        }
    }

    // Inverse of labels(); rejects anything that is not a sequence of X_/Y_ pairs.
    static StateBasis from_labels(const std::vector<std::string>& labels) {
        if (labels.size() % 2 != 0) throw InvalidParameter("basis dimension must be even");
        std::vector<std::string> modes;
        for (std::size_t k = 0; k < labels.size(); k += 2) {
            const auto& x = labels[k];
            const auto& y = labels[k + 1];
            if (x.size() < 3 || x.rfind("X_", 0) != 0 || y != "Y_" + x.substr(2)) {
                throw InvalidParameter("labels '" + x + "', '" + y + "' are not a quadrature pair");
            }
            modes.push_back(x.substr(2));
        }
        return StateBasis(std::move(modes));
    }

    Eigen::Index dim() const { return static_cast<Eigen::Index>(labels_.size()); }
    Eigen::Index mode_count() const { return static_cast<Eigen::Index>(modes_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<std::string>& modes() const { return modes_; }

    Eigen::Index index_of(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) throw UnknownLabel(label);
        return static_cast<Eigen::Index>(it - labels_.begin());
    }

    // Position of the X quadrature of a mode; Y follows at +1.
    Eigen::Index mode_offset(const std::string& mode) const {
        auto it = std::find(modes_.begin(), modes_.end(), mode);
        if (it == modes_.end()) throw UnknownLabel(mode);
        return 2 * static_cast<Eigen::Index>(it - modes_.begin());
    }

    bool operator==(const StateBasis&) const = default;

private:
    std::vector<std::string> modes_;
    std::vector<std::string> labels_;
};

// One white-noise input driving a damped mode: the (-gamma/2, sqrt(gamma))
// input-output convention with a thermal bath of occupation N contributes
// gamma (N + 1/2) to the diffusion of both quadratures of that mode.
struct NoiseInput {
    std::string label;
    std::string mode;
    double occupation = 0.0;
    double rate = 0.0;

    bool operator==(const NoiseInput&) const = default;
};

/// du = A u dt + dW, <dW dW^T> = D dt, over the symmetrized quadratures
/// (vacuum covariance 1/2 per quadrature).
template <typename Scalar>
struct LinearQuantumSystem {
    std::string regime;
    StateBasis basis;
    MatrixX<Scalar> drift;
    MatrixX<Scalar> diffusion;
    std::vector<NoiseInput> noise_inputs;

    Eigen::Index dim() const { return basis.dim(); }

    void check_dimensions() const {
        const auto n = basis.dim();
        if (drift.rows() != n || drift.cols() != n || diffusion.rows() != n || diffusion.cols() != n) {
            throw DimensionMismatch("drift/diffusion shape does not match basis dimension " + std::to_string(n));
        }
    }

    // Diffusion implied by the noise-input table alone.
    MatrixX<Scalar> diffusion_from_inputs() const {
        MatrixX<Scalar> d = MatrixX<Scalar>::Zero(dim(), dim());
        for (const auto& in : noise_inputs) {
            const auto k = basis.mode_offset(in.mode);
            const Scalar level = Scalar(in.rate) * (Scalar(in.occupation) + Scalar(0.5));
            d(k, k) += level;
            d(k + 1, k + 1) += level;
        }
        return d;
    }

    bool operator==(const LinearQuantumSystem& other) const {
        return regime == other.regime && basis == other.basis && noise_inputs == other.noise_inputs &&
               drift.rows() == other.drift.rows() && drift.cols() == other.drift.cols() &&
               diffusion.rows() == other.diffusion.rows() && diffusion.cols() == other.diffusion.cols() &&
               drift == other.drift && diffusion == other.diffusion;
    }
};

using LinearQuantumSystemd = LinearQuantumSystem<double>;

namespace detail {

template <typename Derived>
nlohmann::json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(static_cast<double>(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename Scalar>
MatrixX<Scalar> matrix_from_json(const nlohmann::json& j, Eigen::Index n, const char* what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
        throw DimensionMismatch(std::string(what) + " must have " + std::to_string(n) + " rows");
    }
    MatrixX<Scalar> m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
            throw DimensionMismatch(std::string(what) + " row " + std::to_string(i) + " has wrong length");
        }
        for (Eigen::Index k = 0; k < n; ++k) m(i, k) = Scalar(row[static_cast<std::size_t>(k)].get<double>());
    }
    return m;
}

}  // namespace detail

template <typename Scalar>
nlohmann::json to_json(const LinearQuantumSystem<Scalar>& sys) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& in : sys.noise_inputs) {
        inputs.push_back({{"label", in.label}, {"mode", in.mode}, {"occupation", in.occupation}, {"rate_rad_per_s", in.rate}});
    }
    return {{"regime", sys.regime},
            {"labels", sys.basis.labels()},
            {"drift_rad_per_s", detail::matrix_to_json(sys.drift)},
            {"diffusion_rad_per_s", detail::matrix_to_json(sys.diffusion)},
            {"noise_inputs", std::move(inputs)}};
}

template <typename Scalar = double>
LinearQuantumSystem<Scalar> linear_system_from_json(const nlohmann::json& j) {
    LinearQuantumSystem<Scalar> sys;
    sys.regime = j.value("regime", std::string{});
    sys.basis = StateBasis::from_labels(j.at("labels").get<std::vector<std::string>>());
    sys.drift = detail::matrix_from_json<Scalar>(j.at("drift_rad_per_s"), sys.dim(), "drift");
    sys.diffusion = detail::matrix_from_json<Scalar>(j.at("diffusion_rad_per_s"), sys.dim(), "diffusion");
    for (const auto& in : j.value("noise_inputs", nlohmann::json::array())) {
        sys.noise_inputs.push_back({in.at("label").get<std::string>(), in.at("mode").get<std::string>(),
                                    in.at("occupation").get<double>(), in.at("rate_rad_per_s").get<double>()});
    }
    return sys;
}

}  // namespace cqeo
