#pragma once

// Covariance-matrix algebra for zero-mean Gaussian states.
//
// Conventions used throughout the library:
//   * quadrature vector r = (Q, P, X1, Y1, X2, Y2): mechanics first, then the two cavities
//   * sigma_ij = <{r_i, r_j}>/2, so the vacuum has sigma = I/2
//   * Omega = direct sum of [[0, 1], [-1, 0]]

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "cslfi/errors.hpp"

namespace cslfi {

using Matrix = Eigen::MatrixXd;

namespace gaussian {

inline constexpr double physicality_tolerance = 1e-9;
inline constexpr double symplectic_tolerance  = 1e-12;

enum class ModeRole { mechanical, cavity1, cavity2, epr_plus, epr_minus };

inline const char *to_string(ModeRole role) {
    switch(role) {
        case ModeRole::mechanical: return "mechanical";
        case ModeRole::cavity1: return "cavity1";
        case ModeRole::cavity2: return "cavity2";
        case ModeRole::epr_plus: return "epr-plus";
        case ModeRole::epr_minus: return "epr-minus";
    }
    return "unknown";
}

/// Zero-based mode number plus what that mode physically is.
struct ModeIndex {
    int      index = 0;
    ModeRole role  = ModeRole::mechanical;

    [[nodiscard]] bool optical() const { return role != ModeRole::mechanical; }
    friend bool operator==(const ModeIndex &, const ModeIndex &) = default;
};

namespace modes {
    // Full 6x6 system.
    inline constexpr ModeIndex mechanical{0, ModeRole::mechanical};
    inline constexpr ModeIndex cavity1{1, ModeRole::cavity1};
    inline constexpr ModeIndex cavity2{2, ModeRole::cavity2};
    // Outputs of the beam splitter acting on the 4x4 optical block.
    inline constexpr ModeIndex optical1{0, ModeRole::cavity1};
    inline constexpr ModeIndex optical2{1, ModeRole::cavity2};
    inline constexpr ModeIndex epr_plus{0, ModeRole::epr_plus};
    inline constexpr ModeIndex epr_minus{1, ModeRole::epr_minus};
} // namespace modes

namespace detail {
    inline double max_abs(const Matrix &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

    inline void require_square_even(const Matrix &m, const char *what) {
        if(m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": matrix is not square");
        if(m.rows() == 0 || m.rows() % 2 != 0)
            throw std::invalid_argument(std::string(what) + ": dimension must be a positive even number");
    }

    inline void require_symmetric(const Matrix &m, const char *what) {
        double scale = std::max(1.0, max_abs(m));
        if(max_abs(m - m.transpose()) > 1e-12 * scale) throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
    }

    inline void require_mode(const ModeIndex &mode, Eigen::Index dim, const char *what) {
        if(mode.index < 0 || 2 * static_cast<Eigen::Index>(mode.index) + 1 >= dim)
            throw std::out_of_range(std::string(what) + ": mode " + std::to_string(mode.index) + " out of range for dimension " +
                                    std::to_string(dim));
    }
} // namespace detail

/// Real symmetric matrix of quadrature second moments. Symmetric by construction;
/// physicality is checked separately by check_physicality().
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Matrix entries) : entries_(std::move(entries)) {
        detail::require_square_even(entries_, "CovarianceMatrix");
        detail::require_symmetric(entries_, "CovarianceMatrix");
        entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
    }

    static CovarianceMatrix vacuum(int modes) { return CovarianceMatrix(0.5 * Matrix::Identity(2 * modes, 2 * modes)); }
    static CovarianceMatrix thermal(int modes, double mean_photons) {
        return CovarianceMatrix((mean_photons + 0.5) * Matrix::Identity(2 * modes, 2 * modes));
    }

    [[nodiscard]] Eigen::Index  dim() const { return entries_.rows(); }
    [[nodiscard]] int           modes() const { return static_cast<int>(entries_.rows() / 2); }
    [[nodiscard]] const Matrix &matrix() const { return entries_; }
    [[nodiscard]] double        operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
    [[nodiscard]] double        determinant() const { return entries_.determinant(); }

private:
    Matrix entries_;
};

/// Omega for the given number of quadratures.
inline Matrix symplectic_form(Eigen::Index dim) {
    if(dim <= 0 || dim % 2 != 0) throw std::invalid_argument("symplectic_form: dimension must be a positive even number");
    Matrix omega = Matrix::Zero(dim, dim);
    for(Eigen::Index k = 0; k < dim; k += 2) {
        omega(k, k + 1) = 1.0;
        omega(k + 1, k) = -1.0;
    }
    return omega;
}

/// Real matrix S with S Omega S^T = Omega.
class SymplecticTransform {
public:
    explicit SymplecticTransform(Matrix entries) : entries_(std::move(entries)) {
        detail::require_square_even(entries_, "SymplecticTransform");
        if(symplectic_defect() > symplectic_tolerance) throw std::invalid_argument("SymplecticTransform: S Omega S^T != Omega");
    }

    static SymplecticTransform identity(Eigen::Index dim) { return SymplecticTransform(Matrix::Identity(dim, dim)); }

    [[nodiscard]] Eigen::Index  dim() const { return entries_.rows(); }
    [[nodiscard]] const Matrix &matrix() const { return entries_; }

    /// max |S Omega S^T - Omega|.
    [[nodiscard]] double symplectic_defect() const {
        Matrix omega = symplectic_form(entries_.rows());
        return detail::max_abs(entries_ * omega * entries_.transpose() - omega);
    }

    friend SymplecticTransform operator*(const SymplecticTransform &a, const SymplecticTransform &b) {
        if(a.dim() != b.dim()) throw std::invalid_argument("SymplecticTransform: dimension mismatch in composition");
        return SymplecticTransform(a.entries_ * b.entries_);
    }

private:
    Matrix entries_;
};

/// Beam splitter mixing two optical modes. Closed form of exp(angle * G) with
/// G the passive generator coupling the modes:
///   X_a' =  cos X_a + sin X_b,  Y_a' =  cos Y_a + sin Y_b
///   X_b' = -sin X_a + cos X_b,  Y_b' = -sin Y_a + cos Y_b
/// angle = pi/4 is the 50:50 splitter; composition adds angles.
inline SymplecticTransform beam_splitter_transform(double angle, int total_modes, ModeIndex mode_a, ModeIndex mode_b) {
    if(!std::isfinite(angle)) throw std::invalid_argument("beam_splitter_transform: angle is not finite");
    if(total_modes <= 0) throw std::invalid_argument("beam_splitter_transform: total_modes must be positive");
    const Eigen::Index dim = 2 * static_cast<Eigen::Index>(total_modes);
    detail::require_mode(mode_a, dim, "beam_splitter_transform");
    detail::require_mode(mode_b, dim, "beam_splitter_transform");
    if(mode_a.index == mode_b.index) throw std::invalid_argument("beam_splitter_transform: modes must differ");
    if(!mode_a.optical() || !mode_b.optical()) throw std::invalid_argument("beam_splitter_transform: both modes must be optical");

    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Matrix       S = Matrix::Identity(dim, dim);
    const auto   a = 2 * static_cast<Eigen::Index>(mode_a.index);
    const auto   b = 2 * static_cast<Eigen::Index>(mode_b.index);
    for(Eigen::Index q = 0; q < 2; ++q) {
        S(a + q, a + q) = c;
        S(a + q, b + q) = s;
        S(b + q, a + q) = -s;
        S(b + q, b + q) = c;
    }
    return SymplecticTransform(std::move(S));
}

/// S sigma S^T. Also used for sensitivity matrices, which transform the same way.
inline Matrix apply_symplectic(const SymplecticTransform &S, const Matrix &m) {
    if(S.dim() != m.rows() || m.rows() != m.cols()) throw std::invalid_argument("apply_symplectic: dimension mismatch");
    Matrix out = S.matrix() * m * S.matrix().transpose();
    return 0.5 * (out + out.transpose());
}

inline CovarianceMatrix apply_symplectic(const SymplecticTransform &S, const CovarianceMatrix &sigma) {
    return CovarianceMatrix(apply_symplectic(S, sigma.matrix()));
}

/// 2x2 diagonal block of one mode (Gaussian partial trace).
inline Matrix extract_mode(const Matrix &m, ModeIndex mode) {
    detail::require_mode(mode, m.rows(), "extract_mode");
    const auto k = 2 * static_cast<Eigen::Index>(mode.index);
    return m.block(k, k, 2, 2);
}

inline CovarianceMatrix extract_mode(const CovarianceMatrix &sigma, ModeIndex mode) {
    return CovarianceMatrix(extract_mode(sigma.matrix(), mode));
}

/// Smallest eigenvalue of the Hermitian matrix sigma + (i/2) Omega.
inline double uncertainty_margin(const Matrix &sigma) {
    detail::require_square_even(sigma, "check_physicality");
    detail::require_symmetric(sigma, "check_physicality");
    const Eigen::MatrixXcd h = sigma.cast<std::complex<double>>() +
                               std::complex<double>(0.0, 0.5) * symplectic_form(sigma.rows()).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

/// Uncertainty-relation guard: sigma + (i/2) Omega >= -1e-9.
inline bool check_physicality(const Matrix &sigma) { return uncertainty_margin(sigma) >= -physicality_tolerance; }
inline bool check_physicality(const CovarianceMatrix &sigma) { return check_physicality(sigma.matrix()); }

} // namespace gaussian
} // namespace cslfi
