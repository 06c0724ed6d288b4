#pragma once

// Independent QFI reference for one bosonic mode: builds the Gaussian density matrix
// in a truncated number basis and differentiates the Uhlmann fidelity numerically.
// Slow; intended for validation, not for production sweeps.

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cslfi/errors.hpp"

namespace cslfi::fock {

using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr int    min_cutoff      = 40;
inline constexpr double max_edge_weight = 1e-8;

/// Density matrix of the zero-mean single-mode Gaussian state with covariance sigma
/// (vacuum = I/2), truncated to `cutoff` number states. Built as
/// rotation * squeezing * thermal in a padded basis, then cropped.
inline ComplexMatrix gaussian_density_matrix(const Eigen::Matrix2d &sigma, int cutoff) {
    if(cutoff < 1) throw std::invalid_argument("gaussian_density_matrix: cutoff must be positive");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(0.5 * (sigma + sigma.transpose()));
    const double                                   lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(1);
    if(!(lo > 0)) throw std::invalid_argument("gaussian_density_matrix: covariance is not positive definite");
    const double nu = std::sqrt(lo * hi);
    if(nu < 0.5 - 1e-12) throw std::invalid_argument("gaussian_density_matrix: covariance violates the uncertainty relation");
    const double nbar    = std::max(0.0, nu - 0.5);
    const double squeeze = 0.25 * std::log(hi / lo);         // X variance nu e^{-2s}
    const Eigen::Vector2d v = eig.eigenvectors().col(0);       // squeezed direction
    const double          phi = std::atan2(v(1), v(0));

    const int    big = 2 * cutoff + 40;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(big, big);
    for(int k = 1; k < big; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    const Eigen::MatrixXd a2 = a * a;
    // S(s) = exp(s/2 (a^2 - a^dag^2)) maps X -> e^{-s} X.
    const Eigen::MatrixXd gen = 0.5 * squeeze * (a2 - a2.transpose());
    const Eigen::MatrixXd sq  = gen.exp();

    Eigen::VectorXd populations(big);
    for(int k = 0; k < big; ++k)
        populations(k) = nbar > 0 ? std::exp(k * std::log(nbar / (nbar + 1.0))) / (nbar + 1.0) : (k == 0 ? 1.0 : 0.0);
    const Eigen::MatrixXd squeezed = sq * populations.asDiagonal() * sq.transpose();

    // U = exp(+i phi n) rotates the covariance by +phi.
    ComplexMatrix rho(cutoff, cutoff);
    for(int j = 0; j < cutoff; ++j)
        for(int k = 0; k < cutoff; ++k) rho(j, k) = squeezed(j, k) * std::polar(1.0, phi * (j - k));
    return rho;
}

/// Weight of the last retained number state; large values mean the cutoff is too small.
inline double edge_weight(const ComplexMatrix &rho) { return std::abs(rho(rho.rows() - 1, rho.cols() - 1)); }

namespace detail {
    inline ComplexMatrix psd_sqrt(const ComplexMatrix &m) {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (m + m.adjoint()));
        Eigen::VectorXd                              ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();
    }
} // namespace detail

/// sqrt of the Uhlmann fidelity, tr sqrt(sqrt(rho1) rho2 sqrt(rho1)).
inline double root_fidelity(const ComplexMatrix &rho1, const ComplexMatrix &rho2) {
    const ComplexMatrix s = detail::psd_sqrt(rho1);
    const ComplexMatrix m = s * rho2 * s;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

struct OracleResult {
    double value      = 0;
    int    cutoff     = 0; ///< cutoff at which the estimate settled
    double edge       = 0; ///< edge population at that cutoff
    double richardson = 0; ///< |I(h/2) - I(h)| before extrapolation
};

namespace detail {
    /// 8 (1 - sqrt F(rho(-h), rho(+h))) / (2h)^2 with Richardson elimination of the h^2 term.
    inline OracleResult estimate(const Eigen::Matrix2d &sigma, const Eigen::Matrix2d &sens, double h, int cutoff) {
        auto at = [&](double step) {
            const auto   minus = gaussian_density_matrix(sigma - step * sens, cutoff);
            const auto   plus  = gaussian_density_matrix(sigma + step * sens, cutoff);
            const double f     = root_fidelity(minus, plus);
            return std::pair{8.0 * (1.0 - f) / (4.0 * step * step), std::max(edge_weight(minus), edge_weight(plus))};
        };
        const auto [coarse, edge1] = at(h);
        const auto [fine, edge2]   = at(0.5 * h);
        return {(4.0 * fine - coarse) / 3.0, cutoff, std::max(edge1, edge2), std::abs(fine - coarse)};
    }
} // namespace detail

/// QFI of sigma(Lambda) with derivative sens via fidelity in the number basis.
/// The cutoff grows in steps of 20 from `cutoff` until the estimate changes by < 1e-4
/// relative; throws if the edge population stays above 1e-8.
inline OracleResult qfi_oracle_fock(const Eigen::Matrix2d &sigma, const Eigen::Matrix2d &sens, int cutoff = 60, int max_cutoff = 200) {
    if(cutoff < min_cutoff) throw std::invalid_argument("qfi_oracle_fock: cutoff must be >= " + std::to_string(min_cutoff));
    const double sens_norm = sens.norm();
    if(sens_norm == 0.0) return {0.0, cutoff, 0.0, 0.0};
    const double h = 1e-2 * sigma.norm() / sens_norm;

    OracleResult prev = detail::estimate(sigma, sens, h, cutoff);
    for(int n = cutoff + 20; n <= max_cutoff; n += 20) {
        OracleResult next = detail::estimate(sigma, sens, h, n);
        if(std::abs(next.value - prev.value) <= 1e-4 * std::abs(next.value) && next.edge <= max_edge_weight) return next;
        prev = next;
    }
    if(prev.edge > max_edge_weight)
        throw PhysicsError("qfi_oracle_fock: cutoff too small, edge population " + std::to_string(prev.edge) + " > 1e-8");
    return prev;
}

} // namespace cslfi::fock
