#pragma once

// Fisher information of the CSL rate for single-mode Gaussian readouts.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cslfi/constants.hpp"
#include "cslfi/dynamics.hpp"
#include "cslfi/errors.hpp"
#include "cslfi/gaussian.hpp"

namespace cslfi::estimation {

using gaussian::CovarianceMatrix;
using gaussian::ModeIndex;

inline constexpr double min_povm_squeezing = 1e-8;
inline constexpr double max_povm_squeezing = 1e8;
/// |2 det(sigma)^2 - 1/8| below this means the state is numerically pure.
inline constexpr double purity_guard = 1e-12;

enum class Scheme { local, epr };
/// Which beam-splitter output is read out in the EPR scheme.
enum class EprOutput { plus, minus, best };

inline const char *to_string(Scheme s) { return s == Scheme::local ? "local" : "epr"; }
inline const char *to_string(EprOutput o) {
    switch(o) {
        case EprOutput::plus: return "plus";
        case EprOutput::minus: return "minus";
        case EprOutput::best: return "best";
    }
    return "?";
}

/// Homodyne sits at l -> 0 (X) or l -> inf (P); both are represented by the clamp ends.
inline double clamp_povm_squeezing(double l) {
    if(std::isnan(l)) return l;
    return std::clamp(l, min_povm_squeezing, max_povm_squeezing);
}

struct MeasurementSpec {
    Scheme    scheme = Scheme::local;
    double    l      = 1.0; ///< POVM squeezing; 1 is heterodyne
    double    theta  = 0.0; ///< phase-space direction, rad
    double    phi_bs = constants::pi / 4.0;
    EprOutput output = EprOutput::best;
    ModeIndex target = gaussian::modes::cavity1; ///< mode read out by the local scheme

    void validate() const {
        if(!(l >= min_povm_squeezing && l <= max_povm_squeezing))
            throw std::invalid_argument("MeasurementSpec: l must lie in [1e-8, 1e8]");
        if(!std::isfinite(theta) || !std::isfinite(phi_bs)) throw std::invalid_argument("MeasurementSpec: angles must be finite");
        if(scheme == Scheme::local && !target.optical()) throw std::invalid_argument("MeasurementSpec: local target must be an optical mode");
    }

    friend bool operator==(const MeasurementSpec &, const MeasurementSpec &) = default;
};

/// sigma_m = R diag(l/2, 1/(2l)) R^T with R the phase-space rotation by theta.
inline Eigen::Matrix2d measurement_covariance(const MeasurementSpec &spec) {
    spec.validate();
    const double    c = std::cos(spec.theta), s = std::sin(spec.theta);
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    const Eigen::Matrix2d diag = Eigen::Vector2d(spec.l / 2.0, 1.0 / (2.0 * spec.l)).asDiagonal();
    Eigen::Matrix2d       out  = rot * diag * rot.transpose();
    return 0.5 * (out + out.transpose());
}

/// 1/2 tr[(sigma_p^-1 sigma')^2] with sigma_p = sigma + sigma_m.
inline double classical_fisher(const Eigen::Matrix2d &sigma, const Eigen::Matrix2d &sensitivity, const Eigen::Matrix2d &sigma_m) {
    const Eigen::Matrix2d sigma_p = sigma + sigma_m;
    const double          det     = sigma_p.determinant();
    if(!(std::abs(det) > 1e-300) || !std::isfinite(det)) throw PhysicsError("classical_fisher: sigma + sigma_m is singular");
    const Eigen::Matrix2d m = sigma_p.inverse() * sensitivity;
    return std::max(0.0, 0.5 * (m * m).trace());
}

inline double classical_fisher(const Eigen::Matrix2d &sigma, const Eigen::Matrix2d &sensitivity, const MeasurementSpec &spec) {
    return classical_fisher(sigma, sensitivity, measurement_covariance(spec));
}

/// Single-mode QFI,
///   [det(s')^2 tr((s'^-1 s)^2) + det(s')/2] / [2 det(s)^2 - 1/8],
/// evaluated through adj(s') = det(s') s'^-1 so that singular s' needs no special case.
inline double quantum_fisher(const Eigen::Matrix2d &sigma, const Eigen::Matrix2d &sensitivity) {
    const double denom = 2.0 * std::pow(sigma.determinant(), 2) - 1.0 / 8.0;
    if(!(std::abs(denom) > purity_guard))
        throw PureStateSingularity("quantum_fisher: state is numerically pure (2 det(sigma)^2 - 1/8 = " + std::to_string(denom) + ")");
    Eigen::Matrix2d adj;
    adj << sensitivity(1, 1), -sensitivity(0, 1), -sensitivity(1, 0), sensitivity(0, 0);
    const Eigen::Matrix2d m   = adj * sigma;
    const double          num = (m * m).trace() + 0.5 * sensitivity.determinant();
    return num / denom;
}

/// Variance lower bound for n repetitions; the only place a repetition count appears.
inline double cramer_rao_bound(double fisher, std::size_t repetitions) {
    if(repetitions == 0) throw std::invalid_argument("cramer_rao_bound: repetitions must be positive");
    return 1.0 / (static_cast<double>(repetitions) * fisher);
}

struct FisherResult {
    double                time = 0.0; ///< seconds; meaningless when steady
    bool                  steady = false;
    double                cfi = 0.0;
    std::optional<double> qfi; ///< empty when the readout mode is numerically pure
    Scheme                scheme = Scheme::local;
    dynamics::NoiseKind   noise  = dynamics::NoiseKind::thermal;
    gaussian::ModeRole    mode   = gaussian::ModeRole::cavity1;
};

namespace detail {
    struct ModeFisher {
        double                cfi;
        std::optional<double> qfi;
        gaussian::ModeRole    mode;
    };

    inline ModeFisher mode_fisher(const Matrix &sigma, const Matrix &sens, ModeIndex mode, const Eigen::Matrix2d &sigma_m) {
        const Eigen::Matrix2d s  = gaussian::extract_mode(sigma, mode);
        const Eigen::Matrix2d ds = gaussian::extract_mode(sens, mode);
        ModeFisher            out{classical_fisher(s, ds, sigma_m), std::nullopt, mode.role};
        try {
            out.qfi = quantum_fisher(s, ds);
        } catch(const PureStateSingularity &) {}
        return out;
    }
} // namespace detail

/// CFI/QFI of one 6x6 state under the given readout. EPR recombines the optical 4x4
/// blocks of sigma and sigma' with the beam splitter, then reads one output mode.
inline FisherResult fisher_at(const Matrix &sigma, const Matrix &sens, const MeasurementSpec &spec) {
    spec.validate();
    if(sigma.rows() != 6 || sens.rows() != 6) throw std::invalid_argument("fisher_at: expected 6x6 covariance and sensitivity");
    const Eigen::Matrix2d sigma_m = measurement_covariance(spec);

    FisherResult r;
    r.scheme = spec.scheme;
    if(spec.scheme == Scheme::local) {
        auto mf = detail::mode_fisher(sigma, sens, spec.target, sigma_m);
        r.cfi   = mf.cfi;
        r.qfi   = mf.qfi;
        r.mode  = mf.mode;
        return r;
    }

    using namespace gaussian::modes;
    const auto   bs      = gaussian::beam_splitter_transform(spec.phi_bs, 2, optical1, optical2);
    const Matrix optical = gaussian::apply_symplectic(bs, Matrix(sigma.bottomRightCorner(4, 4)));
    const Matrix doptic  = gaussian::apply_symplectic(bs, Matrix(sens.bottomRightCorner(4, 4)));

    detail::ModeFisher chosen{};
    switch(spec.output) {
        case EprOutput::plus: chosen = detail::mode_fisher(optical, doptic, epr_plus, sigma_m); break;
        case EprOutput::minus: chosen = detail::mode_fisher(optical, doptic, epr_minus, sigma_m); break;
        case EprOutput::best: {
            auto plus  = detail::mode_fisher(optical, doptic, epr_plus, sigma_m);
            auto minus = detail::mode_fisher(optical, doptic, epr_minus, sigma_m);
            chosen     = minus.cfi > plus.cfi ? minus : plus;
            break;
        }
    }
    r.cfi  = chosen.cfi;
    r.qfi  = chosen.qfi;
    r.mode = chosen.mode;
    return r;
}

/// Per-time Fisher information of a trajectory under one readout strategy.
inline std::vector<FisherResult> strategy_fisher(const dynamics::Trajectory &traj, const dynamics::InputNoiseSpec &noise,
                                                 const MeasurementSpec &spec) {
    std::vector<FisherResult> out;
    out.reserve(traj.size());
    for(std::size_t i = 0; i < traj.size(); ++i) {
        auto r  = fisher_at(traj.sigmas[i].matrix(), traj.sensitivities[i], spec);
        r.time  = traj.times[i];
        r.noise = noise.kind;
        out.push_back(r);
    }
    return out;
}

} // namespace cslfi::estimation
