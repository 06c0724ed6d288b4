#pragma once

// Linearised two-cavity optomechanics: drift and diffusion matrices, Lyapunov
// evolution of the covariance matrix together with its derivative in the CSL
// diffusion rate, and the algebraic steady state.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cslfi/constants.hpp"
#include "cslfi/errors.hpp"
#include "cslfi/gaussian.hpp"

namespace cslfi::dynamics {

using gaussian::CovarianceMatrix;

/// All rates in SI: rad/s for frequencies, 1/s for damping and decay.
struct SystemParams {
    double omega_m     = 0; ///< mechanical angular frequency, rad/s
    double gamma_m     = 0; ///< mechanical damping, 1/s
    double kappa       = 0; ///< cavity decay (both cavities), 1/s
    double delta1      = 0; ///< cavity-1 detuning, rad/s
    double delta2      = 0; ///< cavity-2 detuning, rad/s
    double g           = 0; ///< linearised optomechanical coupling, rad/s
    double temperature = 0; ///< bath temperature, K
    double lambda_csl  = 0; ///< CSL diffusion rate, 1/s

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if(!(finite(omega_m) && finite(gamma_m) && finite(kappa) && finite(delta1) && finite(delta2) && finite(g) &&
             finite(temperature) && finite(lambda_csl)))
            throw std::invalid_argument("SystemParams: all parameters must be finite");
        if(omega_m <= 0) throw std::invalid_argument("SystemParams: omega_m must be > 0");
        if(gamma_m < 0) throw std::invalid_argument("SystemParams: gamma_m must be >= 0");
        if(kappa <= 0) throw std::invalid_argument("SystemParams: kappa must be > 0");
        if(temperature < 0) throw std::invalid_argument("SystemParams: temperature must be >= 0");
        if(lambda_csl < 0) throw std::invalid_argument("SystemParams: lambda_csl must be >= 0");
    }

    friend bool operator==(const SystemParams &, const SystemParams &) = default;
};

/// Momentum diffusion from the Markovian Brownian bath, 2 gamma k_B T / (hbar omega).
inline double brownian_diffusion(const SystemParams &p) {
    return 2.0 * p.gamma_m * constants::k_boltzmann * p.temperature / (constants::hbar * p.omega_m);
}

enum class NoiseKind { thermal, tms };

inline const char *to_string(NoiseKind kind) { return kind == NoiseKind::thermal ? "thermal" : "tms"; }

/// Driving light entering both cavities.
struct InputNoiseSpec {
    NoiseKind kind  = NoiseKind::thermal;
    double    n1    = 0; ///< thermal photons, cavity 1
    double    n2    = 0; ///< thermal photons, cavity 2
    double    r     = 0; ///< two-mode squeezing amplitude
    double    psi_s = 0; ///< squeezing angle, rad

    static InputNoiseSpec thermal(double n1, double n2) { return {NoiseKind::thermal, n1, n2, 0.0, 0.0}; }
    static InputNoiseSpec tms(double r, double psi_s) { return {NoiseKind::tms, 0.0, 0.0, r, psi_s}; }

    void validate() const {
        if(kind == NoiseKind::thermal && !(n1 >= 0 && n2 >= 0 && std::isfinite(n1) && std::isfinite(n2)))
            throw std::invalid_argument("InputNoiseSpec: thermal photon numbers must be finite and >= 0");
        if(kind == NoiseKind::tms && !(r >= 0 && std::isfinite(r) && std::isfinite(psi_s)))
            throw std::invalid_argument("InputNoiseSpec: squeezing amplitude must be finite and >= 0");
    }

    friend bool operator==(const InputNoiseSpec &, const InputNoiseSpec &) = default;
};

namespace detail {
    struct Spectrum {
        double max_real        = 0;
        double spectral_radius = 0;
    };

    inline Spectrum spectrum(const Matrix &a) {
        Eigen::EigenSolver<Matrix> solver(a, false);
        Spectrum                   s{-std::numeric_limits<double>::infinity(), 0.0};
        for(const auto &ev : solver.eigenvalues()) {
            s.max_real        = std::max(s.max_real, ev.real());
            s.spectral_radius = std::max(s.spectral_radius, std::abs(ev));
        }
        return s;
    }
} // namespace detail

/// Drift matrix A; the Hurwitz flag is computed once at construction.
class DriftMatrix {
public:
    explicit DriftMatrix(Matrix entries) : entries_(std::move(entries)) {
        gaussian::detail::require_square_even(entries_, "DriftMatrix");
        auto s           = detail::spectrum(entries_);
        max_real_        = s.max_real;
        spectral_radius_ = s.spectral_radius;
    }

    [[nodiscard]] const Matrix &matrix() const { return entries_; }
    [[nodiscard]] Eigen::Index  dim() const { return entries_.rows(); }
    [[nodiscard]] bool          hurwitz() const { return max_real_ < 0; }
    [[nodiscard]] double        max_real_eigenvalue() const { return max_real_; }
    [[nodiscard]] double        spectral_radius() const { return spectral_radius_; }

private:
    Matrix entries_;
    double max_real_        = 0;
    double spectral_radius_ = 0;
};

/// Diffusion matrix D together with dD/dLambda. For the model built here the
/// derivative is a single 1 at (P,P).
class DiffusionMatrix {
public:
    explicit DiffusionMatrix(Matrix entries) : DiffusionMatrix(entries, unit_pp(entries.rows())) {}
    DiffusionMatrix(Matrix entries, Matrix lambda_derivative) : entries_(std::move(entries)), derivative_(std::move(lambda_derivative)) {
        gaussian::detail::require_square_even(entries_, "DiffusionMatrix");
        gaussian::detail::require_symmetric(entries_, "DiffusionMatrix");
        if(derivative_.rows() != entries_.rows() || derivative_.cols() != entries_.cols())
            throw std::invalid_argument("DiffusionMatrix: derivative has the wrong shape");
        entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
    }

    [[nodiscard]] const Matrix &matrix() const { return entries_; }
    [[nodiscard]] const Matrix &lambda_derivative() const { return derivative_; }
    [[nodiscard]] Eigen::Index  dim() const { return entries_.rows(); }

    static Matrix unit_pp(Eigen::Index dim) {
        Matrix e = Matrix::Zero(dim, dim);
        if(dim >= 2) e(1, 1) = 1.0;
        return e;
    }

private:
    Matrix entries_;
    Matrix derivative_;
};

/// dQ = w P;  dP = -w Q - gamma P + g X1;
/// dX_i = -kappa X_i + Delta_i Y_i;  dY_i = -Delta_i X_i - kappa Y_i (+ g Q for cavity 1).
inline DriftMatrix build_drift(const SystemParams &p) {
    p.validate();
    Matrix a = Matrix::Zero(6, 6);
    a(0, 1)  = p.omega_m;
    a(1, 0)  = -p.omega_m;
    a(1, 1)  = -p.gamma_m;
    a(1, 2)  = p.g;

    a(2, 2) = -p.kappa;
    a(2, 3) = p.delta1;
    a(3, 2) = -p.delta1;
    a(3, 3) = -p.kappa;
    a(3, 0) = p.g;

    a(4, 4) = -p.kappa;
    a(4, 5) = p.delta2;
    a(5, 4) = -p.delta2;
    a(5, 5) = -p.kappa;
    return DriftMatrix(std::move(a));
}

/// Optical 4x4 block of D for the chosen input light.
inline Matrix input_noise_block(double kappa, const InputNoiseSpec &noise) {
    noise.validate();
    Matrix block = Matrix::Zero(4, 4);
    if(noise.kind == NoiseKind::thermal) {
        block.topLeftCorner(2, 2)     = 2.0 * kappa * (noise.n1 + 0.5) * Eigen::Matrix2d::Identity();
        block.bottomRightCorner(2, 2) = 2.0 * kappa * (noise.n2 + 0.5) * Eigen::Matrix2d::Identity();
        return block;
    }
    const double    ch = std::cosh(2.0 * noise.r);
    const double    sh = std::sinh(2.0 * noise.r);
    Eigen::Matrix2d reflection;
    reflection << std::cos(noise.psi_s), std::sin(noise.psi_s), std::sin(noise.psi_s), -std::cos(noise.psi_s);
    block.topLeftCorner(2, 2)     = kappa * ch * Eigen::Matrix2d::Identity();
    block.bottomRightCorner(2, 2) = kappa * ch * Eigen::Matrix2d::Identity();
    block.topRightCorner(2, 2)    = kappa * sh * reflection;
    block.bottomLeftCorner(2, 2)  = kappa * sh * reflection;
    return block;
}

inline DiffusionMatrix build_diffusion(const SystemParams &p, const InputNoiseSpec &noise) {
    p.validate();
    Matrix d                  = Matrix::Zero(6, 6);
    d(1, 1)                   = brownian_diffusion(p) + p.lambda_csl;
    d.bottomRightCorner(4, 4) = input_noise_block(p.kappa, noise);
    return DiffusionMatrix(std::move(d));
}

struct LyapunovResidual {
    double absolute = 0; ///< max |A s + s A^T + D|
    double scaled   = 0; ///< absolute / (2 |A|max |s|max + |D|max)
};

inline LyapunovResidual lyapunov_residual(const Matrix &a, const Matrix &sigma, const Matrix &d) {
    const Matrix r     = a * sigma + sigma * a.transpose() + d;
    const double abs   = r.cwiseAbs().maxCoeff();
    const double scale = 2.0 * a.cwiseAbs().maxCoeff() * sigma.cwiseAbs().maxCoeff() + d.cwiseAbs().maxCoeff();
    return {abs, scale > 0 ? abs / scale : abs};
}

struct SteadyState {
    CovarianceMatrix sigma;
    Matrix           sensitivity;
    LyapunovResidual residual;
    LyapunovResidual sensitivity_residual;
};

namespace detail {
    /// Solves A X + X A^T = -C for several right-hand sides by vectorisation:
    /// (I (x) A + A (x) I) vec X = -vec C, dense LU plus one refinement step.
    inline std::vector<Matrix> solve_lyapunov(const Matrix &a, std::initializer_list<const Matrix *> rhs) {
        const Eigen::Index n = a.rows();
        const Matrix       id = Matrix::Identity(n, n);
        Matrix             k(n * n, n * n);
        for(Eigen::Index i = 0; i < n; ++i)
            for(Eigen::Index j = 0; j < n; ++j) k.block(i * n, j * n, n, n) = id(i, j) * a + a(i, j) * id;
        Eigen::PartialPivLU<Matrix> lu(k);

        std::vector<Matrix> out;
        for(const Matrix *c : rhs) {
            Eigen::VectorXd b = -Eigen::Map<const Eigen::VectorXd>(c->data(), n * n);
            Eigen::VectorXd x = lu.solve(b);
            x += lu.solve(b - k * x);
            Matrix sol = Eigen::Map<Matrix>(x.data(), n, n);
            out.emplace_back(0.5 * (sol + sol.transpose()));
        }
        return out;
    }
} // namespace detail

/// Solves A s + s A^T = -D and A s' + s' A^T = -dD/dLambda.
inline SteadyState steady_state(const DriftMatrix &a, const DiffusionMatrix &d) {
    if(a.dim() != d.dim()) throw std::invalid_argument("steady_state: drift and diffusion dimensions differ");
    if(!a.hurwitz()) {
        std::ostringstream msg;
        msg << "steady_state: drift matrix is not Hurwitz (max Re eigenvalue = " << a.max_real_eigenvalue() << "); no steady state exists";
        throw NotHurwitz(msg.str());
    }
    auto sols = detail::solve_lyapunov(a.matrix(), {&d.matrix(), &d.lambda_derivative()});
    auto res  = lyapunov_residual(a.matrix(), sols[0], d.matrix());
    auto sres = lyapunov_residual(a.matrix(), sols[1], d.lambda_derivative());
    return {CovarianceMatrix(std::move(sols[0])), std::move(sols[1]), res, sres};
}

struct InitialState {
    CovarianceMatrix sigma;
    Matrix           sensitivity; ///< d sigma / d Lambda
};

/// Optomechanical steady state under vacuum optical input (Brownian + CSL noise on
/// the mirror) with cavity 2 in its ground state and no cross-correlations.
inline InitialState initial_state(const SystemParams &p) {
    const auto a = build_drift(p);
    const auto d = build_diffusion(p, InputNoiseSpec::thermal(0.0, 0.0));

    const DriftMatrix     a4(a.matrix().topLeftCorner(4, 4));
    const DiffusionMatrix d4(d.matrix().topLeftCorner(4, 4), d.lambda_derivative().topLeftCorner(4, 4));
    const auto            reduced = steady_state(a4, d4);

    Matrix sigma                  = Matrix::Zero(6, 6);
    sigma.topLeftCorner(4, 4)     = reduced.sigma.matrix();
    sigma.bottomRightCorner(2, 2) = 0.5 * Eigen::Matrix2d::Identity();
    Matrix sens                   = Matrix::Zero(6, 6);
    sens.topLeftCorner(4, 4)      = reduced.sensitivity;
    return {CovarianceMatrix(std::move(sigma)), std::move(sens)};
}

struct Trajectory {
    std::vector<double>           times;
    std::vector<CovarianceMatrix> sigmas;
    std::vector<Matrix>           sensitivities;

    [[nodiscard]] std::size_t size() const { return times.size(); }
};

struct EvolveOptions {
    /// Fixed RK4 step as a fraction of 1 / spectral_radius(A).
    double step_fraction = 0.005;
    /// Run the uncertainty-relation check on every reported state.
    bool check_physicality = true;
};

namespace detail {
    template<int N>
    using Mat = Eigen::Matrix<double, N, N>;

    /// Classical RK4 on  s' = A s + s A^T + D  and  t' = A t + t A^T + dD, integrated side by side.
    template<int N>
    struct LyapunovStepper {
        Mat<N> a, at, d, dd;

        Mat<N> rhs(const Mat<N> &s, const Mat<N> &src) const { return a * s + s * at + src; }

        void step(Mat<N> &s, Mat<N> &t, double h) const {
            const Mat<N> k1 = rhs(s, d), l1 = rhs(t, dd);
            const Mat<N> k2 = rhs(s + 0.5 * h * k1, d), l2 = rhs(t + 0.5 * h * l1, dd);
            const Mat<N> k3 = rhs(s + 0.5 * h * k2, d), l3 = rhs(t + 0.5 * h * l2, dd);
            const Mat<N> k4 = rhs(s + h * k3, d), l4 = rhs(t + h * l3, dd);
            s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            s = (0.5 * (s + s.transpose())).eval();
            t = (0.5 * (t + t.transpose())).eval();
        }
    };

    template<int N>
    Trajectory integrate(const DriftMatrix &a, const DiffusionMatrix &d, const Matrix &sigma0, const Matrix &sens0,
                         std::span<const double> grid, const EvolveOptions &opt) {
        LyapunovStepper<N> stepper{a.matrix(), a.matrix().transpose(), d.matrix(), d.lambda_derivative()};
        Mat<N>             s = sigma0;
        Mat<N>             t = sens0;

        const double h_max = a.spectral_radius() > 0 ? opt.step_fraction / a.spectral_radius() : std::numeric_limits<double>::infinity();

        Trajectory traj;
        traj.times.reserve(grid.size());
        traj.sigmas.reserve(grid.size());
        traj.sensitivities.reserve(grid.size());

        double now = 0.0;
        for(double target : grid) {
            const double span  = target - now;
            const auto   steps = span > 0 ? std::max<long long>(1, static_cast<long long>(std::ceil(span / h_max))) : 0LL;
            const double h     = steps > 0 ? span / static_cast<double>(steps) : 0.0;
            for(long long k = 0; k < steps; ++k) stepper.step(s, t, h);
            now = target;

            if(!s.allFinite() || !t.allFinite()) {
                std::ostringstream msg;
                msg << "evolve: integration diverged at t = " << target << " s (step " << h << " s)";
                throw NonPhysicalState(msg.str(), target);
            }
            Matrix sd = s;
            if(opt.check_physicality && !gaussian::check_physicality(sd)) {
                std::ostringstream msg;
                msg << "evolve: state violates the uncertainty relation at t = " << target << " s (min eigenvalue "
                    << gaussian::uncertainty_margin(sd) << "); reduce the step fraction";
                throw NonPhysicalState(msg.str(), target);
            }
            traj.times.push_back(target);
            traj.sigmas.emplace_back(std::move(sd));
            traj.sensitivities.emplace_back(t);
        }
        return traj;
    }
} // namespace detail

/// Integrates the Lyapunov equation and its Lambda-derivative from t = 0 and reports
/// the state at each grid time. grid must be non-negative and strictly increasing.
inline Trajectory evolve(const DriftMatrix &a, const DiffusionMatrix &d, const CovarianceMatrix &sigma0, const Matrix &sensitivity0,
                         std::span<const double> grid, const EvolveOptions &opt = {}) {
    if(a.dim() != d.dim() || a.dim() != sigma0.dim() || sensitivity0.rows() != a.dim() || sensitivity0.cols() != a.dim())
        throw std::invalid_argument("evolve: dimension mismatch");
    if(!(opt.step_fraction > 0) || !std::isfinite(opt.step_fraction)) throw std::invalid_argument("evolve: step_fraction must be > 0");
    for(std::size_t i = 0; i < grid.size(); ++i) {
        if(!std::isfinite(grid[i]) || grid[i] < 0) throw std::invalid_argument("evolve: grid times must be finite and >= 0");
        if(i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("evolve: grid must be strictly increasing");
    }
    if(opt.check_physicality && !gaussian::check_physicality(sigma0))
        throw NonPhysicalState("evolve: initial state violates the uncertainty relation", 0.0);

    switch(a.dim()) {
        case 2: return detail::integrate<2>(a, d, sigma0.matrix(), sensitivity0, grid, opt);
        case 4: return detail::integrate<4>(a, d, sigma0.matrix(), sensitivity0, grid, opt);
        case 6: return detail::integrate<6>(a, d, sigma0.matrix(), sensitivity0, grid, opt);
        default: return detail::integrate<Eigen::Dynamic>(a, d, sigma0.matrix(), sensitivity0, grid, opt);
    }
}

/// Lambda-independent initial state: sensitivity starts at zero.
inline Trajectory evolve(const DriftMatrix &a, const DiffusionMatrix &d, const CovarianceMatrix &sigma0, std::span<const double> grid,
                         const EvolveOptions &opt = {}) {
    return evolve(a, d, sigma0, Matrix::Zero(a.dim(), a.dim()), grid, opt);
}

inline Trajectory evolve(const DriftMatrix &a, const DiffusionMatrix &d, const InitialState &init, std::span<const double> grid,
                         const EvolveOptions &opt = {}) {
    return evolve(a, d, init.sigma, init.sensitivity, grid, opt);
}

} // namespace cslfi::dynamics
