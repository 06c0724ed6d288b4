#pragma once

// CSL diffusion rate from the fundamental collapse parameters.
//
//   Lambda = lambda_CSL hbar alpha / (omega_m m r_CSL^2)
//   alpha  = r_c^5 / (pi^{3/2} m0^2) Int d^3k k_x^2 exp(-r_c^2 k^2) |rho~(k)|^2
//
// With u = r_c k the integral becomes dimensionless and alpha = (m/m0)^2 * f(shape/r_c).

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cslfi/constants.hpp"
#include "cslfi/errors.hpp"

namespace cslfi::csl {

struct CslParams {
    double lambda_rate = 0; ///< collapse rate lambda_CSL, 1/s
    double r_c         = 0; ///< correlation length r_CSL, m
    double mass        = 0; ///< kg
    double omega_m     = 0; ///< rad/s

    void validate() const {
        if(!(lambda_rate >= 0 && std::isfinite(lambda_rate))) throw std::invalid_argument("CslParams: lambda_rate must be >= 0");
        if(!(r_c > 0 && std::isfinite(r_c))) throw std::invalid_argument("CslParams: r_c must be > 0");
        if(!(mass > 0 && std::isfinite(mass))) throw std::invalid_argument("CslParams: mass must be > 0");
        if(!(omega_m > 0 && std::isfinite(omega_m))) throw std::invalid_argument("CslParams: omega_m must be > 0");
    }

    friend bool operator==(const CslParams &, const CslParams &) = default;
};

enum class Shape { sphere, cube };

inline const char *to_string(Shape s) { return s == Shape::sphere ? "sphere" : "cube"; }

/// Homogeneous body; `size` is the sphere radius or the cube side, in metres.
struct MassDensity {
    Shape  shape = Shape::sphere;
    double size  = 0;
    double mass  = 0;

    [[nodiscard]] double volume() const {
        return shape == Shape::sphere ? 4.0 / 3.0 * constants::pi * size * size * size : size * size * size;
    }
    [[nodiscard]] double density() const { return mass / volume(); }

    void validate() const {
        if(!(size > 0 && std::isfinite(size))) throw std::invalid_argument("MassDensity: size must be > 0");
        if(!(mass > 0 && std::isfinite(mass))) throw std::invalid_argument("MassDensity: mass must be > 0");
    }

    friend bool operator==(const MassDensity &, const MassDensity &) = default;
};

/// 3 j1(x) / x, the normalised Fourier transform of a uniform ball.
inline double sphere_form_factor(double x) {
    x = std::abs(x);
    if(x < 0.2) {
        const double x2 = x * x;
        return 1.0 - x2 / 10.0 + x2 * x2 / 280.0 - x2 * x2 * x2 / 15120.0 + x2 * x2 * x2 * x2 / 1330560.0;
    }
    return 3.0 * (std::sin(x) - x * std::cos(x)) / (x * x * x);
}

inline double sinc(double x) {
    if(std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

struct QuadratureResult {
    double value          = 0;
    double relative_error = 0;
};

namespace detail {
    inline constexpr double upper_limit     = 9.0; // exp(-81) is below double resolution of the integrands
    inline constexpr double target_relative = 1e-6;

    /// Adaptive Gauss-Kronrod on [0, upper_limit]; the error is the disagreement
    /// between the 61- and 31-point rules at full adaptivity.
    template<class F>
    QuadratureResult integrate(F f, const char *what) {
        using boost::math::quadrature::gauss_kronrod;
        const double fine   = gauss_kronrod<double, 61>::integrate(f, 0.0, upper_limit, 25, 1e-13);
        const double coarse = gauss_kronrod<double, 31>::integrate(f, 0.0, upper_limit, 25, 1e-13);
        const double rel    = std::abs(fine - coarse) / std::max(std::abs(fine), std::numeric_limits<double>::min());
        if(!std::isfinite(fine) || rel > target_relative) {
            std::ostringstream msg;
            msg << what << ": quadrature did not converge (achieved relative error " << rel << ")";
            throw QuadratureError(msg.str(), rel);
        }
        return {fine, rel};
    }
} // namespace detail

/// alpha / (m/m0)^2 for the given shape, i.e. the shape-only part of the mass-scaling factor.
inline QuadratureResult shape_factor(Shape shape, double size_over_rc) {
    if(!(size_over_rc > 0) || !std::isfinite(size_over_rc)) throw std::invalid_argument("shape_factor: size must be > 0");
    const double pi32 = std::pow(constants::pi, 1.5);
    if(shape == Shape::sphere) {
        // Angular part of k_x^2 gives 4 pi / 3 times the radial k^4 moment.
        auto integrand = [b = size_over_rc](double u) {
            const double f = sphere_form_factor(u * b);
            return u * u * u * u * std::exp(-u * u) * f * f;
        };
        auto r = detail::integrate(integrand, "alpha_factor(sphere)");
        return {4.0 * constants::pi / 3.0 / pi32 * r.value, r.relative_error};
    }
    // Cube: the transform factorises into sinc(k_i L / 2) per axis.
    const double half = 0.5 * size_over_rc;
    auto         moment2 = [half](double u) {
        const double s = sinc(u * half);
        return u * u * std::exp(-u * u) * s * s;
    };
    auto moment0 = [half](double u) {
        const double s = sinc(u * half);
        return std::exp(-u * u) * s * s;
    };
    auto m2 = detail::integrate(moment2, "alpha_factor(cube)");
    auto m0 = detail::integrate(moment0, "alpha_factor(cube)");
    // Integrals over the full line are twice the half-line values.
    const double value = (2.0 * m2.value) * std::pow(2.0 * m0.value, 2) / pi32;
    return {value, m2.relative_error + 2.0 * m0.relative_error};
}

/// Mass-scaling factor alpha (dimensionless; m0 = 1 amu).
inline double alpha_factor(const MassDensity &density, double r_c) {
    density.validate();
    if(!(r_c > 0) || !std::isfinite(r_c)) throw std::invalid_argument("alpha_factor: r_c must be > 0");
    const double ratio = density.mass / constants::amu;
    return ratio * ratio * shape_factor(density.shape, density.size / r_c).value;
}

/// Point-mass limit alpha = m^2 / (2 m0^2).
inline double alpha_point_mass(double mass) {
    const double ratio = mass / constants::amu;
    return 0.5 * ratio * ratio;
}

/// Lambda = lambda_CSL hbar alpha / (omega_m m r_CSL^2), in 1/s.
inline double csl_diffusion_rate(const CslParams &p, double alpha) {
    p.validate();
    return p.lambda_rate * constants::hbar * alpha / (p.omega_m * p.mass * p.r_c * p.r_c);
}

inline double csl_diffusion_rate(const CslParams &p, const MassDensity &density) {
    p.validate();
    if(std::abs(density.mass - p.mass) > 1e-12 * p.mass) throw std::invalid_argument("csl_diffusion_rate: density mass differs from CSL mass");
    return csl_diffusion_rate(p, alpha_factor(density, p.r_c));
}

} // namespace cslfi::csl
