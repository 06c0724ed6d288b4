#include <chrono>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cslfi/dynamics.hpp"

using namespace cslfi;
using namespace cslfi::dynamics;

namespace {

double max_abs(const Matrix &m) { return m.cwiseAbs().maxCoeff(); }

/// Parameters of the shipped transient example.
SystemParams sample() {
    SystemParams p;
    p.omega_m     = 1e7;
    p.gamma_m     = 1e4;
    p.kappa       = 4e6;
    p.delta1      = 0;
    p.delta2      = 1.6e7;
    p.g           = 4e6;
    p.temperature = 0.01;
    p.lambda_csl  = 1e6;
    return p;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for(int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

} // namespace

TEST(Drift, ZeroCouplingIsBlockDiagonal) {
    auto p = sample();
    p.g    = 0;
    const Matrix a = build_drift(p).matrix();
    EXPECT_EQ(max_abs(a.topRightCorner(2, 4)), 0.0);
    EXPECT_EQ(max_abs(a.bottomLeftCorner(4, 2)), 0.0);
    EXPECT_EQ(max_abs(a.block(2, 4, 2, 2)), 0.0);
}

TEST(Drift, EigenvaluesWithoutCouplingOrDetuning) {
    SystemParams p;
    p.omega_m = 3.0;
    p.gamma_m = 0.4;
    p.kappa   = 1.7;
    p.temperature = 0;
    const auto spec = Eigen::EigenSolver<Matrix>(build_drift(p).matrix()).eigenvalues();
    int        mech = 0, cav = 0;
    for(const auto &ev : spec) {
        if(std::abs(ev.real() + 1.7) < 1e-12 && std::abs(ev.imag()) < 1e-12) ++cav;
        if(std::abs(ev.real() + 0.2) < 1e-12 && std::abs(std::abs(ev.imag()) - std::sqrt(9.0 - 0.04)) < 1e-12) ++mech;
    }
    EXPECT_EQ(cav, 4);
    EXPECT_EQ(mech, 2);
}

TEST(Drift, SampleIsHurwitz) {
    const auto a = build_drift(sample());
    EXPECT_TRUE(a.hurwitz());
    EXPECT_LT(a.max_real_eigenvalue(), 0.0);
}

TEST(Drift, UndampedIsNotHurwitz) {
    auto p    = sample();
    p.gamma_m = 0;
    p.g       = 0;
    EXPECT_FALSE(build_drift(p).hurwitz());
    EXPECT_THROW(steady_state(build_drift(p), build_diffusion(p, InputNoiseSpec::thermal(0, 0))), NotHurwitz);
}

TEST(SystemParams, Validation) {
    auto p = sample();
    p.kappa = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = sample();
    p.temperature = -1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = sample();
    p.lambda_csl = -1;
    EXPECT_THROW(build_drift(p), std::invalid_argument);
    EXPECT_THROW(InputNoiseSpec::tms(-0.1, 0).validate(), std::invalid_argument);
    EXPECT_THROW(InputNoiseSpec::thermal(-1, 0).validate(), std::invalid_argument);
}

TEST(Diffusion, VacuumInputs) {
    const auto p = sample();
    for(auto noise : {InputNoiseSpec::thermal(0, 0), InputNoiseSpec::tms(0, 1.3)}) {
        const Matrix d = build_diffusion(p, noise).matrix();
        EXPECT_LE(max_abs(d.bottomRightCorner(4, 4) - p.kappa * Matrix::Identity(4, 4)), 1e-9);
    }
}

TEST(Diffusion, MomentumEntry) {
    auto p        = sample();
    p.temperature = 0;
    const Matrix d = build_diffusion(p, InputNoiseSpec::thermal(0, 0)).matrix();
    EXPECT_EQ(d(1, 1), 1e6);
    EXPECT_EQ(d(0, 0), 0.0);
    p = sample();
    EXPECT_DOUBLE_EQ(build_diffusion(p, InputNoiseSpec::thermal(0, 0)).matrix()(1, 1),
                     2 * p.gamma_m * 1.380649e-23 * p.temperature / (1.054571817e-34 * p.omega_m) + p.lambda_csl);
}

TEST(Diffusion, ThermalAndSqueezedBlocks) {
    const auto   p = sample();
    const Matrix d = build_diffusion(p, InputNoiseSpec::thermal(2, 5)).matrix();
    EXPECT_DOUBLE_EQ(d(2, 2), 2 * p.kappa * 2.5);
    EXPECT_DOUBLE_EQ(d(5, 5), 2 * p.kappa * 5.5);

    const double r = 0.8, psi = 0.6;
    const Matrix t = build_diffusion(p, InputNoiseSpec::tms(r, psi)).matrix();
    EXPECT_NEAR(t(2, 2), p.kappa * std::cosh(2 * r), 1e-6);
    EXPECT_NEAR(t(2, 4), p.kappa * std::sinh(2 * r) * std::cos(psi), 1e-6);
    EXPECT_NEAR(t(2, 5), p.kappa * std::sinh(2 * r) * std::sin(psi), 1e-6);
    EXPECT_NEAR(t(3, 5), -p.kappa * std::sinh(2 * r) * std::cos(psi), 1e-6);
    EXPECT_EQ(t, Matrix(t.transpose()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(t);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12 * max_abs(t));
}

TEST(Diffusion, LambdaDerivativeIsUnitMomentumEntry) {
    const Matrix dd = build_diffusion(sample(), InputNoiseSpec::tms(1, 2)).lambda_derivative();
    EXPECT_EQ(dd(1, 1), 1.0);
    EXPECT_EQ(dd.cwiseAbs().sum(), 1.0);
}

TEST(Evolve, IsotropicAnalyticSolution) {
    const double kappa = 2.5e6, d = 3.0e6, s0 = 0.7;
    const DriftMatrix     a(-kappa * Matrix::Identity(6, 6));
    const DiffusionMatrix dm(d * Matrix::Identity(6, 6));
    const auto            grid = linspace(0.0, 10.0 / kappa, 51);

    const auto start = std::chrono::steady_clock::now();
    const auto traj  = evolve(a, dm, CovarianceMatrix(s0 * Matrix::Identity(6, 6)), grid);
    const auto secs  = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(secs, 1.0);

    double worst = 0;
    for(std::size_t i = 0; i < traj.size(); ++i) {
        const double e     = std::exp(-2 * kappa * grid[i]);
        const double exact = e * s0 + (1 - e) * d / (2 * kappa);
        worst              = std::max(worst, max_abs(traj.sigmas[i].matrix() - exact * Matrix::Identity(6, 6)));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Evolve, HomogeneousDecay) {
    auto p    = sample();
    p.gamma_m = 1e5;
    const auto a  = build_drift(p);
    const auto d0 = DiffusionMatrix(Matrix::Zero(6, 6));
    EvolveOptions opt;
    opt.check_physicality = false; // without noise the state shrinks below vacuum by design
    opt.step_fraction     = 0.05;
    const auto traj = evolve(a, d0, CovarianceMatrix::thermal(3, 4.0), linspace(0, 2e-4, 40), opt);
    double     prev = traj.sigmas[0].matrix().norm();
    for(std::size_t i = 1; i < traj.size(); ++i) {
        const double now = traj.sigmas[i].matrix().norm();
        EXPECT_LE(now, prev * (1 + 1e-12));
        prev = now;
    }
    EXPECT_LT(prev, 1e-3 * traj.sigmas[0].matrix().norm());
}

TEST(Evolve, SensitivityMatchesFiniteDifference) {
    const auto p    = sample();
    const auto grid = linspace(1e-7, 1e-6, 10);
    const double h  = 1e-3 * p.lambda_csl;
    for(auto noise : {InputNoiseSpec::thermal(15, 15), InputNoiseSpec::tms(2, M_PI)}) {
        auto run = [&](double lambda) {
            auto q       = p;
            q.lambda_csl = lambda;
            return evolve(build_drift(q), build_diffusion(q, noise), initial_state(q), grid);
        };
        const auto mid = run(p.lambda_csl), up = run(p.lambda_csl + h), down = run(p.lambda_csl - h);
        for(std::size_t i = 0; i < grid.size(); ++i) {
            const Matrix fd  = (up.sigmas[i].matrix() - down.sigmas[i].matrix()) / (2 * h);
            const double rel = max_abs(fd - mid.sensitivities[i]) / max_abs(mid.sensitivities[i]);
            EXPECT_LT(rel, 1e-5) << "t = " << grid[i];
        }
    }
}

TEST(Evolve, SensitivityIndependentOfLambda) {
    auto p  = sample();
    auto q  = p;
    q.lambda_csl *= 2;
    const auto grid = linspace(1e-7, 5e-7, 5);
    const auto n    = InputNoiseSpec::tms(1, M_PI);
    const auto a    = evolve(build_drift(p), build_diffusion(p, n), initial_state(p), grid);
    const auto b    = evolve(build_drift(q), build_diffusion(q, n), initial_state(q), grid);
    for(std::size_t i = 0; i < grid.size(); ++i)
        EXPECT_LE(max_abs(a.sensitivities[i] - b.sensitivities[i]), 1e-12 * max_abs(a.sensitivities[i]));
}

TEST(Evolve, FourthOrderConvergence) {
    const auto   p = sample();
    const auto   a = build_drift(p);
    const auto   d = build_diffusion(p, InputNoiseSpec::tms(1, M_PI));
    const auto   init = initial_state(p);
    const std::vector<double> grid{4e-7};
    auto at = [&](double frac) {
        EvolveOptions opt;
        opt.step_fraction = frac;
        return evolve(a, d, init, grid, opt).sigmas[0].matrix();
    };
    const Matrix s1 = at(0.4), s2 = at(0.2), s3 = at(0.1);
    const double e1 = max_abs(s1 - s2), e2 = max_abs(s2 - s3);
    const double ratio = e1 / e2;
    EXPECT_GT(ratio, 12.0);
    EXPECT_LT(ratio, 20.0);
}

TEST(Evolve, TraceDevelopmentAtStart) {
    const auto   p    = sample();
    const auto   a    = build_drift(p);
    const auto   d    = build_diffusion(p, InputNoiseSpec::thermal(15, 15));
    const auto   init = initial_state(p);
    const Matrix s0   = init.sigma.matrix();
    const double expected = (a.matrix() * s0 + s0 * a.matrix().transpose() + d.matrix()).trace();
    auto slope = [&](double h) {
        const std::vector<double> grid{h};
        return (evolve(a, d, init, grid).sigmas[0].matrix().trace() - s0.trace()) / h;
    };
    const double h = 1e-10;
    const double richardson = 2 * slope(h / 2) - slope(h);
    EXPECT_NEAR(richardson, expected, 1e-5 * std::abs(expected));
}

TEST(Evolve, EveryStatePhysical) {
    const auto p = sample();
    for(auto noise : {InputNoiseSpec::thermal(15, 15), InputNoiseSpec::tms(2, M_PI)}) {
        const auto traj = evolve(build_drift(p), build_diffusion(p, noise), initial_state(p), linspace(0, 2e-6, 101));
        for(const auto &s : traj.sigmas) EXPECT_TRUE(gaussian::check_physicality(s));
        for(const auto &t : traj.sensitivities) EXPECT_EQ(t, Matrix(t.transpose()));
    }
}

TEST(Evolve, RejectsBadInput) {
    const auto a = build_drift(sample());
    const auto d = build_diffusion(sample(), InputNoiseSpec::thermal(0, 0));
    const auto v = CovarianceMatrix::vacuum(3);
    EXPECT_THROW(evolve(a, d, v, std::vector<double>{1e-7, 1e-8}), std::invalid_argument);
    EXPECT_THROW(evolve(a, d, v, std::vector<double>{1e-7, 1e-7}), std::invalid_argument);
    EXPECT_THROW(evolve(a, d, v, std::vector<double>{-1e-7}), std::invalid_argument);
    EXPECT_THROW(evolve(a, d, CovarianceMatrix(0.25 * Matrix::Identity(6, 6)), std::vector<double>{1e-7}), NonPhysicalState);
    EXPECT_THROW(evolve(a, d, CovarianceMatrix::vacuum(2), std::vector<double>{1e-7}), std::invalid_argument);
}

TEST(Evolve, OversizedStepAbortsWithTime) {
    const auto    p = sample();
    EvolveOptions opt;
    opt.step_fraction = 10.0;
    try {
        evolve(build_drift(p), build_diffusion(p, InputNoiseSpec::thermal(1, 1)), initial_state(p), std::vector<double>{1e-6, 1e-4}, opt);
        FAIL() << "expected NonPhysicalState";
    } catch(const NonPhysicalState &e) {
        EXPECT_GT(e.time(), 0.0);
    }
}

TEST(SteadyState, IsotropicBalance) {
    const double kappa = 3.0, d = 5.0;
    const auto   ss = steady_state(DriftMatrix(-kappa * Matrix::Identity(4, 4)), DiffusionMatrix(d * Matrix::Identity(4, 4)));
    EXPECT_LE(max_abs(ss.sigma.matrix() - d / (2 * kappa) * Matrix::Identity(4, 4)), 1e-14);
}

TEST(SteadyState, ResidualOnSample) {
    const auto p = sample();
    for(auto noise : {InputNoiseSpec::thermal(15, 15), InputNoiseSpec::tms(2, M_PI)}) {
        const auto ss = steady_state(build_drift(p), build_diffusion(p, noise));
        EXPECT_LT(ss.residual.scaled, 1e-10);
        EXPECT_LT(ss.sensitivity_residual.scaled, 1e-10);
        EXPECT_TRUE(gaussian::check_physicality(ss.sigma));
    }
}

TEST(SteadyState, SensitivityIndependentOfLambda) {
    auto p = sample();
    auto q = p;
    q.lambda_csl *= 2;
    const auto n = InputNoiseSpec::tms(1, M_PI);
    const auto a = steady_state(build_drift(p), build_diffusion(p, n));
    const auto b = steady_state(build_drift(q), build_diffusion(q, n));
    EXPECT_LE(max_abs(a.sensitivity - b.sensitivity), 1e-12 * max_abs(a.sensitivity));
    // D is affine in Lambda, so sigma_ss is too.
    EXPECT_LE(max_abs(b.sigma.matrix() - a.sigma.matrix() - p.lambda_csl * a.sensitivity), 1e-9 * max_abs(a.sigma.matrix()));
}

TEST(SteadyState, AgreesWithLongTimeIntegration) {
    const auto p  = sample();
    const auto a  = build_drift(p);
    const auto d  = build_diffusion(p, InputNoiseSpec::tms(2, M_PI));
    const auto ss = steady_state(a, d);
    EvolveOptions opt;
    opt.step_fraction = 0.05;
    const std::vector<double> grid{20.0 / std::abs(a.max_real_eigenvalue())};
    const auto traj = evolve(a, d, initial_state(p), grid, opt);
    EXPECT_LT(max_abs(traj.sigmas[0].matrix() - ss.sigma.matrix()), 1e-6);
}

TEST(InitialState, NoDriveNoNoise) {
    // Mechanical diffusion carries no zero-point term, so the mechanical block relaxes to zero.
    auto p        = sample();
    p.g           = 0;
    p.temperature = 0;
    p.lambda_csl  = 0;
    const auto init = initial_state(p);
    Matrix     expected = 0.5 * Matrix::Identity(6, 6);
    expected.topLeftCorner(2, 2).setZero();
    EXPECT_LE(max_abs(init.sigma.matrix() - expected), 1e-14);
}

TEST(InitialState, SecondCavityInVacuum) {
    for(double lambda : {0.0, 1e6, 1e9}) {
        auto p       = sample();
        p.lambda_csl = lambda;
        const auto init = initial_state(p);
        const Matrix &s = init.sigma.matrix();
        EXPECT_EQ(Matrix(s.bottomRightCorner(2, 2)), Matrix(0.5 * Matrix::Identity(2, 2)));
        EXPECT_EQ(max_abs(s.topRightCorner(4, 2)), 0.0);
        EXPECT_TRUE(gaussian::check_physicality(init.sigma));
    }
}

TEST(InitialState, SensitivityMatchesFiniteDifference) {
    auto         p = sample();
    const double h = 1e-3 * p.lambda_csl;
    auto         at = [&](double lambda) {
        auto q       = p;
        q.lambda_csl = lambda;
        return initial_state(q).sigma.matrix();
    };
    const Matrix fd   = (at(p.lambda_csl + h) - at(p.lambda_csl - h)) / (2 * h);
    const Matrix sens = initial_state(p).sensitivity;
    EXPECT_GT(max_abs(sens), 0.0);
    EXPECT_LT(max_abs(fd - sens) / max_abs(sens), 1e-6);
}
