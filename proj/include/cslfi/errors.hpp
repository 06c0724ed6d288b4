#pragma once

#include <stdexcept>
#include <string>

namespace cslfi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The physics cannot proceed: unstable drift, unphysical state, singular formula.
class PhysicsError : public Error {
public:
    using Error::Error;
};

/// Drift matrix has an eigenvalue with non-negative real part; no steady state exists.
class NotHurwitz : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

/// A covariance matrix violates the uncertainty relation.
class NonPhysicalState : public PhysicsError {
public:
    NonPhysicalState(const std::string &what, double time) : PhysicsError(what), time_(time) {}
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// The single-mode QFI closed form divides by 2 det(sigma)^2 - 1/8, which vanishes for pure states.
class PureStateSingularity : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

class QuadratureError : public Error {
public:
    QuadratureError(const std::string &what, double achieved) : Error(what), achieved_(achieved) {}
    /// Relative error estimate reached before giving up.
    [[nodiscard]] double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace cslfi
