#pragma once

#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dcqo {

using Complex = std::complex<double>;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Row2 = Eigen::RowVector2d;
using Row3 = Eigen::RowVector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat2c = Eigen::Matrix2cd;
using MatXc = Eigen::MatrixXcd;
using VecXc = Eigen::VectorXcd;

// Base for every error this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Observer parameters violate a structural requirement (normalization, SPD, ...).
class DesignError : public Error {
public:
    using Error::Error;
};

// A numerical routine cannot meet its accuracy contract (overflow, step-halving
// disagreement, failed eigendecomposition).
class NumericalError : public Error {
public:
    using Error::Error;
};

// The truncated Fock space is not large enough for the requested evolution.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Requested problem size exceeds a configured cap.
class ResourceError : public Error {
public:
    using Error::Error;
};

// Malformed configuration text.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The real skew-symmetric matrix [[0, 1], [-1, 0]] that fixes the oscillator
/// commutation structure [x_o, x_o^T] = 2iJ.
inline Mat2 symplectic_j()
{
    Mat2 J;
    J << 0.0, 1.0, -1.0, 0.0;
    return J;
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m)
{
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

/// Compact %g rendering for diagnostics.
inline std::string format_short(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace dcqo
