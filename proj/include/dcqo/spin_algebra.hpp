#pragma once

#include <algorithm>
#include <array>

#include "dcqo/types.hpp"

namespace dcqo {

/// Skew-symmetric matrix of a 3-vector with Theta(b) x = x cross b.
inline Mat3 theta(const Vec3& b)
{
    Mat3 m;
    m << 0.0, b(2), -b(1),
        -b(2), 0.0, b(0),
        b(1), -b(0), 0.0;
    return m;
}

/// Max-abs residuals of the four Theta identities for a pair (b, g):
///   Theta(b) g + Theta(g) b                                   = 0
///   Theta(b) b                                                = 0
///   Theta(b) Theta(g) - (g b^T - (b^T g) I)                   = 0
///   Theta(Theta(b) g) - (Theta(b) Theta(g) - Theta(g) Theta(b)) = 0
struct ThetaResiduals {
    double antisymmetry = 0.0;
    double self_annihilation = 0.0;
    double product = 0.0;
    double composition = 0.0;

    double max() const
    {
        return std::max(std::max(antisymmetry, self_annihilation), std::max(product, composition));
    }
};

inline ThetaResiduals check_theta_identities(const Vec3& b, const Vec3& g)
{
    const Mat3 tb = theta(b);
    const Mat3 tg = theta(g);
    ThetaResiduals r;
    r.antisymmetry = max_abs(tb * g + tg * b);
    r.self_annihilation = max_abs(tb * b);
    r.product = max_abs(tb * tg - (g * b.transpose() - b.dot(g) * Mat3::Identity()));
    r.composition = max_abs(theta(tb * g) - (tb * tg - tg * tb));
    return r;
}

/// Drift of the free plant x_p' = A_p x_p generated by H_p = r_p^T x_p.
inline Mat3 plant_drift(const Vec3& r_p) { return -2.0 * theta(r_p); }

/// Qubit plant: H_p = r_p^T x_p, estimated variable z_p = C_p x_p.
struct SpinPlant {
    Vec3 r_p = Vec3::Zero();
    Row3 C_p = Row3(1.0, 0.0, 0.0);

    Mat3 drift() const { return plant_drift(r_p); }
};

struct PauliMatrices {
    Mat2c sigma1;
    Mat2c sigma2;
    Mat2c sigma3;

    const Mat2c& operator[](int i) const
    {
        return i == 0 ? sigma1 : (i == 1 ? sigma2 : sigma3);
    }
};

inline PauliMatrices pauli()
{
    const Complex I(0.0, 1.0);
    PauliMatrices s;
    s.sigma1 << 0.0, 1.0, 1.0, 0.0;
    s.sigma2 << 0.0, -I, I, 0.0;
    s.sigma3 << 1.0, 0.0, 0.0, -1.0;
    return s;
}

/// Levi-Civita symbol on zero-based indices.
constexpr int levi_civita(int i, int j, int k)
{
    if (i == j || j == k || i == k) return 0;
    return ((i + 1) % 3 == j) ? 1 : -1;
}

template <typename M>
M commutator(const M& a, const M& b)
{
    return a * b - b * a;
}

/// sigma_i sigma_j = delta * I + sum_k coefficients(k) sigma_k.
struct PauliProduct {
    double delta = 0.0;
    Eigen::Vector3cd coefficients = Eigen::Vector3cd::Zero();
};

using PauliProductTable = std::array<std::array<PauliProduct, 3>, 3>;

inline PauliProductTable pauli_product_table()
{
    const Complex I(0.0, 1.0);
    PauliProductTable table;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            PauliProduct& entry = table[i][j];
            entry.delta = (i == j) ? 1.0 : 0.0;
            for (int k = 0; k < 3; ++k) entry.coefficients(k) = I * double(levi_civita(i, j, k));
        }
    }
    return table;
}

/// Expands a PauliProduct back into its 2x2 matrix.
inline Mat2c expand(const PauliProduct& p)
{
    const PauliMatrices s = pauli();
    Mat2c m = p.delta * Mat2c::Identity();
    for (int k = 0; k < 3; ++k) m += p.coefficients(k) * s[k];
    return m;
}

} // namespace dcqo
