#pragma once

// Seeded random inputs for property sweeps. Everything draws from one
// std::mt19937_64 so a sweep is reproducible from its integer seed.

#include <cmath>
#include <numbers>
#include <random>

#include "dcqo/observer_design.hpp"

namespace dcqo {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec3 random_cube3(Rng& rng)
{
    return Vec3(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
}

inline Vec3 random_unit3(Rng& rng)
{
    std::normal_distribution<double> n;
    Vec3 v;
    do {
        v = Vec3(n(rng), n(rng), n(rng));
    } while (v.norm() < 1e-3);
    return v.normalized();
}

/// Symmetric positive definite 2x2 with eigenvalues drawn from [lo, hi].
inline Mat2 random_spd(Rng& rng, double lo = 0.2, double hi = 3.0)
{
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    Mat2 rot;
    rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    const Vec2 eig(uniform(rng, lo, hi), uniform(rng, lo, hi));
    const Mat2 r = rot * eig.asDiagonal() * rot.transpose();
    return 0.5 * (r + r.transpose());
}

inline Vec2 random_beta(Rng& rng)
{
    Vec2 b;
    do {
        b = Vec2(uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5));
    } while (b.norm() < 0.2);
    return b;
}

/// A valid observer for a random unit-norm C_p.
inline ObserverDesign random_design(Rng& rng)
{
    const Mat2 r = random_spd(rng);
    const Vec2 b = random_beta(rng);
    return design_for_plant(random_unit3(rng).transpose(), r, b);
}

} // namespace dcqo
