#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dcqo/numerics.hpp"
#include "dcqo/spin_algebra.hpp"

namespace dcqo {

/// Parameters of a direct-coupled harmonic-oscillator observer for the qubit
/// plant. The coupling Hamiltonian uses R_c = alpha beta^T with alpha = C_p^T.
struct ObserverDesign {
    Mat2 R_o = Mat2::Identity();
    Vec2 beta = Vec2(-1.0, 0.0);
    Row2 C_o = Row2(1.0, 0.0);
    Vec3 alpha = Vec3(1.0, 0.0, 0.0);
    Mat32 R_c = Vec3(1.0, 0.0, 0.0) * Vec2(-1.0, 0.0).transpose();

    /// C_o R_o^{-1} beta; must equal -1 for a valid observer.
    double gain() const { return C_o * R_o.inverse() * beta; }
};

// Names used in DesignReport::violated_conditions.
namespace condition {
inline constexpr const char* R_o_symmetric = "R_o_symmetric";
inline constexpr const char* R_o_positive_definite = "R_o_positive_definite";
inline constexpr const char* gain_condition = "gain_condition";
inline constexpr const char* alpha_unit_norm = "alpha_unit_norm";
inline constexpr const char* beta_nonzero = "beta_nonzero";
inline constexpr const char* coupling_rank_one = "coupling_rank_one";
inline constexpr const char* plant_drift_zero = "plant_drift_zero";
inline constexpr const char* alpha_matches_plant = "alpha_matches_plant";
} // namespace condition

struct DesignReport {
    bool valid = false;
    std::vector<std::string> violated_conditions;
    // sqrt(lambda_max(R_o) / lambda_min(R_o)); NaN when R_o is not SPD.
    double bound = std::numeric_limits<double>::quiet_NaN();
    double gain = std::numeric_limits<double>::quiet_NaN();

    bool violates(const std::string& name) const
    {
        for (const auto& v : violated_conditions)
            if (v == name) return true;
        return false;
    }
};

inline constexpr double kDesignTolerance = 1e-12;

/// Checks the observer conditions: R_o symmetric positive definite,
/// C_o R_o^{-1} beta = -1, |alpha| = 1, beta != 0, R_c = alpha beta^T.
inline DesignReport validate(const ObserverDesign& d)
{
    DesignReport rep;
    auto fail = [&rep](const char* name) { rep.violated_conditions.emplace_back(name); };

    const bool symmetric = std::abs(d.R_o(0, 1) - d.R_o(1, 0)) <= kDesignTolerance * std::max(1.0, max_abs(d.R_o));
    if (!symmetric) fail(condition::R_o_symmetric);

    bool spd = false;
    if (symmetric) {
        try {
            rep.bound = spectral_bound(d.R_o).bound;
            spd = true;
        } catch (const DesignError&) {
        }
    }
    if (!spd) fail(condition::R_o_positive_definite);

    if (!(d.beta.norm() > 0.0)) fail(condition::beta_nonzero);

    if (std::abs(d.R_o.determinant()) > 0.0) {
        rep.gain = d.gain();
        if (!(std::abs(rep.gain + 1.0) <= kDesignTolerance)) fail(condition::gain_condition);
    } else {
        fail(condition::gain_condition);
    }

    if (!(std::abs(d.alpha.norm() - 1.0) <= kDesignTolerance)) fail(condition::alpha_unit_norm);

    const Mat32 expected = d.alpha * d.beta.transpose();
    if (!(max_abs(d.R_c - expected) <= kDesignTolerance * std::max(1.0, max_abs(expected))))
        fail(condition::coupling_rank_one);

    rep.valid = rep.violated_conditions.empty();
    return rep;
}

/// validate() plus the plant-side requirements: A_p = 0 and alpha = C_p^T.
inline DesignReport validate(const ObserverDesign& d, const SpinPlant& plant)
{
    DesignReport rep = validate(d);
    if (max_abs(plant.r_p) != 0.0) rep.violated_conditions.emplace_back(condition::plant_drift_zero);
    if (max_abs(plant.C_p.transpose() - d.alpha) > kDesignTolerance)
        rep.violated_conditions.emplace_back(condition::alpha_matches_plant);
    rep.valid = rep.violated_conditions.empty();
    return rep;
}

/// Builds the observer for estimating z_p = C_p x_p. C_o is the minimum-norm
/// row satisfying C_o R_o^{-1} beta = -1.
inline ObserverDesign design_for_plant(const Row3& C_p, const Mat2& R_o, const Vec2& beta)
{
    if (!(std::abs(C_p.norm() - 1.0) <= kDesignTolerance))
        throw DesignError("design_for_plant: C_p must have unit norm (got " + format_short(C_p.norm()) + ")");
    if (!(beta.norm() > 0.0)) throw DesignError("design_for_plant: beta must be non-zero");
    if (std::abs(R_o(0, 1) - R_o(1, 0)) > kDesignTolerance * std::max(1.0, max_abs(R_o)))
        throw DesignError("design_for_plant: R_o must be symmetric");
    spectral_bound(R_o); // throws unless SPD

    ObserverDesign d;
    d.R_o = R_o;
    d.beta = beta;
    d.alpha = C_p.transpose();
    d.R_c = d.alpha * beta.transpose();
    const Vec2 v = R_o.llt().solve(beta);
    d.C_o = (-v.transpose() / v.squaredNorm()).array() + 0.0; // + 0.0 clears negative zeros

    const DesignReport rep = validate(d);
    if (!rep.valid) throw DesignError("design_for_plant: constructed design failed validation");
    return d;
}

/// Assembles a design without enforcing any condition, so that validate() can
/// report on it. C_o defaults to the minimum-norm solution when R_o is
/// invertible and beta != 0, and to zero otherwise.
inline ObserverDesign assemble_design(const Row3& C_p, const Mat2& R_o, const Vec2& beta,
                                      const std::optional<Row2>& C_o = std::nullopt)
{
    ObserverDesign d;
    d.R_o = R_o;
    d.beta = beta;
    d.alpha = C_p.transpose();
    d.R_c = d.alpha * beta.transpose();
    if (C_o) {
        d.C_o = *C_o;
    } else if (std::abs(R_o.determinant()) > 0.0 && beta.norm() > 0.0) {
        const Vec2 v = R_o.partialPivLu().solve(beta);
        d.C_o = (-v.transpose() / v.squaredNorm()).array() + 0.0;
    } else {
        d.C_o = Row2::Zero();
    }
    return d;
}

/// Orthonormal D (3x2) with alpha^T D = 0, built by Gram-Schmidt seeded from the
/// standard basis vector least aligned with alpha; the second column comes from
/// the remaining basis vector with the largest residual (ties: lower index).
inline Mat32 complement_basis(const Vec3& alpha)
{
    if (!(std::abs(alpha.norm() - 1.0) <= kDesignTolerance))
        throw DesignError("complement_basis: alpha must have unit norm");

    int seed = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(alpha(k)) < std::abs(alpha(seed))) seed = k;

    Mat32 D;
    Vec3 d1 = Vec3::Unit(seed) - alpha(seed) * alpha;
    d1.normalize();
    D.col(0) = d1;

    Vec3 best = Vec3::Zero();
    double best_norm = -1.0;
    for (int k = 0; k < 3; ++k) {
        if (k == seed) continue;
        Vec3 r = Vec3::Unit(k) - alpha(k) * alpha - d1(k) * d1;
        if (r.norm() > best_norm + 1e-12) {
            best = r;
            best_norm = r.norm();
        }
    }
    // one more pass keeps the column orthogonal to working precision
    best -= alpha.dot(best) * alpha + d1.dot(best) * d1;
    D.col(1) = best.normalized();
    return D;
}

/// The two designs of the qubit measurement example: observer 1 estimates
/// sigma_1 through q, observer 2 estimates sigma_2 through p.
inline ObserverDesign sigma1_observer()
{
    return design_for_plant(Row3(1.0, 0.0, 0.0), Mat2::Identity(), Vec2(-1.0, 0.0));
}

inline ObserverDesign sigma2_observer()
{
    return design_for_plant(Row3(0.0, 1.0, 0.0), Mat2::Identity(), Vec2(0.0, -1.0));
}

} // namespace dcqo
