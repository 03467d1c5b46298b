#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dcqo/numerics.hpp"
#include "dcqo/observer_design.hpp"

namespace dcqo {

/// Closed linear subsystem in (z_p, q, p):
///   d/dt [z_p; x_o] = [[0, 0], [2 J beta, 2 J R_o]] [z_p; x_o].
struct AugmentedLinearModel {
    Mat3 A_a = Mat3::Zero();
    ObserverDesign design;
};

inline void require_valid(const ObserverDesign& design, const char* where)
{
    const DesignReport rep = validate(design);
    if (rep.valid) return;
    std::string msg = std::string(where) + ": invalid design (";
    for (std::size_t i = 0; i < rep.violated_conditions.size(); ++i)
        msg += (i ? ", " : "") + rep.violated_conditions[i];
    throw DesignError(msg + ")");
}

/// Oscillator drift 2 J R_o.
inline Mat2 observer_drift(const ObserverDesign& design) { return 2.0 * symplectic_j() * design.R_o; }

inline AugmentedLinearModel build_augmented(const ObserverDesign& design)
{
    require_valid(design, "build_augmented");
    AugmentedLinearModel m;
    m.design = design;
    m.A_a.block<2, 1>(1, 0) = 2.0 * symplectic_j() * design.beta;
    m.A_a.block<2, 2>(1, 1) = observer_drift(design);
    return m;
}

/// Phi(t) = e^{A_a t}; row j gives the coefficients of (z_p, q, p)(t) against
/// (z_p(0), q(0), p(0)).
inline Mat3 transition_matrix(const AugmentedLinearModel& model, double t) { return expm(model.A_a, t); }

/// Coefficients of x_o(t) against (z_p(0), q(0), p(0)) from
///   x_o(t) = e^{2 J R_o t}(x_o(0) + R_o^{-1} beta z_p(0)) - R_o^{-1} beta z_p(0).
inline Mat23 closed_form_xo_coefficients(const ObserverDesign& design, double t)
{
    const Mat2 e = expm(observer_drift(design), t);
    const Vec2 v = design.R_o.llt().solve(design.beta);
    Mat23 c;
    c.col(0) = e * v - v;
    c.block<2, 2>(0, 1) = e;
    return c;
}

inline Vec2 closed_form_xo(const ObserverDesign& design, const Vec2& x_o0, double z_p0, double t)
{
    return closed_form_xo_coefficients(design, t) * Vec3(z_p0, x_o0(0), x_o0(1));
}

/// Exact (1/T) int_0^T of the closed_form_xo coefficients.
inline Mat23 averaged_xo_coefficients(const ObserverDesign& design, double horizon)
{
    const Mat2 a = observer_drift(design);
    const Mat2 integral = a.partialPivLu().solve(expm(a, horizon) - Mat2::Identity());
    const Vec2 v = design.R_o.llt().solve(design.beta);
    Mat23 c;
    c.col(0) = integral * v - horizon * v;
    c.block<2, 2>(0, 1) = integral;
    return c / horizon;
}

/// Period of the free oscillator e^{2 J R_o t}: its eigenvalues are +-2i sqrt(det R_o).
inline double oscillation_period(const ObserverDesign& design)
{
    return std::numbers::pi / std::sqrt(design.R_o.determinant());
}

enum class TraceMode {
    transition_rows, // phi_ij = Phi(t)_ij
    observer_output, // row 2 replaced by the coefficients of z_o = C_o x_o
};

inline const std::array<std::string, 9>& phi_labels()
{
    static const std::array<std::string, 9> labels = {
        "phi11", "phi12", "phi13", "phi21", "phi22", "phi23", "phi31", "phi32", "phi33"};
    return labels;
}

/// Coefficient functions phi_ij(t) on the grid plus running averages
/// avg2j, avg3j. Column order matches the linear-trace CSV header.
inline Trace observer_output_trace(const AugmentedLinearModel& model, const TimeGrid& grid,
                                   TraceMode mode = TraceMode::transition_rows)
{
    std::array<std::vector<double>, 9> cols;
    for (auto& c : cols) c.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Mat3 phi = transition_matrix(model, grid[k]);
        if (mode == TraceMode::observer_output) phi.row(1) = model.design.C_o * phi.bottomRows<2>();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cols[3 * i + j][k] = phi(i, j);
    }
    Trace trace(grid);
    for (int i = 0; i < 9; ++i) trace.add(phi_labels()[i], std::move(cols[i]));
    for (int i = 2; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j)
            trace.add_running_average("phi" + std::to_string(i) + std::to_string(j),
                                      "avg" + std::to_string(i) + std::to_string(j));
    return trace;
}

/// sup of `values` over grid points in [T, T + window]. For a bounded periodic
/// numerator over t, the supremum over all t >= T is attained in one period.
inline double tail_supremum(const TimeGrid& grid, std::span<const double> values, double horizon, double window)
{
    double best = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        if (t < horizon - 1e-12) continue;
        if (t > horizon + window + 1e-12) break;
        best = any ? std::max(best, values[k]) : values[k];
        any = true;
    }
    if (!any) throw NumericalError("tail_supremum: window outside grid");
    return best;
}

struct ConvergenceCertificate {
    double horizon = 0.0;
    // (1 / 2T)(sqrt(lambda_max / lambda_min) + 1) ||R_o^{-1} J^{-1}||
    double deviation_bound = 0.0;
    // ||(1/T) int_0^T e^{2 J R_o t} dt||_2 by Simpson quadrature
    double measured_deviation = 0.0;
    bool holds = false;
};

inline double certificate_bound(const ObserverDesign& design, double horizon)
{
    const SpectralBound sb = spectral_bound(design.R_o);
    const Mat2 ro_inv_j_inv = design.R_o.inverse() * symplectic_j().inverse();
    return (sb.bound + 1.0) * operator_norm2(ro_inv_j_inv) / (2.0 * horizon);
}

inline ConvergenceCertificate convergence_certificate(const ObserverDesign& design, double horizon)
{
    require_valid(design, "convergence_certificate");
    if (!(horizon > 0.0)) throw NumericalError("convergence_certificate: T must be positive");

    ConvergenceCertificate c;
    c.horizon = horizon;
    c.deviation_bound = certificate_bound(design, horizon);
    c.measured_deviation = operator_norm2(expm_integral_quadrature(observer_drift(design), horizon)) / horizon;
    c.holds = c.measured_deviation <= c.deviation_bound;
    return c;
}

struct DecayProfile {
    std::vector<double> horizons;
    // sup_{t >= T} ||(1/t) int_0^t e^{2 J R_o s} ds||_2
    std::vector<double> envelope;
    std::vector<double> bound;
    double slope = 0.0;
};

/// Tail envelope of the measured averaging deviation at each horizon, from one
/// Simpson pass, and its log-log slope.
inline DecayProfile certificate_decay(const ObserverDesign& design, std::span<const double> horizons)
{
    require_valid(design, "certificate_decay");
    const Mat2 a = observer_drift(design);
    const double period = oscillation_period(design);
    double t_max = 0.0;
    for (double h : horizons) t_max = std::max(t_max, h + period);

    const double h = 0.005 / std::max(1.0, detail::norm1(a));
    const long pairs = static_cast<long>(std::ceil(t_max / (2.0 * h)));
    const Mat2 step = expm(a, h);

    DecayProfile out;
    out.horizons.assign(horizons.begin(), horizons.end());
    out.envelope.assign(horizons.size(), 0.0);

    Mat2 e0 = Mat2::Identity();
    Mat2 integral = Mat2::Zero();
    for (long k = 1; k <= pairs; ++k) {
        const Mat2 e1 = step * e0;
        const Mat2 e2 = step * e1;
        integral += (h / 3.0) * (e0 + 4.0 * e1 + e2);
        e0 = e2;
        const double t = 2.0 * h * static_cast<double>(k);
        double deviation = -1.0;
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            if (t >= horizons[i] && t <= horizons[i] + period) {
                if (deviation < 0.0) deviation = operator_norm2(integral) / t;
                out.envelope[i] = std::max(out.envelope[i], deviation);
            }
        }
    }
    for (double horizon : horizons) out.bound.push_back(certificate_bound(design, horizon));
    out.slope = loglog_slope(out.horizons, out.envelope);
    return out;
}

} // namespace dcqo
