#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dcqo/coupled_dynamics.hpp"

namespace dcqo {

/// Remaining plant variables w_p = D^T x_p obey w_p' = y_o(t) A_w w_p with
/// A_w = -2 D^T Theta(alpha) D and y_o = beta^T x_o.
struct WpModel {
    Mat2 A_w = Mat2::Zero();
    Mat32 D = Mat32::Zero();
    ObserverDesign design;
    // |D^T Theta(alpha) alpha|, the z_p feed-through into w_p'; zero up to rounding.
    double feedthrough_residual = 0.0;
};

inline WpModel build_wp_model(const ObserverDesign& design)
{
    require_valid(design, "build_wp_model");
    WpModel m;
    m.design = design;
    m.D = complement_basis(design.alpha);
    const Mat3 ta = theta(design.alpha);
    m.A_w = -2.0 * m.D.transpose() * ta * m.D;
    m.feedthrough_residual = max_abs(m.D.transpose() * ta * design.alpha);
    return m;
}

/// y_o(t) = c_const z_p(0) + c_osc(t) (x_o(0) + R_o^{-1} beta z_p(0)).
struct YoCoefficients {
    double c_const = 0.0; // -beta^T R_o^{-1} beta
    Row2 c_osc = Row2::Zero(); // beta^T e^{2 J R_o t}
};

inline YoCoefficients yo_split(const ObserverDesign& design, double t)
{
    YoCoefficients y;
    y.c_const = -design.beta.dot(design.R_o.llt().solve(design.beta));
    y.c_osc = design.beta.transpose() * expm(observer_drift(design), t);
    return y;
}

/// y_o(t) as coefficients against (z_p(0), q(0), p(0)).
inline Row3 yo_coefficients(const ObserverDesign& design, double t)
{
    return design.beta.transpose() * closed_form_xo_coefficients(design, t);
}

/// Lambda(t) = int_0^t y_o as coefficients against (z_p(0), q(0), p(0)):
///   -beta^T R_o^{-1} beta z_p(0) t
///   + (beta^T / 2)(e^{2 J R_o t} - I) R_o^{-1} J^{-1} (x_o(0) + R_o^{-1} beta z_p(0)).
inline Row3 yo_integral_coefficients(const ObserverDesign& design, double t)
{
    const Mat2 e = expm(observer_drift(design), t);
    const Mat2 half_inv = 0.5 * design.R_o.inverse() * symplectic_j().inverse();
    const Vec2 v = design.R_o.llt().solve(design.beta);
    const Row2 osc = design.beta.transpose() * (e - Mat2::Identity()) * half_inv;
    Row3 c;
    c(0) = -design.beta.dot(v) * t + osc * v;
    c.tail<2>() = osc;
    return c;
}

inline double yo_integral(const ObserverDesign& design, double z_p0, const Vec2& x_o0, double t)
{
    return yo_integral_coefficients(design, t) * Vec3(z_p0, x_o0(0), x_o0(1));
}

using ScalarFunction = std::function<double(double)>;

struct PeanoBakerResult {
    Mat2 transition = Mat2::Identity();
    std::vector<double> term_norms; // max-abs of each series term, order 1..N
    double residual = 0.0;          // norm of the last term kept
    bool converged = false;
};

/// Truncated Peano-Baker series for Phi' = y(t) A Phi, Phi(0) = I:
///   I + int y A + int y A int y A + ...
/// Each term is a nested matrix integral evaluated with fourth-order cumulative
/// quadrature on `samples` points of [0, t]. `converged` requires the last
/// term to fall below `tolerance`.
inline PeanoBakerResult peano_baker(const Mat2& a, const ScalarFunction& y, double t, int order,
                                    std::size_t samples = 4001, double tolerance = 1e-10)
{
    if (order < 1) throw NumericalError("peano_baker: order must be at least 1");
    if (samples < 4) samples = 4;
    const TimeGrid grid = TimeGrid::with_steps(0.0, t, samples - 1);
    const double h = grid.dt();

    std::vector<double> yv(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) yv[k] = y(grid[k]);

    // term[k] holds the current nested integral P_n(tau_k), entrywise.
    std::vector<Mat2> term(grid.size(), Mat2::Identity());
    PeanoBakerResult out;
    std::vector<double> integrand(grid.size());
    for (int n = 1; n <= order; ++n) {
        std::array<std::vector<double>, 4> entries;
        for (int e = 0; e < 4; ++e) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const Mat2 f = yv[k] * a * term[k];
                integrand[k] = f(e % 2, e / 2);
            }
            entries[e] = cumulative_integral(integrand, h);
        }
        for (std::size_t k = 0; k < grid.size(); ++k)
            for (int e = 0; e < 4; ++e) term[k](e % 2, e / 2) = entries[e][k];
        const Mat2& last = term.back();
        out.transition += last;
        out.term_norms.push_back(max_abs(last));
    }
    out.residual = out.term_norms.back();
    out.converged = out.residual <= tolerance;
    return out;
}

/// int_0^t y(t1) int_0^{t1} y(t2) ... int_0^{t_j} y(t_{j+1}) dt_{j+1} ... dt_1,
/// i.e. j + 1 nested integrals.
inline double nested_integral(const ScalarFunction& y, double t, int j, std::size_t samples = 4001)
{
    if (j < 0) throw NumericalError("nested_integral: j must be non-negative");
    const TimeGrid grid = TimeGrid::with_steps(0.0, t, samples - 1);
    std::vector<double> yv(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) yv[k] = y(grid[k]);

    std::vector<double> inner(grid.size(), 1.0);
    std::vector<double> integrand(grid.size());
    for (int level = 0; level <= j; ++level) {
        for (std::size_t k = 0; k < grid.size(); ++k) integrand[k] = yv[k] * inner[k];
        inner = cumulative_integral(integrand, grid.dt());
    }
    return inner.back();
}

/// Closed form w_p(t) = exp(Lambda(t) A_w) w_p(0). `printed_scalar` and
/// `theta_block` give the same exponent in the layout
/// exp(s(t) D^T Theta(alpha) D) with s = -2 Lambda.
struct WpRecipe {
    double t = 0.0;
    Row3 lambda = Row3::Zero();         // Lambda(t) against (z_p(0), q(0), p(0))
    Row3 printed_scalar = Row3::Zero(); // -2 Lambda(t)
    Mat2 A_w = Mat2::Zero();
    Mat2 theta_block = Mat2::Zero();    // D^T Theta(alpha) D
};

inline WpRecipe wp_closed_form(const WpModel& model, double t)
{
    WpRecipe r;
    r.t = t;
    r.lambda = yo_integral_coefficients(model.design, t);
    r.printed_scalar = -2.0 * r.lambda;
    r.A_w = model.A_w;
    r.theta_block = model.D.transpose() * theta(model.design.alpha) * model.D;
    return r;
}

/// Evaluates a recipe with commuting (real) initial values (z_p, q, p) and w_p(0).
inline Vec2 evaluate_classical(const WpRecipe& recipe, const Vec3& initial, const Vec2& w0)
{
    const double lambda = recipe.lambda * initial;
    return expm(recipe.A_w, lambda) * w0;
}

/// CSV-ready trace with columns lambda, w1, w2.
inline Trace classical_wp_trace(const WpModel& model, const Vec3& initial, const Vec2& w0, const TimeGrid& grid)
{
    std::vector<double> lambda(grid.size()), w1(grid.size()), w2(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const WpRecipe r = wp_closed_form(model, grid[k]);
        lambda[k] = r.lambda * initial;
        const Vec2 w = evaluate_classical(r, initial, w0);
        w1[k] = w(0);
        w2[k] = w(1);
    }
    Trace trace(grid);
    trace.add("lambda", std::move(lambda));
    trace.add("w1", std::move(w1));
    trace.add("w2", std::move(w2));
    return trace;
}

/// Independent RK4 integration of the classical limit of the full Heisenberg
/// equations x_p' = -2 Theta(alpha) x_p beta^T x_o, x_o' = 2 J beta alpha^T x_p + 2 J R_o x_o,
/// started from x_p(0) = alpha z_p + D w_p(0). Returns w_p = D^T x_p on the grid.
inline StateTrace classical_wp_oracle(const WpModel& model, const Vec3& initial, const Vec2& w0,
                                      const TimeGrid& grid, double tolerance = 1e-9)
{
    const ObserverDesign& d = model.design;
    const Mat3 ta = theta(d.alpha);
    const Vec2 jb = 2.0 * symplectic_j() * d.beta;
    const Mat2 ao = observer_drift(d);
    VectorField f = [&](double, const Eigen::VectorXd& x) {
        const Vec3 xp = x.head<3>();
        const Vec2 xo = x.tail<2>();
        Eigen::VectorXd dx(5);
        dx.head<3>() = -2.0 * ta * xp * d.beta.dot(xo);
        dx.tail<2>() = jb * d.alpha.dot(xp) + ao * xo;
        return dx;
    };
    Eigen::VectorXd x0(5);
    x0.head<3>() = d.alpha * initial(0) + model.D * w0;
    x0.tail<2>() = initial.tail<2>();
    StateTrace full = rk4_oracle(f, x0, grid, tolerance);

    StateTrace out;
    out.grid = full.grid;
    out.halving_discrepancy = full.halving_discrepancy;
    for (const auto& x : full.states) out.states.emplace_back(model.D.transpose() * x.head<3>());
    return out;
}

} // namespace dcqo
