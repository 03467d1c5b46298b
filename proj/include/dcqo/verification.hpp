#pragma once

// Invariant sweeps shared by the `verify` command and the acceptance runner.
// Each returns a SuiteResult; only asserted suites can fail a run.

#include <cmath>
#include <string>
#include <vector>

#include "dcqo/hilbert_sim.hpp"
#include "dcqo/sampling.hpp"

namespace dcqo {

struct SuiteResult {
    std::string name;
    bool passed = false;
    bool asserted = true;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

inline SuiteResult finish(SuiteResult r)
{
    r.passed = std::isfinite(r.max_residual) && r.max_residual <= r.tolerance;
    return r;
}

inline SuiteResult theta_identity_sweep(std::uint64_t seed, int pairs = 10000, double tolerance = 1e-12)
{
    Rng rng(seed);
    SuiteResult r{"theta_identities", false, true, 0.0, tolerance, std::to_string(pairs) + " pairs in [-1,1]^3"};
    for (int k = 0; k < pairs; ++k) {
        const Vec3 b = random_cube3(rng);
        const Vec3 g = random_cube3(rng);
        r.max_residual = std::max(r.max_residual, check_theta_identities(b, g).max());
    }
    return finish(r);
}

/// Product table against direct multiplication, and the spin commutators.
inline SuiteResult pauli_algebra_check(double tolerance = 1e-14)
{
    const Complex I(0.0, 1.0);
    const PauliMatrices s = pauli();
    const PauliProductTable table = pauli_product_table();
    SuiteResult r{"pauli_algebra", false, true, 0.0, tolerance, "sigma_i sigma_j table and commutators"};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            r.max_residual = std::max(r.max_residual, max_abs(Mat2c(s[i] * s[j]) - expand(table[i][j])));
            Mat2c expected = Mat2c::Zero();
            for (int k = 0; k < 3; ++k) expected += 2.0 * I * double(levi_civita(i, j, k)) * s[k];
            r.max_residual = std::max(r.max_residual, max_abs(commutator(s[i], s[j]) - expected));
        }
    return finish(r);
}

inline SuiteResult design_validity_check(const ObserverDesign& design, const SpinPlant& plant)
{
    const DesignReport rep = validate(design, plant);
    SuiteResult r{"design_validity", rep.valid, true, std::abs(rep.gain + 1.0), kDesignTolerance, {}};
    for (const auto& v : rep.violated_conditions) r.detail += (r.detail.empty() ? "violated: " : ", ") + v;
    if (r.detail.empty()) r.detail = "all observer conditions hold";
    if (!std::isfinite(r.max_residual)) r.max_residual = 1.0;
    return r;
}

/// max |phi_11 - 1|, |phi_12|, |phi_13| on the grid: z_p is a constant of motion.
inline SuiteResult row1_invariance_check(const AugmentedLinearModel& model, const TimeGrid& grid,
                                         double tolerance = 1e-12)
{
    SuiteResult r{"row1_invariance", false, true, 0.0, tolerance, {}};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Mat3 phi = transition_matrix(model, grid[k]);
        r.max_residual = std::max(r.max_residual, max_abs(phi.row(0) - Row3(1.0, 0.0, 0.0)));
    }
    r.detail = "grid [" + format_short(grid.t0()) + ", " + format_short(grid.t1()) + "]";
    return finish(r);
}

/// Closed form, matrix exponential and RK4 on random (design, initial value, t).
inline SuiteResult cross_route_check(std::uint64_t seed, int triples = 100, double t_max = 20.0,
                                     double tolerance = 1e-8)
{
    Rng rng(seed);
    SuiteResult r{"cross_route", false, true, 0.0, tolerance, {}};
    for (int k = 0; k < triples; ++k) {
        const ObserverDesign d = random_design(rng);
        const Vec3 x0 = random_cube3(rng);
        const double t = uniform(rng, 0.0, t_max);
        const AugmentedLinearModel m = build_augmented(d);

        const Vec2 closed = closed_form_xo(d, x0.tail<2>(), x0(0), t);
        const Vec3 via_phi = transition_matrix(m, t) * x0;
        const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t / 1e-3)));
        const StateTrace rk = rk4_oracle(Eigen::MatrixXd(m.A_a), Eigen::VectorXd(x0), TimeGrid::with_steps(0.0, t, steps));
        const Vec3 via_rk = rk.states.back();

        r.max_residual = std::max({r.max_residual, max_abs(closed - via_phi.tail<2>()), max_abs(via_rk - via_phi),
                                   std::abs(via_phi(0) - x0(0))});
    }
    r.detail = std::to_string(triples) + " triples, t <= " + format_short(t_max);
    return finish(r);
}

/// Classical energy z_p beta^T x_o + (1/2) x_o^T R_o x_o along closed-form trajectories.
inline SuiteResult energy_conservation_check(const ObserverDesign& design, const TimeGrid& grid, std::uint64_t seed,
                                             int starts = 5, double tolerance = 1e-10)
{
    Rng rng(seed);
    SuiteResult r{"energy_conservation", false, true, 0.0, tolerance, "relative drift of the quadratic energy"};
    auto energy = [&](double z, const Vec2& xo) { return z * design.beta.dot(xo) + 0.5 * xo.dot(design.R_o * xo); };
    for (int s = 0; s < starts; ++s) {
        const Vec3 x0 = random_cube3(rng);
        const double e0 = energy(x0(0), x0.tail<2>());
        const double scale = std::max(1.0, std::abs(e0));
        for (std::size_t k = 0; k < grid.size(); k += std::max<std::size_t>(1, grid.size() / 2000)) {
            const Vec2 xo = closed_form_xo(design, x0.tail<2>(), x0(0), grid[k]);
            r.max_residual = std::max(r.max_residual, std::abs(energy(x0(0), xo) - e0) / scale);
        }
    }
    return finish(r);
}

/// ||e^{2 J R_o t}||_2 <= sqrt(lambda_max / lambda_min) for random SPD R_o; the
/// residual is the largest excess over the bound (zero when it holds).
inline SuiteResult norm_bound_check(std::uint64_t seed, int matrices = 100, double horizon = 100.0, double dt = 0.01,
                                    double tolerance = 1e-9)
{
    Rng rng(seed);
    SuiteResult r{"norm_bound", false, true, 0.0, tolerance, {}};
    const TimeGrid grid = TimeGrid::uniform(0.0, horizon, dt);
    double worst_ratio = 0.0;
    for (int m = 0; m < matrices; ++m) {
        const Mat2 ro = random_spd(rng);
        const double bound = spectral_bound(ro).bound;
        const Mat2 a = 2.0 * symplectic_j() * ro;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double n = operator_norm2(expm(a, grid[k]));
            r.max_residual = std::max(r.max_residual, n - bound);
            worst_ratio = std::max(worst_ratio, n / bound);
        }
    }
    r.max_residual = std::max(r.max_residual, 0.0);
    r.detail = std::to_string(matrices) + " SPD matrices; max norm / bound = " + format_short(worst_ratio);
    return finish(r);
}

/// Trapezoid time averages of the q and p coefficient rows at T = horizon
/// against the exact averages.
inline SuiteResult quadrature_check(const AugmentedLinearModel& model, const TimeGrid& grid, double horizon,
                                    double tolerance = 1e-6)
{
    SuiteResult r{"quadrature", false, true, 0.0, tolerance, {}};
    const Trace trace = observer_output_trace(model, grid);
    const Mat23 exact = averaged_xo_coefficients(model.design, horizon);
    for (int i = 2; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            const double avg = trace.average("phi" + std::to_string(i) + std::to_string(j), horizon);
            r.max_residual = std::max(r.max_residual, std::abs(avg - exact(i - 2, j - 1)));
        }
    r.detail = "trapezoid dt = " + format_short(grid.dt()) + " at T = " + format_short(horizon);
    return finish(r);
}

/// Measured averaging deviation below its bound at each horizon, and the tail
/// envelope decaying with log-log slope -1 +- 0.05.
inline SuiteResult certificate_check(const ObserverDesign& design, const std::vector<double>& horizons,
                                     DecayProfile* profile = nullptr)
{
    SuiteResult r{"convergence_certificate", false, true, 0.0, 0.05, {}};
    bool holds = true;
    for (double t : horizons) holds = holds && convergence_certificate(design, t).holds;
    const DecayProfile p = certificate_decay(design, horizons);
    for (std::size_t i = 0; i < horizons.size(); ++i) holds = holds && p.envelope[i] <= p.bound[i];
    r.max_residual = holds ? std::abs(p.slope + 1.0) : std::numeric_limits<double>::infinity();
    r.detail = std::string(holds ? "bound holds" : "bound violated") + "; envelope slope " + format_short(p.slope);
    if (profile) *profile = p;
    return finish(r);
}

// ---------------------------------------------------------------------------
// Hilbert-space suites

inline std::vector<double> half_unit_times(double t_max)
{
    std::vector<double> times;
    for (int k = 1; 0.5 * k <= t_max + 1e-12; ++k) times.push_back(0.5 * k);
    return times;
}

inline SuiteResult linear_identity_check(const HeisenbergPropagator& prop, const OperatorSet& ops,
                                         const ObserverDesign& design, const std::vector<double>& times, int safe_dim,
                                         double tolerance = 1e-6)
{
    SuiteResult r{"hilbert_linear_identity", false, true, 0.0, tolerance, {}};
    for (double t : times) r.max_residual = std::max(r.max_residual, linear_identity_residual(prop, ops, design, t, safe_dim));
    r.detail = "N = " + std::to_string(ops.dim_fock) + ", safe block " + std::to_string(safe_dim);
    return finish(r);
}

/// Projected q(t) at N against the same block at 2N.
inline SuiteResult truncation_convergence_check(const ObserverDesign& design, int n, const std::vector<double>& times,
                                                int safe_dim, double tolerance = 1e-8)
{
    SuiteResult r{"hilbert_truncation_convergence", false, true, 0.0, tolerance, {}};
    std::vector<std::vector<MatXc>> runs;
    for (int dim : {n, 2 * n}) {
        const OperatorSet ops = build_operators(dim);
        const HeisenbergPropagator prop(build_hamiltonian(SpinPlant{}, design, dim).H);
        runs.push_back(projected_trajectory(prop, ops.q.matrix, times, safe_dim));
    }
    for (std::size_t k = 0; k < times.size(); ++k)
        r.max_residual = std::max(r.max_residual, max_abs(runs[0][k] - runs[1][k]));
    r.detail = "N = " + std::to_string(n) + " vs " + std::to_string(2 * n);
    return finish(r);
}

inline SuiteResult zp_invariance_check(const HeisenbergPropagator& prop, const OperatorSet& ops, const Vec3& alpha,
                                       const std::vector<double>& times, int safe_dim, double tolerance = 1e-6)
{
    SuiteResult r{"hilbert_zp_invariance", false, true, 0.0, tolerance, {}};
    for (double t : times) r.max_residual = std::max(r.max_residual, zp_invariance_residual(prop, ops, alpha, t, safe_dim));
    return finish(r);
}

inline SuiteResult ccr_check(const HeisenbergPropagator& prop, const OperatorSet& ops, const std::vector<double>& times,
                             int safe_dim, double tolerance = 1e-6)
{
    SuiteResult r{"hilbert_ccr", false, true, 0.0, tolerance, {}};
    for (double t : times) {
        const CcrResiduals c = ccr_residuals(prop, ops, t, safe_dim);
        r.max_residual = std::max({r.max_residual, c.spin, c.oscillator});
    }
    return finish(r);
}

/// y(t) = c0 + c1 cos(w t) + c2 sin(w t) with its exact running integral.
struct SmoothScalar {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, omega = 1.0;

    double operator()(double t) const { return c0 + c1 * std::cos(omega * t) + c2 * std::sin(omega * t); }
    double integral(double t) const
    {
        return c0 * t + c1 * std::sin(omega * t) / omega + c2 * (1.0 - std::cos(omega * t)) / omega;
    }
    void scale(double s)
    {
        c0 *= s;
        c1 *= s;
        c2 *= s;
    }
};

inline SmoothScalar random_smooth_scalar(Rng& rng)
{
    return {uniform(rng, -1.0, 1.0), uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, 0.5, 4.0)};
}

/// Truncated series against expm(Lambda A_w) on seeded scalar traces. Each trace
/// is rescaled so that ||Lambda(t) A_w||_2 <= max_exponent_norm; the truncation
/// tail is then bounded by x^{order+1}/(order+1)! e^x.
inline SuiteResult peano_baker_check(std::uint64_t seed, int traces = 50, int order = 12,
                                     double max_exponent_norm = 1.5, double tolerance = 1e-7)
{
    Rng rng(seed);
    SuiteResult r{"peano_baker_collapse", false, true, 0.0, tolerance, {}};
    for (int k = 0; k < traces; ++k) {
        const WpModel m = build_wp_model(random_design(rng));
        SmoothScalar y = random_smooth_scalar(rng);
        const double t = uniform(rng, 0.5, 3.0);
        const double a_norm = operator_norm2(m.A_w);
        const double x = std::abs(y.integral(t)) * a_norm;
        if (x > max_exponent_norm) y.scale(uniform(rng, 0.2, 1.0) * max_exponent_norm / x);
        const Mat2 series = peano_baker(m.A_w, y, t, order).transition;
        r.max_residual = std::max(r.max_residual, max_abs(series - expm(m.A_w, y.integral(t))));
    }
    r.detail = std::to_string(traces) + " traces, order " + std::to_string(order) + ", ||Lambda A_w|| <= "
               + format_short(max_exponent_norm);
    return finish(r);
}

/// (j+1)-fold nested integral of y against Lambda^{j+1}/(j+1)! for j <= max_j.
inline SuiteResult nested_integral_check(std::uint64_t seed, int traces = 20, int max_j = 5, double tolerance = 1e-7)
{
    Rng rng(seed);
    SuiteResult r{"nested_integral_identity", false, true, 0.0, tolerance, {}};
    for (int k = 0; k < traces; ++k) {
        const SmoothScalar y = random_smooth_scalar(rng);
        const double t = uniform(rng, 0.5, 3.0);
        const double lambda = y.integral(t);
        for (int j = 0; j <= max_j; ++j) {
            const double expected = std::pow(lambda, j + 1) / std::tgamma(j + 2.0);
            r.max_residual = std::max(r.max_residual, std::abs(nested_integral(y, t, j) - expected));
        }
    }
    r.detail = std::to_string(traces) + " traces, j <= " + std::to_string(max_j);
    return finish(r);
}

/// Closed-form w_p against RK4 on the full classical equations, plus length
/// preservation of w_p.
inline SuiteResult classical_wp_check(const ObserverDesign& design, const Vec3& initial, const Vec2& w0,
                                      const TimeGrid& grid, double tolerance = 1e-7)
{
    SuiteResult r{"classical_wp", false, true, 0.0, tolerance, "closed form vs rk4, and |w_p| preservation"};
    const WpModel m = build_wp_model(design);
    const StateTrace rk = classical_wp_oracle(m, initial, w0, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vec2 w = evaluate_classical(wp_closed_form(m, grid[k]), initial, w0);
        r.max_residual = std::max({r.max_residual, max_abs(w - Vec2(rk.states[k])), std::abs(w.norm() - w0.norm())});
    }
    return finish(r);
}

/// Drift of <H> along an expectation trace that carries an "H" column.
inline SuiteResult hilbert_energy_check(const Trace& trace, double tolerance = 1e-10)
{
    SuiteResult r{"hilbert_energy", false, true, 0.0, tolerance, "relative drift of <H>"};
    const auto& h = trace.column("H");
    const double scale = std::max(1.0, std::abs(h.front()));
    for (double v : h) r.max_residual = std::max(r.max_residual, std::abs(v - h.front()) / scale);
    return finish(r);
}

} // namespace dcqo
