// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "dcqo/verification.hpp"

using namespace dcqo;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit; // seconds; 0 means none
    std::function<Outcome()> run;
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Outcome from_suites(const std::vector<SuiteResult>& suites)
{
    Outcome o{true, {}};
    for (const auto& s : suites) {
        o.passed = o.passed && s.passed;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += s.name + " " + num(s.max_residual) + " <= " + num(s.tolerance);
    }
    return o;
}

Outcome augmented_matrix()
{
    Mat3 expected;
    expected << 0, 0, 0, 0, 0, 2, 2, -2, 0;
    const Mat3 a = build_augmented(sigma1_observer()).A_a;
    return {a == expected, "max |A_a - expected| = " + num(max_abs(a - expected))};
}

Outcome first_row_constant()
{
    const AugmentedLinearModel m = build_augmented(sigma1_observer());
    const Trace tr = observer_output_trace(m, TimeGrid::uniform(0.0, 10.0, 1e-3));
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.grid.size(); ++k)
        worst = std::max({worst, std::abs(tr.column("phi11")[k] - 1.0), std::abs(tr.column("phi12")[k]),
                          std::abs(tr.column("phi13")[k])});
    return {worst <= 1e-12, "max deviation " + num(worst) + " <= 1e-12"};
}

// Deviation of the averaged q coefficients from (1, 0, 0) at horizon t.
Vec3 average_deviation(const ObserverDesign& d, double t)
{
    const Mat23 avg = averaged_xo_coefficients(d, t);
    return Vec3(std::abs(avg(0, 0) - 1.0), std::abs(avg(0, 1)), std::abs(avg(0, 2)));
}

Outcome averaged_convergence()
{
    const ObserverDesign d = sigma1_observer();
    const std::vector<double> horizons = {10.0, 100.0, 1000.0};
    bool ok = true;
    std::string detail;

    // The closed-form averages are cross-checked against quadrature of the sampled trace.
    const Trace tr = observer_output_trace(build_augmented(d), TimeGrid::uniform(0.0, 100.0, 1e-3));
    const Vec3 direct(std::abs(tr.column("avg21").back() - 1.0), std::abs(tr.column("avg22").back()),
                      std::abs(tr.column("avg23").back()));
    const double cross = max_abs(direct - average_deviation(d, 100.0));
    ok = ok && cross <= 1e-8;

    std::vector<double> envelope;
    const double period = oscillation_period(d);
    for (double t : horizons) {
        const Vec3 dev = average_deviation(d, t);
        ok = ok && dev(0) <= 1.0 / (2.0 * t) + 1e-6 && dev(1) <= 1.0 / t + 1e-6 && dev(2) <= 1.0 / t + 1e-6;
        double sup = 0.0;
        for (int k = 0; k <= 4000; ++k) sup = std::max(sup, average_deviation(d, t + period * k / 4000.0).maxCoeff());
        envelope.push_back(sup);
        detail += "T=" + num(t) + " (" + num(dev(0)) + ", " + num(dev(1)) + ", " + num(dev(2)) + ") ";
    }
    const double slope = loglog_slope(horizons, envelope);
    ok = ok && std::abs(slope + 1.0) <= 0.05;
    detail += "slope " + num(slope) + ", trace cross-check " + num(cross);
    return {ok, detail};
}

Outcome hilbert_identity()
{
    const int n = 64;
    const OperatorSet ops = build_operators(n);
    const HeisenbergPropagator prop(build_hamiltonian(SpinPlant{}, sigma1_observer(), n).H);
    const std::vector<double> times = half_unit_times(20.0);
    return from_suites({linear_identity_check(prop, ops, sigma1_observer(), times, default_safe_dim(n)),
                        truncation_convergence_check(sigma1_observer(), n, times, default_safe_dim(n))});
}

Outcome ccr_preservation()
{
    const int n = 64;
    const OperatorSet ops = build_operators(n);
    const HeisenbergPropagator prop(build_hamiltonian(SpinPlant{}, sigma1_observer(), n).H);
    return from_suites({ccr_check(prop, ops, half_unit_times(20.0), default_safe_dim(n))});
}

Outcome switching_scenario()
{
    const JointState psi = JointState::product(qubit_plus(), fock_vacuum(64));
    const ScenarioReport rep = observer_switch_scenario(sigma1_observer(), sigma2_observer(), psi, 50.0, 50.0);
    const ScenarioReport same = observer_switch_scenario(sigma1_observer(), sigma1_observer(), psi, 50.0, 50.0);
    if (rep.aborted || same.aborted) return {false, "aborted: " + rep.abort_reason + same.abort_reason};
    const double estimate_error = std::abs(rep.phase_a.estimate_average - rep.phase_a.sigma1_reference);
    const bool ok = estimate_error <= 0.05 && rep.phase_b.sigma1_max_deviation > 0.1
                    && same.phase_b.sigma1_max_deviation <= 1e-6;
    return {ok, "phase A |avg q - 1| " + num(estimate_error) + " <= 0.05; phase B disturbance "
                    + num(rep.phase_b.sigma1_max_deviation) + " > 0.1; identical observer "
                    + num(same.phase_b.sigma1_max_deviation) + " <= 1e-6"};
}

Outcome series_collapse() { return from_suites({peano_baker_check(0), nested_integral_check(0)}); }

Outcome wpt1_audit()
{
    const JointState psi = JointState::product(qubit_plus(), fock_vacuum(64));
    const WpAuditReport rep = audit_wpt1(sigma1_observer(), psi, TimeGrid::uniform(0.0, 5.0, 0.1));
    bool finite = rep.series.size() == 3;
    std::string detail = "report only:";
    for (const auto& s : rep.series) {
        finite = finite && std::isfinite(s.max_deviation) && std::isfinite(s.max_deviation_symmetrized);
        detail += " " + s.state_label + " " + num(s.max_deviation) + " (sym " + num(s.max_deviation_symmetrized) + ")";
    }
    return {finite, detail};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "theta identities", 1.0, [] { return from_suites({theta_identity_sweep(0)}); }},
        {2, "augmented matrix", 0.0, augmented_matrix},
        {3, "plant row constant", 1.0, first_row_constant},
        {4, "averaged convergence", 10.0, averaged_convergence},
        {5, "norm bound", 30.0, [] { return from_suites({norm_bound_check(0)}); }},
        {6, "cross-route equivalence", 10.0, [] { return from_suites({cross_route_check(0)}); }},
        {7, "hilbert operator identity", 60.0, hilbert_identity},
        {8, "ccr preservation", 0.0, ccr_preservation},
        {9, "observer switching", 120.0, switching_scenario},
        {10, "series collapse", 0.0, series_collapse},
        {11, "w_p closed-form audit", 0.0, wpt1_audit},
    };

    int failures = 0;
    double total = 0.0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        total += secs;
        const bool in_time = c.time_limit <= 0.0 || secs < c.time_limit;
        if (!in_time) o.detail += "; exceeded " + num(c.time_limit) + " s";
        const bool passed = o.passed && in_time;
        if (!passed) ++failures;
        std::printf("%s %2d %-26s %7.2fs  %s\n", passed ? "PASS" : "FAIL", c.id, c.name.c_str(), secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed in %.1f s\n", int(criteria.size()) - failures, criteria.size(), total);
    return failures == 0 ? 0 : 1;
}
