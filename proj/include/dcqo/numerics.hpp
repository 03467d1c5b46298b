#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dcqo/types.hpp"

namespace dcqo {

/// Largest matrix order any routine here will accept.
inline constexpr Eigen::Index kMaxMatrixOrder = 1024;

namespace detail {

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& a, const char* what)
{
    if (a.rows() != a.cols()) throw NumericalError(std::string(what) + ": matrix is not square");
    if (a.rows() > kMaxMatrixOrder) throw ResourceError(std::string(what) + ": matrix order exceeds cap");
    if (!a.allFinite()) throw NumericalError(std::string(what) + ": non-finite entries");
}

template <typename Derived>
double norm1(const Eigen::MatrixBase<Derived>& a)
{
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().colwise().sum().maxCoeff();
}

} // namespace detail

/// e^{A t} by scaling and squaring with the degree-13 diagonal Pade approximant.
/// Works for real and complex, fixed and dynamic Eigen matrices.
template <typename Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& a, double t = 1.0)
{
    using Plain = typename Derived::PlainObject;
    detail::require_square(a, "expm");
    if (!std::isfinite(t)) throw NumericalError("expm: non-finite time");

    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
        33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0};
    constexpr double theta13 = 5.371920351148152;

    const Eigen::Index n = a.rows();
    Plain at = a * t;
    const double norm = detail::norm1(at);
    if (norm == 0.0) return Plain::Identity(n, n);
    int squarings = 0;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        at /= std::ldexp(1.0, squarings);
    }

    const Plain ident = Plain::Identity(n, n);
    const Plain a2 = at * at;
    const Plain a4 = a2 * a2;
    const Plain a6 = a4 * a2;
    const Plain u = at * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2)
                          + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
    const Plain v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

    Plain r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;

    if (!r.allFinite()) throw NumericalError("expm: result overflowed (||A t|| too large)");
    return r;
}

/// Induced 2-norm via the largest singular value.
template <typename Derived>
double operator_norm2(const Eigen::MatrixBase<Derived>& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<typename Derived::PlainObject> svd(m);
    return svd.singularValues()(0);
}

/// Composite Simpson approximation of int_0^T e^{A t} dt. The panel count is
/// raised above `min_panels` so that each panel spans at most 0.01 / ||A||.
template <typename Derived>
typename Derived::PlainObject expm_integral_quadrature(const Eigen::MatrixBase<Derived>& a, double horizon,
                                                       long min_panels = 10000)
{
    using Plain = typename Derived::PlainObject;
    detail::require_square(a, "expm_integral_quadrature");
    const Eigen::Index n = a.rows();
    if (horizon == 0.0) return Plain::Zero(n, n);

    long panels = std::max<long>(min_panels, 2);
    const double resolved = std::ceil(std::abs(horizon) * detail::norm1(a) / 0.01);
    if (resolved > static_cast<double>(panels)) panels = static_cast<long>(resolved);
    if (panels % 2) ++panels;

    const double h = horizon / static_cast<double>(panels);
    const Plain step = expm(a, h);
    Plain current = Plain::Identity(n, n);
    Plain sum = current;
    for (long k = 1; k < panels; ++k) {
        current = step * current;
        sum += (k % 2 ? 4.0 : 2.0) * current;
    }
    current = step * current;
    sum += current;
    return (h / 3.0) * sum;
}

template <typename Plain>
struct ExpmIntegral {
    Plain value;
    bool used_quadrature = false;
    // sigma_min / sigma_max of A; the inverse formula is used above kSingularThreshold.
    double reciprocal_condition = 0.0;
};

inline constexpr double kSingularThreshold = 1e-10;

/// int_0^T e^{A t} dt, as A^{-1}(e^{A T} - I) when A is well conditioned and
/// by Simpson quadrature otherwise.
template <typename Derived>
ExpmIntegral<typename Derived::PlainObject> expm_integral(const Eigen::MatrixBase<Derived>& a, double horizon)
{
    using Plain = typename Derived::PlainObject;
    detail::require_square(a, "expm_integral");
    const Eigen::Index n = a.rows();

    ExpmIntegral<Plain> out;
    Eigen::JacobiSVD<Plain> svd(a);
    const auto& sv = svd.singularValues();
    out.reciprocal_condition = (sv(0) > 0.0) ? sv(n - 1) / sv(0) : 0.0;

    if (out.reciprocal_condition > kSingularThreshold) {
        const Plain ident = Plain::Identity(n, n);
        out.value = a.partialPivLu().solve(expm(a, horizon) - ident);
    } else {
        out.value = expm_integral_quadrature(a, horizon);
        out.used_quadrature = true;
    }
    return out;
}

struct SpectralBound {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double bound = 0.0; // sqrt(lambda_max / lambda_min)
};

/// Eigenvalue extremes of a symmetric positive definite R and the bound
/// ||e^{2 J R t}||_2 <= sqrt(lambda_max / lambda_min).
template <typename Derived>
SpectralBound spectral_bound(const Eigen::MatrixBase<Derived>& r)
{
    detail::require_square(r, "spectral_bound");
    if (max_abs(r - r.transpose()) > 1e-12 * std::max(1.0, max_abs(r)))
        throw DesignError("spectral_bound: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<typename Derived::PlainObject> es(r, Eigen::EigenvaluesOnly);
    SpectralBound sb;
    sb.lambda_min = es.eigenvalues().minCoeff();
    sb.lambda_max = es.eigenvalues().maxCoeff();
    if (!(sb.lambda_min > 0.0)) throw DesignError("spectral_bound: matrix is not positive definite");
    sb.bound = std::sqrt(sb.lambda_max / sb.lambda_min);
    return sb;
}

/// Uniform time grid t_k = t0 + k (t1 - t0) / count, k = 0..count.
class TimeGrid {
public:
    TimeGrid() = default;

    /// Requires (t1 - t0) / dt to be integral within 1e-9.
    static TimeGrid uniform(double t0, double t1, double dt)
    {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw NumericalError("TimeGrid: dt must be positive");
        if (!(t1 >= t0)) throw NumericalError("TimeGrid: t1 < t0");
        const double ratio = (t1 - t0) / dt;
        const double rounded = std::round(ratio);
        if (std::abs(ratio - rounded) > 1e-9)
            throw NumericalError("TimeGrid: span is not an integral number of steps");
        return TimeGrid(t0, t1, static_cast<std::size_t>(rounded));
    }

    static TimeGrid with_steps(double t0, double t1, std::size_t steps)
    {
        if (steps == 0 && t1 != t0) throw NumericalError("TimeGrid: zero steps over a non-empty span");
        if (!(t1 >= t0)) throw NumericalError("TimeGrid: t1 < t0");
        return TimeGrid(t0, t1, steps);
    }

    double t0() const { return t0_; }
    double t1() const { return t1_; }
    std::size_t steps() const { return steps_; }
    std::size_t size() const { return steps_ + 1; }
    double dt() const { return steps_ ? (t1_ - t0_) / static_cast<double>(steps_) : 0.0; }

    double operator[](std::size_t k) const
    {
        if (k == steps_) return t1_;
        return t0_ + static_cast<double>(k) * dt();
    }

private:
    TimeGrid(double t0, double t1, std::size_t steps) : t0_(t0), t1_(t1), steps_(steps) {}

    double t0_ = 0.0;
    double t1_ = 0.0;
    std::size_t steps_ = 0;
};

/// (1 / T) int_{t0}^{t0 + T} f, trapezoidal on the grid; the last partial
/// interval uses linear interpolation.
inline double time_average(const TimeGrid& grid, std::span<const double> values, double horizon)
{
    if (!(horizon > 0.0)) throw NumericalError("time_average: T must be positive");
    if (values.size() != grid.size()) throw NumericalError("time_average: value count does not match grid");
    const double end = grid.t0() + horizon;
    if (end > grid.t1() + 1e-12 * std::max(1.0, std::abs(grid.t1())))
        throw NumericalError("time_average: T exceeds trace range");

    const double dt = grid.dt();
    double integral = 0.0;
    std::size_t k = 0;
    while (k < grid.steps() && grid[k + 1] <= end) {
        integral += 0.5 * dt * (values[k] + values[k + 1]);
        ++k;
    }
    if (k < grid.steps() && grid[k] < end) {
        const double frac = (end - grid[k]) / dt;
        const double v_end = values[k] + frac * (values[k + 1] - values[k]);
        integral += 0.5 * (end - grid[k]) * (values[k] + v_end);
    }
    return integral / horizon;
}

/// Running averages (1 / t) int_{t0}^{t} f at every grid point; at t = t0 the
/// average is the sample itself.
inline std::vector<double> running_average(const TimeGrid& grid, std::span<const double> values)
{
    if (values.size() != grid.size()) throw NumericalError("running_average: value count does not match grid");
    std::vector<double> out(values.size());
    if (values.empty()) return out;
    out[0] = values[0];
    const double dt = grid.dt();
    double integral = 0.0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        integral += 0.5 * dt * (values[k - 1] + values[k]);
        out[k] = integral / (grid[k] - grid.t0());
    }
    return out;
}

/// Cumulative integral on a uniform grid with local cubic interpolation
/// (fourth order). Needs at least four samples; fewer fall back to trapezoid.
inline std::vector<double> cumulative_integral(std::span<const double> f, double h)
{
    const std::size_t n = f.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    if (n < 4) {
        for (std::size_t i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        return out;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double piece = 0.0;
        if (i == 0)
            piece = (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0;
        else if (i + 2 == n)
            piece = (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]) / 24.0;
        else
            piece = (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) / 24.0;
        out[i + 1] = out[i] + h * piece;
    }
    return out;
}

/// Named scalar columns sampled on one grid.
struct Trace {
    TimeGrid grid;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> values;

    explicit Trace(TimeGrid g = {}) : grid(g) {}

    void add(const std::string& label, std::vector<double> column)
    {
        if (column.size() != grid.size()) throw Error("Trace: column '" + label + "' does not match grid");
        labels.push_back(label);
        values.push_back(std::move(column));
    }

    const std::vector<double>& column(const std::string& label) const
    {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return values[i];
        throw Error("Trace: no column '" + label + "'");
    }

    void add_running_average(const std::string& label, const std::string& new_label)
    {
        add(new_label, running_average(grid, column(label)));
    }

    double average(const std::string& label, double horizon) const
    {
        return time_average(grid, column(label), horizon);
    }
};

/// States of x' = A(t) x sampled on a grid.
struct StateTrace {
    TimeGrid grid;
    std::vector<Eigen::VectorXd> states;
    double halving_discrepancy = 0.0;
};

using TimeVaryingMatrix = std::function<Eigen::MatrixXd(double)>;
using VectorField = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Classical RK4 for x' = f(t, x). Runs at dt and dt/2 and refuses
/// (NumericalError) when the two disagree by more than `tolerance` relative to
/// max(1, |x|). Meant only as an independent cross-check.
inline StateTrace rk4_oracle(const VectorField& f, const Eigen::VectorXd& x0, const TimeGrid& grid,
                             double tolerance = 1e-9)
{
    auto step = [&](double t, double h, const Eigen::VectorXd& x) {
        const Eigen::VectorXd k1 = f(t, x);
        const Eigen::VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = f(t + h, x + h * k3);
        return Eigen::VectorXd(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    };

    StateTrace out;
    out.grid = grid;
    out.states.reserve(grid.size());
    out.states.push_back(x0);
    Eigen::VectorXd coarse = x0;
    Eigen::VectorXd fine = x0;
    const double h = grid.dt();
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const double t = grid[k];
        coarse = step(t, h, fine);
        fine = step(t, 0.5 * h, fine);
        fine = step(t + 0.5 * h, 0.5 * h, fine);
        const double scale = std::max(1.0, fine.cwiseAbs().maxCoeff());
        const double gap = (coarse - fine).cwiseAbs().maxCoeff() / scale;
        out.halving_discrepancy = std::max(out.halving_discrepancy, gap);
        if (!(gap <= tolerance))
            throw NumericalError("rk4_oracle: step-halving disagreement " + format_short(gap)
                                 + " exceeds tolerance at t = " + format_short(grid[k + 1]));
        out.states.push_back(fine);
    }
    return out;
}

/// Linear time-varying case x' = A(t) x.
inline StateTrace rk4_oracle(const TimeVaryingMatrix& a, const Eigen::VectorXd& x0, const TimeGrid& grid,
                             double tolerance = 1e-9)
{
    VectorField f = [&a](double t, const Eigen::VectorXd& x) { return Eigen::VectorXd(a(t) * x); };
    return rk4_oracle(f, x0, grid, tolerance);
}

inline StateTrace rk4_oracle(const Eigen::MatrixXd& a, const Eigen::VectorXd& x0, const TimeGrid& grid,
                             double tolerance = 1e-9)
{
    VectorField f = [&a](double, const Eigen::VectorXd& x) { return Eigen::VectorXd(a * x); };
    return rk4_oracle(f, x0, grid, tolerance);
}

/// Least-squares slope of log10(y) against log10(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw NumericalError("loglog_slope: need at least two matched points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log10(x[i]);
        my += std::log10(y[i]);
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log10(x[i]) - mx;
        sxy += dx * (std::log10(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

} // namespace dcqo
