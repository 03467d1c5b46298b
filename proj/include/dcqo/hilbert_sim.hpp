#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcqo/coupled_dynamics.hpp"
#include "dcqo/plant_nonlinear.hpp"

namespace dcqo {

/// Largest Fock truncation accepted; the joint space is 2N-dimensional.
inline constexpr int kMaxFockDimension = 512;

inline void require_fock_dimension(int n)
{
    if (n < 2) throw Error("Fock truncation N must be at least 2");
    if (n > kMaxFockDimension) throw ResourceError("Fock truncation N exceeds " + std::to_string(kMaxFockDimension));
}

/// Kronecker product; joint index = qubit_index * N + fock_index.
inline MatXc kron(const MatXc& a, const MatXc& b)
{
    MatXc out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Dense operator on C^2 (qubit) tensor C^N (truncated oscillator).
struct HilbertOperator {
    int dim_fock = 0;
    MatXc matrix;
    bool hermitian = false;

    double hermiticity_residual() const { return max_abs(matrix - matrix.adjoint()); }

    /// Throws NumericalError if flagged Hermitian but ||M - M^dagger|| > 1e-12.
    void check() const
    {
        if (!matrix.allFinite()) throw NumericalError("HilbertOperator: non-finite entries");
        if (hermitian && hermiticity_residual() > 1e-12)
            throw NumericalError("HilbertOperator: flagged Hermitian but is not");
    }
};

struct OperatorSet {
    int dim_fock = 0;
    std::array<HilbertOperator, 3> sigma; // sigma_i tensor I
    HilbertOperator q;                    // I tensor (a + a^dagger)
    HilbertOperator p;                    // I tensor i(a^dagger - a)
    HilbertOperator a;                    // I tensor a
    HilbertOperator identity;
};

/// Truncated ladder operator a|n> = sqrt(n)|n-1> on C^N.
inline MatXc fock_annihilation(int n)
{
    MatXc a = MatXc::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(double(k));
    return a;
}

/// Pauli blocks and oscillator quadratures with [q, p] = 2i on all but the
/// top Fock level.
inline OperatorSet build_operators(int n)
{
    require_fock_dimension(n);
    const Complex I(0.0, 1.0);
    const MatXc id_q = MatXc::Identity(2, 2);
    const MatXc id_f = MatXc::Identity(n, n);
    const MatXc a = fock_annihilation(n);
    const MatXc ad = a.adjoint();
    const PauliMatrices s = pauli();

    OperatorSet ops;
    ops.dim_fock = n;
    for (int i = 0; i < 3; ++i) ops.sigma[i] = {n, kron(MatXc(s[i]), id_f), true};
    ops.q = {n, kron(id_q, MatXc(a + ad)), true};
    ops.p = {n, kron(id_q, MatXc(I * (ad - a))), true};
    ops.a = {n, kron(id_q, a), false};
    ops.identity = {n, MatXc::Identity(2 * n, 2 * n), true};
    return ops;
}

/// H = H_p + H_c + H_o with
///   H_p = r_p^T x_p,
///   H_c = (1/2) x_p^T R_c x_o + (1/2) x_o^T R_c^T x_p,
///   H_o = (1/2) x_o^T R_o x_o in symmetric ordering.
struct TotalHamiltonian {
    HilbertOperator H;
    HilbertOperator plant;
    HilbertOperator coupling;
    HilbertOperator oscillator;
    // ||H_c - (alpha^T x_p)(beta^T x_o)||, zero when R_c = alpha beta^T
    double product_form_residual = 0.0;
};

inline TotalHamiltonian build_hamiltonian(const SpinPlant& plant, const ObserverDesign& design, int n)
{
    const OperatorSet ops = build_operators(n);
    const int dim = 2 * n;
    const std::array<const MatXc*, 2> xo = {&ops.q.matrix, &ops.p.matrix};

    TotalHamiltonian th;
    MatXc hp = MatXc::Zero(dim, dim);
    for (int i = 0; i < 3; ++i) hp += plant.r_p(i) * ops.sigma[i].matrix;

    MatXc hc = MatXc::Zero(dim, dim);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            const double r = design.R_c(i, j);
            if (r == 0.0) continue;
            const MatXc& x = ops.sigma[i].matrix;
            const MatXc& y = *xo[j];
            hc += 0.5 * r * (x * y + y * x);
        }

    MatXc zp = MatXc::Zero(dim, dim);
    for (int i = 0; i < 3; ++i) zp += design.alpha(i) * ops.sigma[i].matrix;
    MatXc yo = MatXc::Zero(dim, dim);
    for (int j = 0; j < 2; ++j) yo += design.beta(j) * *xo[j];
    th.product_form_residual = max_abs(hc - zp * yo);

    MatXc ho = MatXc::Zero(dim, dim);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            ho += 0.25 * design.R_o(i, j) * (*xo[i] * *xo[j] + *xo[j] * *xo[i]);

    th.plant = {n, hp, true};
    th.coupling = {n, hc, true};
    th.oscillator = {n, ho, true};
    th.H = {n, hp + hc + ho, true};
    try {
        th.H.check();
    } catch (const NumericalError&) {
        throw NumericalError("build_hamiltonian: total Hamiltonian is not Hermitian");
    }
    return th;
}

/// Joint-space indices with Fock label below `safe_dim` (both qubit blocks).
inline std::vector<Eigen::Index> safe_indices(int dim_fock, int safe_dim)
{
    std::vector<Eigen::Index> idx;
    for (int s = 0; s < 2; ++s)
        for (int k = 0; k < std::min(safe_dim, dim_fock); ++k) idx.push_back(Eigen::Index(s) * dim_fock + k);
    return idx;
}

inline MatXc project(const MatXc& x, const std::vector<Eigen::Index>& idx)
{
    const auto n = static_cast<Eigen::Index>(idx.size());
    MatXc out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = x(idx[i], idx[j]);
    return out;
}

/// Default size of the truncation-safe Fock block used for operator audits.
inline int default_safe_dim(int dim_fock) { return std::max(1, dim_fock / 4); }

/// Exact evolution under a time-independent Hermitian H via its eigendecomposition.
/// Heisenberg picture X(t) = e^{iHt} X e^{-iHt}; states evolve as e^{-iHt} psi.
class HeisenbergPropagator {
public:
    explicit HeisenbergPropagator(const HilbertOperator& h) : dim_fock_(h.dim_fock)
    {
        h.check();
        if (h.matrix.rows() > kMaxMatrixOrder) throw ResourceError("HeisenbergPropagator: dimension exceeds cap");
        Eigen::SelfAdjointEigenSolver<MatXc> es(h.matrix);
        if (es.info() != Eigen::Success) throw NumericalError("HeisenbergPropagator: eigendecomposition failed");
        energies_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
        unitarity_residual_ = max_abs(vectors_.adjoint() * vectors_ - MatXc::Identity(dim(), dim()));
        if (unitarity_residual_ > 1e-10) throw NumericalError("HeisenbergPropagator: eigenbasis is not unitary");
    }

    Eigen::Index dim() const { return vectors_.rows(); }
    int dim_fock() const { return dim_fock_; }
    const Eigen::VectorXd& energies() const { return energies_; }
    double unitarity_residual() const { return unitarity_residual_; }

    MatXc to_eigenbasis(const MatXc& x) const { return vectors_.adjoint() * x * vectors_; }

    /// X(t) given X in the eigenbasis.
    MatXc evolve_from_eigenbasis(const MatXc& x_eig, double t) const
    {
        return vectors_ * phased(x_eig, t) * vectors_.adjoint();
    }

    MatXc evolve(const MatXc& x0, double t) const { return evolve_from_eigenbasis(to_eigenbasis(x0), t); }

    /// P X(t) P restricted to `idx`, without forming the full X(t).
    MatXc evolve_projected(const MatXc& x_eig, double t, const std::vector<Eigen::Index>& idx) const
    {
        MatXc rows(static_cast<Eigen::Index>(idx.size()), dim());
        for (std::size_t i = 0; i < idx.size(); ++i) rows.row(Eigen::Index(i)) = vectors_.row(idx[i]);
        return rows * phased(x_eig, t) * rows.adjoint();
    }

    MatXc unitary(double t) const
    {
        const Complex I(0.0, 1.0);
        VecXc ph(dim());
        for (Eigen::Index k = 0; k < dim(); ++k) ph(k) = std::exp(-I * energies_(k) * t);
        return vectors_ * ph.asDiagonal() * vectors_.adjoint();
    }

    /// Coordinates of psi in the eigenbasis.
    VecXc to_eigen_coordinates(const VecXc& psi) const { return vectors_.adjoint() * psi; }

    VecXc evolve_state(const VecXc& coords, double t) const
    {
        const Complex I(0.0, 1.0);
        VecXc c = coords;
        for (Eigen::Index k = 0; k < dim(); ++k) c(k) *= std::exp(-I * energies_(k) * t);
        return vectors_ * c;
    }

private:
    MatXc phased(const MatXc& x_eig, double t) const
    {
        const Complex I(0.0, 1.0);
        VecXc ph(dim());
        for (Eigen::Index k = 0; k < dim(); ++k) ph(k) = std::exp(I * energies_(k) * t);
        return ph.asDiagonal() * x_eig * ph.conjugate().asDiagonal();
    }

    int dim_fock_ = 0;
    Eigen::VectorXd energies_;
    MatXc vectors_;
    double unitarity_residual_ = 0.0;
};

inline HilbertOperator heisenberg_evolve(const TotalHamiltonian& h, const HilbertOperator& x0, double t)
{
    const HeisenbergPropagator prop(h.H);
    return {x0.dim_fock, prop.evolve(x0.matrix, t), x0.hermitian};
}

/// Pure joint state with a truncation monitor: the probability mass on Fock
/// levels >= occupancy_cutoff must stay below kTruncationMass.
struct JointState {
    VecXc vector;
    int dim_fock = 0;
    int occupancy_cutoff = 0;

    static int default_cutoff(int n) { return n > 16 ? n - 8 : n / 2; }

    static JointState product(const Eigen::Vector2cd& qubit, const VecXc& fock)
    {
        JointState s;
        s.dim_fock = static_cast<int>(fock.size());
        require_fock_dimension(s.dim_fock);
        s.occupancy_cutoff = default_cutoff(s.dim_fock);
        s.vector = kron(MatXc(qubit), MatXc(fock)).col(0);
        s.vector.normalize();
        return s;
    }

    double mass_above_cutoff() const { return mass_above(vector, dim_fock, occupancy_cutoff); }

    static double mass_above(const VecXc& v, int n, int cutoff)
    {
        double mass = 0.0;
        for (int s = 0; s < 2; ++s)
            for (int k = std::max(cutoff, 0); k < n; ++k) mass += std::norm(v(Eigen::Index(s) * n + k));
        return mass;
    }
};

inline constexpr double kTruncationMass = 1e-10;

inline Eigen::Vector2cd qubit_plus() { return Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0); }
inline Eigen::Vector2cd qubit_up() { return Eigen::Vector2cd(1.0, 0.0); }

inline VecXc fock_vacuum(int n)
{
    VecXc v = VecXc::Zero(n);
    v(0) = 1.0;
    return v;
}

/// Truncated coherent state |alpha>, renormalized.
inline VecXc fock_coherent(int n, Complex alpha)
{
    VecXc v(n);
    Complex amp = std::exp(-0.5 * std::norm(alpha));
    for (int k = 0; k < n; ++k) {
        v(k) = amp;
        amp *= alpha / std::sqrt(double(k + 1));
    }
    return v.normalized();
}

struct Observable {
    std::string label;
    HilbertOperator op;
};

/// <psi(t)| X |psi(t)> for each observable on the grid (Schroedinger-picture
/// evaluation of the Heisenberg expectation), plus "avg_<label>" running
/// averages. Throws TruncationError if the evolving state puts more than
/// kTruncationMass above the occupancy cutoff.
inline Trace expectation_trace(const HeisenbergPropagator& prop, const std::vector<Observable>& observables,
                               const JointState& psi, const TimeGrid& grid, double* max_mass = nullptr)
{
    if (psi.mass_above_cutoff() > kTruncationMass)
        throw TruncationError("expectation_trace: initial state is not truncation safe");
    const VecXc coords = prop.to_eigen_coordinates(psi.vector);
    std::vector<std::vector<double>> cols(observables.size(), std::vector<double>(grid.size()));
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const VecXc state = prop.evolve_state(coords, grid[k]);
        const double mass = JointState::mass_above(state, psi.dim_fock, psi.occupancy_cutoff);
        worst = std::max(worst, mass);
        if (mass > kTruncationMass)
            throw TruncationError("expectation_trace: occupancy above cutoff reached " + format_short(mass)
                                  + " at t = " + format_short(grid[k]));
        for (std::size_t i = 0; i < observables.size(); ++i)
            cols[i][k] = state.dot(observables[i].op.matrix * state).real();
    }
    if (max_mass) *max_mass = worst;
    Trace trace(grid);
    for (std::size_t i = 0; i < observables.size(); ++i) trace.add(observables[i].label, std::move(cols[i]));
    for (const auto& o : observables) trace.add_running_average(o.label, "avg_" + o.label);
    return trace;
}

/// The plant, oscillator and energy observables used by the CLI and scenarios.
inline std::vector<Observable> standard_observables(const OperatorSet& ops, const TotalHamiltonian& h)
{
    return {{"sigma1", ops.sigma[0]}, {"sigma2", ops.sigma[1]}, {"sigma3", ops.sigma[2]},
            {"q", ops.q}, {"p", ops.p}, {"H", h.H}};
}

// ---------------------------------------------------------------------------
// Operator-level audits on the truncation-safe block

/// max-abs of P (q(t), p(t) - Phi-row combination of (z_p(0), q(0), p(0))) P.
inline double linear_identity_residual(const HeisenbergPropagator& prop, const OperatorSet& ops,
                                       const ObserverDesign& design, double t, int safe_dim)
{
    const auto idx = safe_indices(ops.dim_fock, safe_dim);
    const Mat3 phi = transition_matrix(build_augmented(design), t);
    MatXc zp = MatXc::Zero(ops.q.matrix.rows(), ops.q.matrix.cols());
    for (int i = 0; i < 3; ++i) zp += design.alpha(i) * ops.sigma[i].matrix;
    const std::array<const MatXc*, 3> basis = {&zp, &ops.q.matrix, &ops.p.matrix};

    double worst = 0.0;
    for (int row = 1; row < 3; ++row) {
        MatXc predicted = MatXc::Zero(zp.rows(), zp.cols());
        for (int j = 0; j < 3; ++j) predicted += phi(row, j) * *basis[j];
        const MatXc evolved = prop.evolve_projected(prop.to_eigenbasis(*basis[row]), t, idx);
        worst = std::max(worst, max_abs(evolved - project(predicted, idx)));
    }
    return worst;
}

/// P q(t) P at the given times; used for truncation-convergence comparisons.
inline std::vector<MatXc> projected_trajectory(const HeisenbergPropagator& prop, const MatXc& x0,
                                               std::span<const double> times, int safe_dim)
{
    const auto idx = safe_indices(prop.dim_fock(), safe_dim);
    const MatXc x_eig = prop.to_eigenbasis(x0);
    std::vector<MatXc> out;
    for (double t : times) out.push_back(prop.evolve_projected(x_eig, t, idx));
    return out;
}

/// max-abs of P (z_p(t) - z_p(0)) P with z_p = alpha^T x_p.
inline double zp_invariance_residual(const HeisenbergPropagator& prop, const OperatorSet& ops, const Vec3& alpha,
                                     double t, int safe_dim)
{
    MatXc zp = MatXc::Zero(ops.q.matrix.rows(), ops.q.matrix.cols());
    for (int i = 0; i < 3; ++i) zp += alpha(i) * ops.sigma[i].matrix;
    const auto idx = safe_indices(ops.dim_fock, safe_dim);
    return max_abs(prop.evolve_projected(prop.to_eigenbasis(zp), t, idx) - project(zp, idx));
}

struct CcrResiduals {
    double spin = 0.0;       // max_ij |P([s_i(t), s_j(t)] - 2i eps_ijk s_k(t)) P|
    double oscillator = 0.0; // |P([q(t), p(t)] - 2i) P|
};

inline CcrResiduals ccr_residuals(const HeisenbergPropagator& prop, const OperatorSet& ops, double t, int safe_dim)
{
    const Complex I(0.0, 1.0);
    const auto idx = safe_indices(ops.dim_fock, safe_dim);
    std::array<MatXc, 3> s;
    for (int i = 0; i < 3; ++i) s[i] = prop.evolve(ops.sigma[i].matrix, t);
    const MatXc q = prop.evolve(ops.q.matrix, t);
    const MatXc p = prop.evolve(ops.p.matrix, t);

    CcrResiduals r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            MatXc expected = MatXc::Zero(s[0].rows(), s[0].cols());
            for (int k = 0; k < 3; ++k) expected += 2.0 * I * double(levi_civita(i, j, k)) * s[k];
            r.spin = std::max(r.spin, max_abs(project(commutator(s[i], s[j]) - expected, idx)));
        }
    const MatXc qp = commutator(q, p) - 2.0 * I * MatXc::Identity(q.rows(), q.cols());
    r.oscillator = max_abs(project(qp, idx));
    return r;
}

// ---------------------------------------------------------------------------
// Closed-form w_p audit

struct WpAuditSeries {
    std::string state_label;
    std::vector<double> times;
    std::vector<Vec2> exact;                  // <psi| D^T x_p(t) |psi>
    std::vector<Eigen::Vector2cd> formula;    // <psi| exp(Lambda A_w) w_p(0) |psi>, left-ordered
    std::vector<Vec2> formula_symmetrized;    // Weyl-ordered variant
    double max_deviation = 0.0;
    double max_deviation_symmetrized = 0.0;
    double max_imaginary = 0.0;
};

struct WpAuditReport {
    int dim_fock = 0;
    std::vector<WpAuditSeries> series;
};

/// Evaluates exp(Lambda(t) A_w) w_p(0) with Lambda(t) the Hermitian operator
/// c_z z_p(0) + c_q q(0) + c_p p(0), block (i, j) = g_ij(Lambda) for
/// g(x) = exp(x A_w), and compares expectations against exact Heisenberg
/// evolution of D^T x_p. Nothing is asserted; deviations are reported.
inline WpAuditSeries audit_wpt1_series(const ObserverDesign& design, const JointState& psi, const TimeGrid& grid,
                                       const std::string& label)
{
    const int n = psi.dim_fock;
    const OperatorSet ops = build_operators(n);
    const TotalHamiltonian h = build_hamiltonian(SpinPlant{}, design, n);
    const HeisenbergPropagator prop(h.H);
    const WpModel model = build_wp_model(design);

    MatXc zp = MatXc::Zero(2 * n, 2 * n);
    std::array<MatXc, 2> w0 = {MatXc::Zero(2 * n, 2 * n), MatXc::Zero(2 * n, 2 * n)};
    for (int i = 0; i < 3; ++i) {
        zp += design.alpha(i) * ops.sigma[i].matrix;
        for (int j = 0; j < 2; ++j) w0[j] += model.D(i, j) * ops.sigma[i].matrix;
    }
    const std::array<VecXc, 2> w_psi = {w0[0] * psi.vector, w0[1] * psi.vector};
    const VecXc coords = prop.to_eigen_coordinates(psi.vector);

    WpAuditSeries s;
    s.state_label = label;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        s.times.push_back(t);

        const VecXc state = prop.evolve_state(coords, t);
        Vec2 exact;
        for (int i = 0; i < 2; ++i) exact(i) = state.dot(w0[i] * state).real();
        s.exact.push_back(exact);

        const WpRecipe recipe = wp_closed_form(model, t);
        const MatXc lambda_op = recipe.lambda(0) * zp + recipe.lambda(1) * ops.q.matrix + recipe.lambda(2) * ops.p.matrix;
        Eigen::SelfAdjointEigenSolver<MatXc> es(lambda_op);
        if (es.info() != Eigen::Success) throw NumericalError("audit_wpt1: eigendecomposition failed");
        const MatXc& v = es.eigenvectors();
        const VecXc phi = v.adjoint() * psi.vector;
        std::array<VecXc, 2> chi = {v.adjoint() * w_psi[0], v.adjoint() * w_psi[1]};

        Eigen::Vector2cd left = Eigen::Vector2cd::Zero();
        Vec2 sym = Vec2::Zero();
        for (Eigen::Index m = 0; m < v.cols(); ++m) {
            const Mat2 g = expm(recipe.A_w, es.eigenvalues()(m));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    // <psi| F_ij W_j |psi> and <psi| W_j F_ij |psi>
                    const Complex fw = std::conj(phi(m)) * g(i, j) * chi[j](m);
                    const Complex wf = std::conj(chi[j](m)) * g(i, j) * phi(m);
                    left(i) += fw;
                    sym(i) += 0.5 * (fw + wf).real();
                }
        }
        s.formula.push_back(left);
        s.formula_symmetrized.push_back(sym);
        s.max_deviation = std::max(s.max_deviation, (left - exact.cast<Complex>()).cwiseAbs().maxCoeff());
        s.max_deviation_symmetrized = std::max(s.max_deviation_symmetrized, (sym - exact).cwiseAbs().maxCoeff());
        s.max_imaginary = std::max(s.max_imaginary, left.imag().cwiseAbs().maxCoeff());
    }
    return s;
}

/// Default audit: the given state plus the two comparison families
/// (sigma_3 eigenstate with vacuum, sigma_1 eigenstate with a displaced
/// coherent oscillator).
inline WpAuditReport audit_wpt1(const ObserverDesign& design, const JointState& psi, const TimeGrid& grid)
{
    WpAuditReport rep;
    rep.dim_fock = psi.dim_fock;
    const int n = psi.dim_fock;
    rep.series.push_back(audit_wpt1_series(design, psi, grid, "requested"));
    rep.series.push_back(
        audit_wpt1_series(design, JointState::product(qubit_up(), fock_vacuum(n)), grid, "sigma3_up_vacuum"));
    rep.series.push_back(audit_wpt1_series(
        design, JointState::product(qubit_plus(), fock_coherent(n, Complex(2.0, 0.0))), grid, "sigma1_plus_coherent2"));
    return rep;
}

// ---------------------------------------------------------------------------
// Observer switching scenario

struct ScenarioPhase {
    bool ran = false;
    double duration = 0.0;
    std::optional<Trace> trace;
    double sigma1_reference = 0.0;     // <sigma_1> at the start of phase A
    double sigma1_max_deviation = 0.0; // sup_t |<sigma_1(t)> - sigma1_reference|
    double estimate_target = 0.0;      // <z_p> at the start of the phase
    double estimate_average = 0.0;     // running average of <z_o> at the end of the phase
    double max_truncation_mass = 0.0;
};

struct ScenarioReport {
    int dim_fock = 0;
    ScenarioPhase phase_a;
    ScenarioPhase phase_b;
    bool disturbance_detected = false;
    bool aborted = false;
    std::string abort_reason;
};

inline constexpr double kDisturbanceThreshold = 0.1;

namespace detail {

inline ScenarioPhase run_phase(const ObserverDesign& design, const OperatorSet& ops, JointState& psi, double duration,
                               double dt, double sigma1_reference)
{
    ScenarioPhase phase;
    phase.duration = duration;
    phase.sigma1_reference = sigma1_reference;
    if (!(duration > 0.0)) return phase;

    const TotalHamiltonian h = build_hamiltonian(SpinPlant{}, design, ops.dim_fock);
    const HeisenbergPropagator prop(h.H);

    MatXc zp = MatXc::Zero(2 * ops.dim_fock, 2 * ops.dim_fock);
    for (int i = 0; i < 3; ++i) zp += design.alpha(i) * ops.sigma[i].matrix;
    const MatXc zo = design.C_o(0) * ops.q.matrix + design.C_o(1) * ops.p.matrix;
    phase.estimate_target = psi.vector.dot(zp * psi.vector).real();

    std::vector<Observable> obs = standard_observables(ops, h);
    obs.push_back({"z_o", {ops.dim_fock, zo, true}});
    const std::size_t steps = static_cast<std::size_t>(std::max(1.0, std::round(duration / dt)));
    const TimeGrid grid = TimeGrid::with_steps(0.0, duration, steps);
    Trace trace = expectation_trace(prop, obs, psi, grid, &phase.max_truncation_mass);

    const auto& s1 = trace.column("sigma1");
    for (double v : s1) phase.sigma1_max_deviation = std::max(phase.sigma1_max_deviation, std::abs(v - sigma1_reference));
    phase.estimate_average = trace.column("avg_z_o").back();

    psi.vector = prop.evolve_state(prop.to_eigen_coordinates(psi.vector), duration);
    phase.trace = std::move(trace);
    phase.ran = true;
    return phase;
}

} // namespace detail

/// Phase A couples `first` for T1, then phase B couples `second` for T2,
/// carrying the joint state across the switch (piecewise-constant H).
inline ScenarioReport observer_switch_scenario(const ObserverDesign& first, const ObserverDesign& second, JointState psi,
                                       double t1, double t2, double dt = 0.01)
{
    ScenarioReport rep;
    rep.dim_fock = psi.dim_fock;
    const OperatorSet ops = build_operators(psi.dim_fock);
    const double sigma1_0 = psi.vector.dot(ops.sigma[0].matrix * psi.vector).real();
    rep.phase_a.sigma1_reference = sigma1_0;
    rep.phase_b.sigma1_reference = sigma1_0;
    try {
        rep.phase_a = detail::run_phase(first, ops, psi, t1, dt, sigma1_0);
        rep.phase_b = detail::run_phase(second, ops, psi, t2, dt, sigma1_0);
    } catch (const TruncationError& e) {
        rep.aborted = true;
        rep.abort_reason = e.what();
    }
    rep.disturbance_detected = rep.phase_b.ran && rep.phase_b.sigma1_max_deviation > kDisturbanceThreshold;
    return rep;
}

} // namespace dcqo
