// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kfsi/compat_ops.hpp"
#include "kfsi/shell_energy.hpp"
#include "kfsi/stress_law.hpp"
#include "kfsi/transform.hpp"

namespace kfsi {

// Coupled time-dependent basis: shell modes W_k paired with divergence-free
// lifting fields (shared coefficient enforces tr u = dt(eta) nu), plus
// interior divergence-free fields with zero trace. The fluid fields are
// pushforwards of fixed reference fields along the mollified datum, so the
// conjugated Steklov means collapse to windowed coefficient averages.
//
// The construction requires a flat channel catalog surface: on curved
// catalogs a fixed shell mode admits no divergence-free lifting for every
// admissible datum (its gamma-weighted moment varies with the datum), so
// curved boundaries would need fully time-dependent shell modes.
struct CoupledBasis {
    const ReferenceSurface* surface = nullptr;
    const ShellBasis* shell = nullptr;
    int n_s = 0, n_f = 0;
    VolumeQuadrature quad;
    // reference fields at the volume quadrature nodes, flattened [node * N + i]
    std::vector<Vec3> phi;
    std::vector<Mat3> grad_phi;
    double gram_condition = 0.0;

    int size() const { return n_s + n_f; }
    int fid(int node, int i) const { return node * size() + i; }
};

// with_boundary_nodes appends a zero-weight fiber node at s = 0, exposing
// boundary traces of the pushforward cache without touching any integral.
CoupledBasis build_basis(const ReferenceSurface& s, const ShellBasis& shell, int n_s,
                         int n_f, int n_fiber, int profile_cap = 8,
                         bool with_boundary_nodes = false);

// Pushforward cache T_{R delta} Phi_i at the volume nodes for one datum
// snapshot (values, full deformed gradients, time-derivative values).
struct BasisAtTime {
    int count = 0, N = 0;
    std::vector<double> wdet;  // quadrature weight times det dPsi
    std::vector<Vec3> y;       // deformed points
    std::vector<Vec3> W;
    std::vector<Mat3> G;       // deformed gradient of W
    std::vector<Vec3> dtW;     // time derivative of W at fixed deformed point
    bool has_rate = false;
};

// delta and rate are shell-basis coefficient vectors of the datum snapshot.
BasisAtTime basis_at(const CoupledBasis& basis, const VecX& delta_coef,
                     const VecX& rate_coef, bool with_rate);

// A_jk = int W_k . W_j dx + int_M W_k W_j dA (shell block orthonormal).
MatX assemble_mass(const CoupledBasis& basis, const VecX& delta_coef);

struct TransportTensor {
    std::vector<MatX> E;  // E[j](k, l)
};
// E_jkl = int (W_l (x) W_k) : DW_j dx - 1/2 int_M W_l W_k W_j gamma dA.
TransportTensor assemble_transport(const CoupledBasis& basis, const VecX& delta_coef);

struct GalerkinConfig {
    int n_s = 8, n_f = 32, n_fiber = 10, profile_cap = 8;
    double dt = 1e-3;
    double eps = 0.05;        // Steklov window and parabolization weight
    double eps_tilde = 0.0;   // stress regularization
    double tol_picard = 1e-10;
    int max_picard = 200;
    double picard_damping = 1.0;
    bool fluid_enabled = true;
};

struct Forcing {
    std::function<Vec3(double, const Vec3&)> f;    // body force f(t, y)
    std::function<double(double, double, double)> g;  // shell force g(t, chart a, b)
};

struct EnergyRow {
    double t = 0;
    double e_kin_fluid = 0, e_kin_shell = 0, e_koiter = 0;
    double diss_rate = 0;     // int S_eps(Du):Du dx
    double parabol_rate = 0;  // 2 eps K(dt eta)
    double power_rate = 0;    // int f.u + int g dt(eta)
    double residual = 0;      // normalized identity residual over [0, t]
    double eta_sup = 0, tau_val = 1;
    // extended monitors
    double eta_h2 = 0, dteta_l2sq = 0, dteta_h2sq = 0;
    double du_lp_p = 0, du_lp0_p0 = 0;  // |Du|_p^p and |Du|_{p0}^{p0} rates
    double f_l2sq = 0, g_l2sq = 0;
    double energy() const { return e_kin_fluid + e_kin_shell + e_koiter; }
};

struct EnergyLedger {
    std::vector<EnergyRow> rows;
};

// |E(t2) - E(t1) + int (dissipation + parabolization - power)| normalized by
// the peak energy over the window; integrals by trapezoid on the ledger grid.
double energy_identity_residual(const EnergyLedger& ledger, double t1, double t2);

struct GronwallReport {
    bool pass = false;
    double constant = 0.0;    // measured C with LHS <= C e^t RHS
    double log_slope = 0.0;   // tail slope of log(LHS/(e^t RHS))
    double eps_term = 0.0;    // eps |dt eta|^2_{L2 H2} + eps_tilde |Du|_{p0}^{p0}
};
GronwallReport gronwall_check(const EnergyLedger& ledger, const GalerkinConfig& cfg);

struct StepStats {
    int picard_iterations = 0;
    double picard_residual = 0.0;
};

struct SolveInput {
    VecX eta0_coef, eta1_coef;  // shell basis coefficients
    VecX alpha0_interior;       // initial interior fluid coefficients (empty = zero)
};

// One decoupled solve along a prescribed datum trajectory: implicit midpoint
// in time, the linear Koiter terms folded into the step matrix, the stress
// and transport nonlinearities resolved by damped Picard iteration.
class DecoupledStepper {
public:
    DecoupledStepper(const CoupledBasis& basis, const StressLaw& law,
                     const ElasticParams& elastic, const GalerkinConfig& cfg,
                     Forcing forcing);

    // datum_coef: R_eps delta at the step points t0 + i dt (coefficients in
    // the shell basis). Must have at least two samples.
    void reset(const SolveInput& input, std::vector<VecX> datum_coef, double t0 = 0.0);

    StepStats step();
    bool done() const { return step_index_ >= n_steps(); }
    int n_steps() const { return static_cast<int>(datum_.size()) - 1; }

    double t() const { return t_; }
    const VecX& alpha() const { return alpha_; }
    const VecX& eta_coef() const { return eta_; }
    const EnergyLedger& ledger() const { return ledger_; }
    const std::vector<VecX>& alpha_history() const { return alpha_hist_; }
    const std::vector<VecX>& eta_history() const { return eta_hist_; }

private:
    VecX windowed_alpha(const VecX& current_mid, double t_mid) const;
    void push_ledger_row(double t, const VecX& alpha, const VecX& eta,
                         const VecX& delta, const VecX& rate);
    VecX nonlinear_rhs(const BasisAtTime& bt, const VecX& x, const VecX& xbar,
                       double t_mid);

    const CoupledBasis* basis_;
    StressLaw law_;
    ElasticParams elastic_;
    GalerkinConfig cfg_;
    Forcing forcing_;
    MatX stiffness_;  // 2 K(W_j, W_k)

    std::vector<VecX> datum_;
    double t0_ = 0.0, t_ = 0.0;
    int step_index_ = 0;
    VecX alpha_, eta_;
    std::vector<VecX> alpha_hist_, eta_hist_;
    EnergyLedger ledger_;
};

// Pure shell oscillator path (no fluid): dt^2 eta + 2K(eta + eps dt eta, .) = g.
class ShellOscillator {
public:
    ShellOscillator(const ShellBasis& shell, const ElasticParams& elastic,
                    const GalerkinConfig& cfg, Forcing forcing);
    void reset(const VecX& eta0_coef, const VecX& eta1_coef, double t0 = 0.0);
    void step();
    double t() const { return t_; }
    const VecX& eta_coef() const { return eta_; }
    const VecX& rate_coef() const { return rate_; }
    const EnergyLedger& ledger() const { return ledger_; }

private:
    void push_row();
    const ShellBasis* shell_;
    ElasticParams elastic_;
    GalerkinConfig cfg_;
    Forcing forcing_;
    MatX stiffness_;
    double t_ = 0.0;
    VecX eta_, rate_;
    EnergyLedger ledger_;
};

}  // namespace kfsi
