// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kfsi/galerkin.hpp"

namespace kfsi {

struct CouplerConfig {
    double window = 0.25;   // fixed-point window length T
    double horizon = 1.0;
    double tol_fp = 1e-7;   // sup-norm increment tolerance
    int max_fp_iter = 60;
    double fp_damping = 1.0;  // omega in (0, 1]
    double kappa_fraction = 0.95;
    int max_halvings = 6;
    // cap on the convex-set radius alpha = (|eta0|_inf + kappa)/2 so the
    // Hanzawa injectivity margin of the blend profile is never consumed
    double alpha_cap_fraction = 0.955;
    void validate() const;
};

struct FixedPointReport {
    std::vector<double> increments;   // sup-norm of delta^{m+1} - delta^m
    std::vector<double> contraction;  // successive ratios
    int iterations = 0;
    int halvings = 0;
    std::string status;  // converged | max-iter | exited | breakdown
    double final_increment = kInfinity;
    bool steklov_clipped = true;  // startup zero-extension is always active
};

struct RunOutcome {
    double t_reached = 0.0;
    bool breakdown = false;
    std::string status;  // horizon | breakdown | aborted
    double eta_sup_final = 0.0;
    int windows = 0;
    int total_halvings = 0;
    EnergyLedger ledger;
    std::vector<double> times;      // step grid of the trajectories
    std::vector<VecX> eta;          // shell coefficients per step
    std::vector<VecX> alpha;        // full coefficient vector per step
    FixedPointReport last_report;
    GronwallReport gronwall;
    std::string abort_reason;
};

struct DecoupledResult {
    std::vector<VecX> eta;    // per step
    std::vector<VecX> alpha;  // per step
    EnergyLedger ledger;
};

class Coupler {
public:
    Coupler(const CoupledBasis& basis, const StressLaw& law, const ElasticParams& elastic,
            const GalerkinConfig& gcfg, const CouplerConfig& ccfg, Forcing forcing);

    // Unique solve of the decoupled system along the (raw) datum trajectory;
    // the spatial mollification R_eps is applied internally.
    DecoupledResult solve_decoupled(const std::vector<VecX>& datum, const SolveInput& input,
                                    double t0 = 0.0) const;

    // Damped Picard iteration delta -> eta on one window of n_steps.
    struct FixedPointResult {
        DecoupledResult sol;
        FixedPointReport report;
    };
    FixedPointResult fixed_point(const SolveInput& input, double t0, int n_steps) const;

    // Window-by-window continuation until the horizon or breakdown.
    RunOutcome continue_run(const SolveInput& input) const;

    VecX mollify_datum(const VecX& coef) const;  // spectral truncation R_eps

    const GalerkinConfig& galerkin_config() const { return gcfg_; }
    const CouplerConfig& coupler_config() const { return ccfg_; }

private:
    double eta_sup(const VecX& coef) const;
    void finalize_ledger(RunOutcome& out) const;

    const CoupledBasis* basis_;
    StressLaw law_;
    ElasticParams elastic_;
    GalerkinConfig gcfg_;
    CouplerConfig ccfg_;
    Forcing forcing_;
};

struct SweepCell {
    double eps = 0.0, eps_tilde = 0.0;
    bool failed = false;
    std::string error;
    RunOutcome outcome;
    double eps_term = 0.0;  // eps |dt eta|^2 + eps_tilde |Du|^{p0} bound monitor
};

std::vector<SweepCell> epsilon_sweep(const CoupledBasis& basis, const StressLaw& law,
                                     const ElasticParams& elastic, GalerkinConfig gcfg,
                                     const CouplerConfig& ccfg, const Forcing& forcing,
                                     const SolveInput& input,
                                     const std::vector<double>& eps_list,
                                     const std::vector<double>& eps_tilde_list);

}  // namespace kfsi
