// SPDX-License-Identifier: Apache-2.0
#include "kfsi/coupler.hpp"

#include <cmath>

namespace kfsi {

void CouplerConfig::validate() const {
    std::vector<std::string> issues;
    if (!(window > 0)) issues.push_back("coupler: window must be positive");
    if (!(horizon > 0)) issues.push_back("coupler: horizon must be positive");
    if (!(tol_fp > 0)) issues.push_back("coupler: tol_fp must be positive");
    if (!(fp_damping > 0 && fp_damping <= 1)) issues.push_back("coupler: damping in (0,1]");
    if (!(kappa_fraction > 0 && kappa_fraction < 1))
        issues.push_back("coupler: kappa_fraction in (0,1)");
    if (!issues.empty()) throw ConfigError("invalid coupler config", issues);
}

Coupler::Coupler(const CoupledBasis& basis, const StressLaw& law,
                 const ElasticParams& elastic, const GalerkinConfig& gcfg,
                 const CouplerConfig& ccfg, Forcing forcing)
    : basis_(&basis), law_(law), elastic_(elastic), gcfg_(gcfg), ccfg_(ccfg),
      forcing_(std::move(forcing)) {
    ccfg.validate();
}

VecX Coupler::mollify_datum(const VecX& coef) const {
    // spectral truncation at wavenumber ~ 1/eps; solver data are band-limited
    // in the shell basis, so the constant shift of R_eps vanishes
    constexpr double two_pi = 6.28318530717958647692;
    const double cutoff = two_pi / gcfg_.eps;
    VecX out = coef;
    for (int k = 0; k < coef.size(); ++k)
        if (basis_->shell->wavenumber[k] > cutoff) out[k] = 0.0;
    return out;
}

double Coupler::eta_sup(const VecX& coef) const {
    if (coef.size() == 0) return 0.0;
    const VecX nodal = basis_->shell->modes.leftCols(coef.size()) * coef;
    return nodal.cwiseAbs().maxCoeff();
}

DecoupledResult Coupler::solve_decoupled(const std::vector<VecX>& datum,
                                         const SolveInput& input, double t0) const {
    std::vector<VecX> reg(datum.size());
    for (size_t i = 0; i < datum.size(); ++i) reg[i] = mollify_datum(datum[i]);
    DecoupledStepper stepper(*basis_, law_, elastic_, gcfg_, forcing_);
    stepper.reset(input, std::move(reg), t0);
    while (!stepper.done()) stepper.step();
    DecoupledResult out;
    out.eta = stepper.eta_history();
    out.alpha = stepper.alpha_history();
    out.ledger = stepper.ledger();
    return out;
}

Coupler::FixedPointResult Coupler::fixed_point(const SolveInput& input, double t0,
                                               int n_steps) const {
    const int ns = basis_->n_s;
    const double kappa = basis_->surface->kappa;
    const double eta0_sup = eta_sup(input.eta0_coef);
    const double alpha_bound =
        std::min(0.5 * (eta0_sup + kappa), ccfg_.alpha_cap_fraction * kappa);

    FixedPointResult res;
    std::vector<VecX> delta(n_steps + 1,
                            input.eta0_coef.size() ? input.eta0_coef : VecX::Zero(ns));
    for (int m = 1; m <= ccfg_.max_fp_iter; ++m) {
        res.sol = solve_decoupled(delta, input, t0);
        res.report.iterations = m;
        // membership of the next iterate in the convex set D
        double sup_eta = 0.0, increment = 0.0;
        std::vector<VecX> delta_new(delta.size());
        for (size_t i = 0; i < delta.size(); ++i) {
            delta_new[i] =
                (1.0 - ccfg_.fp_damping) * delta[i] + ccfg_.fp_damping * res.sol.eta[i];
            sup_eta = std::max(sup_eta, eta_sup(delta_new[i]));
            increment = std::max(increment, eta_sup(delta_new[i] - delta[i]));
        }
        res.report.increments.push_back(increment);
        if (res.report.increments.size() > 1) {
            const double prev = res.report.increments[res.report.increments.size() - 2];
            if (prev > 0) res.report.contraction.push_back(increment / prev);
        }
        res.report.final_increment = increment;
        if (sup_eta > alpha_bound) {
            res.report.status = "exited";
            return res;
        }
        delta = std::move(delta_new);
        if (increment <= ccfg_.tol_fp) {
            res.report.status = "converged";
            return res;
        }
    }
    res.report.status = "max-iter";
    return res;
}

RunOutcome Coupler::continue_run(const SolveInput& input) const {
    RunOutcome out;
    SolveInput data = input;
    const double dt = gcfg_.dt;
    const double kappa = basis_->surface->kappa;
    const double stop = ccfg_.kappa_fraction * kappa;
    double t = 0.0;
    out.times.push_back(0.0);
    out.eta.push_back(input.eta0_coef.size() ? input.eta0_coef : VecX::Zero(basis_->n_s));
    {
        VecX a0 = VecX::Zero(basis_->size());
        if (input.eta1_coef.size()) a0.head(basis_->n_s) = input.eta1_coef;
        if (input.alpha0_interior.size()) a0.tail(basis_->n_f) = input.alpha0_interior;
        out.alpha.push_back(a0);
    }

    while (t < ccfg_.horizon - 0.5 * dt) {
        const double span = std::min(ccfg_.window, ccfg_.horizon - t);
        int n_steps = std::max(1, static_cast<int>(std::lround(span / dt)));
        const int floor_steps = std::max(1, n_steps >> ccfg_.max_halvings);
        FixedPointResult fp;
        int halvings = 0;
        while (true) {
            try {
                fp = fixed_point(data, t, n_steps);
            } catch (const DegenerationError& e) {
                out.status = "aborted";
                out.abort_reason = e.what();
                out.t_reached = t;
                out.last_report.status = "breakdown";
                return out;
            }
            if (fp.report.status == "exited") {
                if (n_steps / 2 < floor_steps || n_steps == 1) {
                    out.status = "aborted";
                    out.abort_reason = "fixed-point iterates left the convex set at the "
                                       "window-halving floor";
                    out.t_reached = t;
                    out.last_report = fp.report;
                    return out;
                }
                n_steps /= 2;
                ++halvings;
                continue;
            }
            break;
        }
        fp.report.halvings = halvings;
        out.total_halvings += halvings;
        if (fp.report.status == "max-iter") {
            out.status = "aborted";
            out.abort_reason = "fixed-point iteration exhausted without convergence "
                               "(final increment " +
                               std::to_string(fp.report.final_increment) + ")";
            out.t_reached = t;
            out.last_report = fp.report;
            return out;
        }
        out.last_report = fp.report;
        ++out.windows;

        // merge trajectories and ledger (skip the duplicated window head)
        const size_t skip = 1;
        for (size_t i = skip; i < fp.sol.eta.size(); ++i) {
            out.times.push_back(t + static_cast<double>(i) * dt);
            out.eta.push_back(fp.sol.eta[i]);
            out.alpha.push_back(fp.sol.alpha[i]);
        }
        const size_t row_skip = out.ledger.rows.empty() ? 0 : 1;
        for (size_t i = row_skip; i < fp.sol.ledger.rows.size(); ++i)
            out.ledger.rows.push_back(fp.sol.ledger.rows[i]);

        // breakdown detection on the converged window solution
        for (size_t i = 0; i < fp.sol.eta.size(); ++i) {
            const double sup = eta_sup(fp.sol.eta[i]);
            if (sup >= stop) {
                out.breakdown = true;
                out.status = "breakdown";
                out.t_reached = t + static_cast<double>(i) * dt;
                out.eta_sup_final = sup;
                finalize_ledger(out);
                return out;
            }
        }

        // restart data for the next window
        data.eta0_coef = fp.sol.eta.back();
        data.eta1_coef = fp.sol.alpha.back().head(basis_->n_s);
        data.alpha0_interior = fp.sol.alpha.back().tail(basis_->n_f);
        t += n_steps * dt;
    }
    out.status = "horizon";
    out.t_reached = t;
    out.eta_sup_final = out.eta.empty() ? 0.0 : eta_sup(out.eta.back());
    finalize_ledger(out);
    return out;
}

void Coupler::finalize_ledger(RunOutcome& out) const {
    // recompute the residual column against the global start
    auto& rows = out.ledger.rows;
    if (rows.empty()) return;
    EnergyLedger tmp;
    for (size_t i = 0; i < rows.size(); ++i) {
        tmp.rows.push_back(rows[i]);
        rows[i].residual = energy_identity_residual(tmp, rows.front().t, rows[i].t);
    }
    out.gronwall = gronwall_check(out.ledger, gcfg_);
}

std::vector<SweepCell> epsilon_sweep(const CoupledBasis& basis, const StressLaw& law,
                                     const ElasticParams& elastic, GalerkinConfig gcfg,
                                     const CouplerConfig& ccfg, const Forcing& forcing,
                                     const SolveInput& input,
                                     const std::vector<double>& eps_list,
                                     const std::vector<double>& eps_tilde_list) {
    std::vector<SweepCell> cells;
    for (const double eps : eps_list) {
        for (const double et : eps_tilde_list) {
            SweepCell cell;
            cell.eps = eps;
            cell.eps_tilde = et;
            GalerkinConfig g = gcfg;
            g.eps = eps;
            g.eps_tilde = et;
            try {
                Coupler coupler(basis, law, elastic, g, ccfg, forcing);
                cell.outcome = coupler.continue_run(input);
                cell.eps_term = cell.outcome.gronwall.eps_term;
            } catch (const Error& e) {
                cell.failed = true;
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace kfsi
