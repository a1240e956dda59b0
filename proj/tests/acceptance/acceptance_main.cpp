// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: every criterion prints one pass/fail line with the
// measured margin. Exit status is nonzero if any criterion fails.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kfsi/io.hpp"
#include "kfsi/verify.hpp"

using namespace kfsi;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int criterion, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %d: %s  (%s, %.1fs)\n", pass ? "PASS" : "FAIL", criterion,
                name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run_suite(int criterion, const std::string& suite, const std::string& label) {
    Timer timer;
    const auto results = verify_suite(suite, VerifyOptions{});
    bool pass = true;
    std::string worst;
    for (const auto& r : results) {
        if (!r.pass) {
            pass = false;
            worst += r.name + " ";
        }
    }
    std::ostringstream detail;
    detail << results.size() << " checks";
    if (!worst.empty()) detail << ", failed: " << worst;
    report(criterion, label, pass, detail.str(), timer.seconds());
}

RunOutcome run_coupled(const RunConfig& cfg) {
    Scenario sc = build_scenario(cfg);
    Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
    return coupler.continue_run(sc.input);
}

void criterion_apriori() {
    Timer timer;
    RunConfig base = preset_config("plate-pulse");
    base.horizon = base.window = 0.25;
    std::ostringstream detail;
    bool pass = true;

    // Gronwall constant stability across two time resolutions
    double constants[2] = {0, 0};
    for (int level = 0; level < 2; ++level) {
        RunConfig cfg = base;
        cfg.dt = base.window / (500 << level);
        const RunOutcome out = run_coupled(cfg);
        pass = pass && out.status == "horizon" && out.gronwall.pass;
        constants[level] = out.gronwall.constant;
    }
    const double spread =
        std::abs(constants[0] - constants[1]) / std::max(constants[0], constants[1]);
    pass = pass && spread <= 0.10;
    detail << "C = " << constants[0] << " / " << constants[1] << " (spread "
           << spread * 100 << "%)";

    // uniform bound of the regularization-weighted terms over the eps sweep
    RunConfig swcfg = base;
    swcfg.dt = base.window / 500;
    Scenario sc = build_scenario(swcfg);
    const auto cells =
        epsilon_sweep(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing, sc.input,
                      {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}, {swcfg.eps_tilde});
    double bmax = 0, bmin = kInfinity;
    std::vector<double> terms;
    for (const auto& cell : cells) {
        if (cell.failed) {
            pass = false;
            detail << " [cell eps=" << cell.eps << " failed: " << cell.error << "]";
            continue;
        }
        terms.push_back(cell.eps_term);
        bmax = std::max(bmax, cell.eps_term);
        bmin = std::min(bmin, cell.eps_term);
    }
    // bounded by a single constant: no growth trend as eps shrinks
    const double growth = terms.size() >= 2 ? -fit_order(terms) : 0.0;
    const bool bounded = std::isfinite(bmax) && growth <= 0.1;
    pass = pass && bounded;
    detail << ", eps-term in [" << bmin << ", " << bmax << "], growth exponent " << growth;
    report(7, "a-priori bound and regularization-term boundedness", pass, detail.str(),
           timer.seconds());
}

void criterion_fixed_point() {
    Timer timer;
    std::ostringstream detail;
    bool pass = true;

    {  // zero data converges in one iteration
        RunConfig cfg = preset_config("zero");
        cfg.horizon = cfg.window = 0.1;
        Scenario sc = build_scenario(cfg);
        Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
        const auto fp = coupler.fixed_point(sc.input, 0.0, 200);
        pass = pass && fp.report.status == "converged" && fp.report.iterations == 1;
        detail << "zero: " << fp.report.iterations << " iteration";
    }
    {  // plate-pulse: geometric decay of the increments
        RunConfig cfg = preset_config("plate-pulse");
        cfg.horizon = cfg.window = 0.25;
        cfg.dt = cfg.window / 500;
        Scenario sc = build_scenario(cfg);
        Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
        const auto fp =
            coupler.fixed_point(sc.input, 0.0, static_cast<int>(cfg.window / cfg.dt));
        bool decaying = fp.report.status == "converged" && !fp.report.contraction.empty();
        double worst_ratio = 0.0;
        for (const double r : fp.report.contraction) worst_ratio = std::max(worst_ratio, r);
        decaying = decaying && worst_ratio < 0.9;
        pass = pass && decaying;
        detail << "; pulse: " << fp.report.iterations
               << " iterations, worst sustained ratio " << worst_ratio;
    }
    {  // stress preset triggers restart-on-exit
        RunConfig cfg = preset_config("stress");
        const RunOutcome out = run_coupled(cfg);
        const bool halved = out.total_halvings >= 1;
        pass = pass && halved;
        detail << "; stress: " << out.total_halvings << " halvings, status " << out.status;
    }
    report(8, "fixed-point convergence, contraction and restart-on-exit", pass,
           detail.str(), timer.seconds());
}

void criterion_breakdown() {
    Timer timer;
    std::ostringstream detail;
    bool pass = true;
    {
        RunConfig cfg = preset_config("breakdown");
        Scenario sc = build_scenario(cfg);
        const double threshold = sc.ccfg.kappa_fraction * sc.surface->kappa;
        Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
        const RunOutcome out = coupler.continue_run(sc.input);
        pass = pass && out.status == "breakdown" && out.breakdown &&
               out.eta_sup_final >= threshold;
        detail << "breakdown: status " << out.status << ", sup " << out.eta_sup_final
               << " >= " << threshold << " at t = " << out.t_reached;
    }
    {
        RunConfig cfg = preset_config("zero");
        cfg.horizon = 0.5;
        cfg.window = 0.25;
        const RunOutcome out = run_coupled(cfg);
        pass = pass && out.status == "horizon";
        detail << "; zero: status " << out.status;
    }
    report(9, "breakdown dichotomy", pass, detail.str(), timer.seconds());
}

void criterion_determinism() {
    Timer timer;
    RunConfig cfg = preset_config("plate-pulse");
    cfg.horizon = cfg.window = 0.1;
    cfg.dt = 1e-3;
    cfg.n1 = cfg.n2 = 8;
    cfg.n_fiber = 6;
    cfg.n_s = 4;
    cfg.n_f = 8;
    std::string files[2];
    for (int i = 0; i < 2; ++i) {
        const RunOutcome out = run_coupled(cfg);
        const std::string path = "acceptance_ledger_" + std::to_string(i) + ".csv";
        write_ledger_csv(path, out.ledger);
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[i] = ss.str();
        std::remove(path.c_str());
    }
    const bool pass = !files[0].empty() && files[0] == files[1];
    report(10, "byte-identical ledgers for identical configurations", pass,
           std::to_string(files[0].size()) + " bytes compared", timer.seconds());
}

}  // namespace

int main() {
    run_suite(1, "geometry", "geometry oracle suite");
    run_suite(2, "shell", "Koiter energy suite");
    run_suite(3, "stress", "stress structure suite");
    run_suite(4, "transform", "change-of-variables suite");
    run_suite(5, "compat", "compatibility operator suite");
    run_suite(6, "energy", "energy identity suite");
    criterion_apriori();
    criterion_fixed_point();
    criterion_breakdown();
    criterion_determinism();
    if (g_failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}
