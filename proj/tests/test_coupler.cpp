// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "kfsi/coupler.hpp"
#include "kfsi/io.hpp"

using namespace kfsi;

namespace {

struct Rig {
    ReferenceSurface surface;
    ShellBasis shell;
    CoupledBasis basis;
    StressLaw law{1.0, 1.0, 2.5, 0.0};
    ElasticParams ep;
    GalerkinConfig gcfg;
    CouplerConfig ccfg;
    Rig() : surface(make_flat_patch_2d(1.0, 0.5, 16)),
            shell(fourier_basis(surface, ElasticParams{}, 4)),
            basis(build_basis(surface, shell, 2, 4, 6)) {
        gcfg.n_s = 2;
        gcfg.n_f = 4;
        gcfg.dt = 2e-3;
        gcfg.eps = 0.05;
        gcfg.eps_tilde = 1e-3;
        ccfg.window = 0.1;
        ccfg.horizon = 0.2;
        ccfg.tol_fp = 1e-9;
    }
};

Forcing pulse_forcing(double amp) {
    Forcing f;
    f.g = [amp](double t, double a, double) {
        const double arg = (t - 0.03) / 0.015;
        return amp * std::exp(-arg * arg) * std::cos(2 * 3.14159265358979323846 * a);
    };
    return f;
}

}  // namespace

TEST_CASE("zero data converges in one iteration to the zero solution") {
    Rig rig;
    Coupler coupler(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg, Forcing{});
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    const auto fp = coupler.fixed_point(input, 0.0, 50);
    CHECK(fp.report.status == "converged");
    CHECK(fp.report.iterations == 1);
    for (const auto& row : fp.sol.ledger.rows) CHECK(row.energy() == 0.0);
}

TEST_CASE("small forcing shows geometric decay of the increments") {
    Rig rig;
    Coupler coupler(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg, pulse_forcing(0.05));
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    const auto fp = coupler.fixed_point(input, 0.0, 50);
    CHECK(fp.report.status == "converged");
    CHECK(fp.report.iterations >= 2);
    for (size_t i = 1; i < fp.report.contraction.size(); ++i)
        CHECK(fp.report.contraction[i] < 0.9);
}

TEST_CASE("deterministic reruns produce identical ledgers") {
    Rig rig;
    Coupler coupler(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg, pulse_forcing(0.05));
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    const RunOutcome a = coupler.continue_run(input);
    const RunOutcome b = coupler.continue_run(input);
    REQUIRE(a.ledger.rows.size() == b.ledger.rows.size());
    for (size_t i = 0; i < a.ledger.rows.size(); ++i) {
        CHECK(a.ledger.rows[i].e_kin_fluid == b.ledger.rows[i].e_kin_fluid);
        CHECK(a.ledger.rows[i].e_koiter == b.ledger.rows[i].e_koiter);
        CHECK(a.ledger.rows[i].residual == b.ledger.rows[i].residual);
    }
    CHECK(a.status == "horizon");
}

TEST_CASE("two distinct data give controlled twin-run differences") {
    Rig rig;
    Coupler coupler(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg, pulse_forcing(0.05));
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    std::vector<VecX> d0(51, VecX::Zero(4));
    std::vector<VecX> d1(51, VecX::Zero(4));
    for (int i = 0; i <= 50; ++i) d1[i][0] = 1e-3 * i / 50.0;
    const auto r0 = coupler.solve_decoupled(d0, input);
    const auto r1 = coupler.solve_decoupled(d1, input);
    double diff = 0;
    for (int i = 0; i <= 50; ++i)
        diff = std::max(diff, (r0.eta[i] - r1.eta[i]).cwiseAbs().maxCoeff());
    CHECK(diff > 0.0);        // distinct data, distinct solutions
    CHECK(diff < 1e-2);       // difference stays comparable to the datum gap
}

TEST_CASE("window restart consistency") {
    Rig rig;
    rig.ccfg.horizon = 0.1;
    rig.ccfg.window = 0.1;
    Coupler one(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg, pulse_forcing(0.05));
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    const RunOutcome ra = one.continue_run(input);

    Rig rig2;
    rig2.ccfg.horizon = 0.1;
    rig2.ccfg.window = 0.05;
    Coupler two(rig2.basis, rig2.law, rig2.ep, rig2.gcfg, rig2.ccfg, pulse_forcing(0.05));
    const RunOutcome rb = two.continue_run(input);
    CHECK(ra.status == "horizon");
    CHECK(rb.status == "horizon");
    CHECK(rb.windows == 2);
    const double ea = ra.ledger.rows.back().energy();
    const double eb = rb.ledger.rows.back().energy();
    const double res = std::max(ra.ledger.rows.back().residual, 1e-12);
    CHECK(std::abs(ea - eb) <= std::max(2.0 * res * std::max(ea, eb), 1e-9));
}

TEST_CASE("iterates leaving the convex set trigger window halving") {
    Rig rig;
    rig.ccfg.window = 0.2;
    rig.ccfg.horizon = 0.2;
    rig.gcfg.dt = 1e-3;
    // violent pulse: eta wants to exceed alpha = kappa/2 within the window
    Coupler coupler(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg, pulse_forcing(400.0));
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    const auto fp = coupler.fixed_point(input, 0.0, 200);
    CHECK(fp.report.status == "exited");
}

TEST_CASE("breakdown detection on a strongly forced run") {
    Rig rig;
    rig.ccfg.window = 0.1;
    rig.ccfg.horizon = 3.0;
    rig.ccfg.kappa_fraction = 0.5;  // low threshold keeps the test quick
    rig.gcfg.dt = 1e-3;
    Forcing f;
    // steady spatial wave: a constant force is hydrostatic and does no work
    // on the divergence-free space, a modal profile drives the first mode
    f.f = [](double, const Vec3& y) {
        return Vec3(0.0, -12.0 * std::cos(2 * 3.14159265358979323846 * y[0]), 0.0);
    };
    Coupler coupler(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg, f);
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    const RunOutcome out = coupler.continue_run(input);
    CHECK(out.status == "breakdown");
    CHECK(out.breakdown);
    CHECK(out.eta_sup_final >= 0.5 * rig.surface.kappa);
    CHECK(out.t_reached < 3.0);
    // tau stays finite at every accepted step
    for (const auto& row : out.ledger.rows) CHECK(std::isfinite(row.tau_val));
}

TEST_CASE("epsilon sweep isolates failing cells") {
    Rig rig;
    rig.ccfg.horizon = 0.05;
    rig.ccfg.window = 0.05;
    SolveInput input;
    input.eta0_coef = VecX::Zero(2);
    input.eta1_coef = VecX::Zero(2);
    const auto cells = epsilon_sweep(rig.basis, rig.law, rig.ep, rig.gcfg, rig.ccfg,
                                     pulse_forcing(0.05), input, {0.05, -1.0}, {1e-3});
    REQUIRE(cells.size() == 2);
    CHECK(!cells[0].failed);
    CHECK(cells[1].failed);  // negative eps rejected without aborting the sweep
}
