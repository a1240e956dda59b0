// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "kfsi/galerkin.hpp"

using namespace kfsi;

namespace {

struct Rig {
    ReferenceSurface surface;
    ShellBasis shell;
    CoupledBasis basis;
    Rig(int n_s, int n_f, bool boundary_nodes = false)
        : surface(make_flat_patch_2d(1.0, 0.5, 24)),
          shell(fourier_basis(surface, ElasticParams{}, std::max(n_s, 4))),
          basis(build_basis(surface, shell, n_s, n_f, 8, 8, boundary_nodes)) {}
};

}  // namespace

TEST_CASE("coupled basis construction") {
    SUBCASE("curved surfaces are rejected") {
        const auto sph = make_sphere(1.0, 12, 24);
        const ShellBasis b = sphere_basis(sph, ElasticParams{}, 4);
        CHECK_THROWS_AS(build_basis(sph, b, 2, 2, 6), ArgumentError);
    }
    SUBCASE("gram condition is finite and reported") {
        Rig rig(2, 6);
        CHECK(rig.basis.gram_condition > 1.0);
        CHECK(rig.basis.gram_condition < 1e12);
    }
    SUBCASE("reference fields are divergence-free at every cached node") {
        // the pushforward is a Piola transform, so vanishing reference
        // divergence carries over exactly; the transported-field divergence
        // itself is FD-checked in the transform tests
        Rig rig(2, 6);
        double err = 0;
        const auto& basis = rig.basis;
        for (int k = 0; k < basis.quad.count(); ++k)
            for (int f = 0; f < basis.size(); ++f)
                err = std::max(err, std::abs(basis.grad_phi[basis.fid(k, f)].trace()));
        CHECK(err < 1e-10);
    }
    SUBCASE("lifting traces match the shell modes after pushforward") {
        Rig rig(3, 4, /*boundary_nodes=*/true);
        VecX delta = VecX::Zero(4);
        delta[0] = 0.06;
        delta[2] = -0.04;
        const BasisAtTime bt = basis_at(rig.basis, delta, VecX(), false);
        const int nf = rig.basis.quad.n_fiber;
        double err = 0;
        for (int q = 0; q < rig.surface.node_count(); ++q) {
            const int node = q * nf + (nf - 1);  // the appended s = 0 node
            for (int j = 0; j < rig.basis.n_s; ++j) {
                const Vec3 tr = bt.W[rig.basis.fid(node, j)];
                err = std::max(err, std::abs(tr[1] - rig.shell.modes(q, j)));
                err = std::max(err, std::abs(tr[0]));
            }
            for (int j = rig.basis.n_s; j < rig.basis.size(); ++j)
                err = std::max(err, bt.W[rig.basis.fid(node, j)].norm());
        }
        CHECK(err < 1e-8);
    }
}

TEST_CASE("mass matrix assembly") {
    Rig rig(2, 6);
    VecX delta = VecX::Zero(4);
    delta[1] = 0.04;
    const MatX A = assemble_mass(rig.basis, delta);
    SUBCASE("symmetric and positive definite") {
        CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(A.llt().info() == Eigen::Success);
    }
    SUBCASE("static datum gives a time-constant matrix") {
        const MatX A2 = assemble_mass(rig.basis, delta);
        CHECK((A - A2).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero datum differs from a deformed one") {
        const MatX A0 = assemble_mass(rig.basis, VecX::Zero(4));
        CHECK((A - A0).cwiseAbs().maxCoeff() > 1e-6);
    }
}

TEST_CASE("transport tensor") {
    Rig rig(2, 4);
    VecX delta = VecX::Zero(4);
    delta[0] = 0.03;
    const TransportTensor T = assemble_transport(rig.basis, delta);
    const int N = rig.basis.size();
    SUBCASE("contraction is trilinear") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> gauss;
        VecX a(N), b(N);
        for (int i = 0; i < N; ++i) {
            a[i] = gauss(rng);
            b[i] = gauss(rng);
        }
        for (int j = 0; j < N; ++j) {
            const double one = b.dot(T.E[j] * a);
            const double two = (2.0 * b).dot(T.E[j] * a);
            CHECK(two == doctest::Approx(2.0 * one).epsilon(1e-14));
        }
    }
    SUBCASE("cancellation used in the energy identity") {
        // with the Steklov mean replaced by the identity, the contraction of
        // E against (alpha, alpha, alpha) vanishes up to quadrature error
        const auto defect = [](const CoupledBasis& cb, const VecX& delta, const VecX& a) {
            const TransportTensor t = assemble_transport(cb, delta);
            double total = 0, scale = 0;
            for (int j = 0; j < a.size(); ++j) {
                const double ej = a.dot(t.E[j] * a);
                total += a[j] * ej;
                scale += std::abs(a[j] * ej);
            }
            return std::abs(total) / std::max(1.0, scale);
        };
        ReferenceSurface surf = make_flat_patch_2d(1.0, 0.5, 24);
        ShellBasis shell = fourier_basis(surf, ElasticParams{}, 4);
        const CoupledBasis fine = build_basis(surf, shell, 2, 4, 24);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> gauss;
        VecX a(fine.size());
        for (int i = 0; i < a.size(); ++i) a[i] = gauss(rng);
        // undeformed: the fiber rule resolves the profiles almost exactly
        CHECK(defect(fine, VecX::Zero(4), a) < 1e-12);
        // deformed: pure quadrature error; the blend-profile junctions make
        // the Gauss constants oscillate, so assert smallness on a rule that
        // resolves them rather than a monotone ratio
        VecX delta = VecX::Zero(4);
        delta[0] = 0.03;
        const CoupledBasis resolved = build_basis(surf, shell, 2, 4, 256);
        CHECK(defect(resolved, delta, a) < 1e-7);
    }
}

TEST_CASE("decoupled stepper") {
    const StressLaw law{1.0, 1.0, 2.5, 0.0};
    const ElasticParams ep;
    SUBCASE("zero data stays exactly zero") {
        Rig rig(2, 4);
        GalerkinConfig cfg;
        cfg.dt = 1e-2;
        cfg.eps = 0.05;
        DecoupledStepper stepper(rig.basis, law, ep, cfg, Forcing{});
        SolveInput input;
        input.eta0_coef = VecX::Zero(2);
        input.eta1_coef = VecX::Zero(2);
        stepper.reset(input, std::vector<VecX>(21, VecX::Zero(4)));
        for (int n = 0; n < 20; ++n) stepper.step();
        CHECK(stepper.alpha().cwiseAbs().maxCoeff() == 0.0);
        CHECK(stepper.eta_coef().cwiseAbs().maxCoeff() == 0.0);
        CHECK(stepper.ledger().rows.back().residual == 0.0);
    }
    SUBCASE("rigid boundary Newtonian flow dissipates monotonically") {
        Rig rig(0, 6);
        GalerkinConfig cfg;
        cfg.dt = 2e-3;
        cfg.eps = 0.05;
        cfg.n_s = 0;
        StressLaw newt{1.0, 1.0, 2.0, 0.0};
        DecoupledStepper stepper(rig.basis, newt, ep, cfg, Forcing{});
        SolveInput input;
        VecX a0 = VecX::Zero(6);
        a0[0] = 0.4;
        a0[2] = -0.3;
        input.alpha0_interior = a0;
        stepper.reset(input, std::vector<VecX>(41, VecX::Zero(4)));
        double prev = stepper.ledger().rows.back().e_kin_fluid;
        CHECK(prev > 0.0);
        for (int n = 0; n < 40; ++n) {
            stepper.step();
            const double e = stepper.ledger().rows.back().e_kin_fluid;
            CHECK(e <= prev * (1.0 + 1e-12));
            CHECK(stepper.ledger().rows.back().diss_rate >= 0.0);
            prev = e;
        }
    }
    SUBCASE("degenerate single-mode configuration is accepted") {
        Rig rig(1, 0);
        GalerkinConfig cfg;
        cfg.dt = 1e-2;
        cfg.eps = 0.02;
        DecoupledStepper stepper(rig.basis, law, ep, cfg, Forcing{});
        SolveInput input;
        input.eta0_coef = VecX::Constant(1, 0.02);
        input.eta1_coef = VecX::Zero(1);
        stepper.reset(input, std::vector<VecX>(11, VecX::Constant(4, 0.0)));
        for (int n = 0; n < 10; ++n) stepper.step();
        CHECK(stepper.ledger().rows.back().e_koiter > 0.0);
    }
    SUBCASE("trace constraint holds at every accepted step") {
        Rig rig(2, 4, /*boundary_nodes=*/true);
        GalerkinConfig cfg;
        cfg.dt = 5e-3;
        cfg.eps = 0.05;
        Forcing forcing;
        forcing.g = [](double t, double a, double) {
            return 0.3 * std::exp(-std::pow((t - 0.02) / 0.01, 2)) *
                   std::cos(2 * 3.14159265358979323846 * a);
        };
        DecoupledStepper stepper(rig.basis, law, ep, cfg, forcing);
        SolveInput input;
        input.eta0_coef = VecX::Zero(2);
        input.eta1_coef = VecX::Zero(2);
        std::vector<VecX> datum;
        for (int i = 0; i <= 10; ++i) {
            VecX c = VecX::Zero(4);
            c[0] = 1e-3 * i;
            datum.push_back(c);
        }
        stepper.reset(input, datum);
        const int nf = rig.basis.quad.n_fiber;
        for (int n = 0; n < 10; ++n) {
            stepper.step();
            const BasisAtTime bt =
                basis_at(rig.basis, datum[n + 1].head(4), VecX(), false);
            const VecX dteta = rig.shell.modes.leftCols(2) * stepper.alpha().head(2);
            double err = 0;
            for (int q = 0; q < rig.surface.node_count(); ++q) {
                const int node = q * nf + (nf - 1);
                Vec3 tr = Vec3::Zero();
                for (int i = 0; i < rig.basis.size(); ++i)
                    tr += stepper.alpha()[i] * bt.W[rig.basis.fid(node, i)];
                err = std::max(err, std::abs(tr[1] - dteta[q]));
                err = std::max(err, std::abs(tr[0]));
            }
            CHECK(err < 1e-8);
        }
    }
}

TEST_CASE("shell oscillator") {
    const auto flat = make_flat_patch(1.0, 1.0, 0.5, 8, 8);
    const ElasticParams ep;
    const ShellBasis shell = fourier_basis(flat, ep, 1);
    const double omega = std::sqrt(2.0 * shell.kmat(0, 0) / shell.mass(0, 0));
    SUBCASE("frequency matches the closed-form oscillator") {
        GalerkinConfig cfg;
        cfg.eps = 0.0;
        const double period = 2 * 3.14159265358979323846 / omega;
        cfg.dt = period / 200;
        ShellOscillator osc(shell, ep, cfg, Forcing{});
        osc.reset(VecX::Constant(1, 0.05), VecX::Zero(1));
        // quarter period brings the mode near zero crossing
        for (int n = 0; n < 50; ++n) osc.step();
        const double expected = 0.05 * std::cos(omega * osc.t());
        CHECK(std::abs(osc.eta_coef()[0] - expected) < 2e-4 * 0.05 + 1e-6);
    }
    SUBCASE("time reversal returns to the initial data") {
        GalerkinConfig cfg;
        cfg.eps = 0.0;
        cfg.dt = 1e-3;
        ShellOscillator osc(shell, ep, cfg, Forcing{});
        osc.reset(VecX::Constant(1, 0.05), VecX::Constant(1, 0.01));
        for (int n = 0; n < 100; ++n) osc.step();
        ShellOscillator back(shell, ep, cfg, Forcing{});
        back.reset(osc.eta_coef(), -osc.rate_coef());
        for (int n = 0; n < 100; ++n) back.step();
        CHECK(std::abs(back.eta_coef()[0] - 0.05) < 1e-10);
        CHECK(std::abs(back.rate_coef()[0] + 0.01) < 1e-10);
    }
    SUBCASE("undamped energy is conserved to machine precision") {
        GalerkinConfig cfg;
        cfg.eps = 0.0;
        cfg.dt = 2e-3;
        ShellOscillator osc(shell, ep, cfg, Forcing{});
        osc.reset(VecX::Constant(1, 0.05), VecX::Zero(1));
        const double e0 = osc.ledger().rows.front().energy();
        for (int n = 0; n < 500; ++n) osc.step();
        CHECK(std::abs(osc.ledger().rows.back().energy() - e0) < 1e-14);
    }
}

TEST_CASE("energy identity residual of an empty window") {
    EnergyLedger ledger;
    CHECK(energy_identity_residual(ledger, 0.0, 1.0) == 0.0);
}
