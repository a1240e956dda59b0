// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "kfsi/compat_ops.hpp"

using namespace kfsi;

TEST_CASE("mean correction M_eta") {
    ElasticParams ep;
    const auto sph = make_sphere(1.0, 16, 32);
    const ShellBasis basis = sphere_basis(sph, ep, 6);
    VecX c = VecX::Zero(6);
    c[1] = 0.2;
    const Displacement eta = basis.displacement(c);
    const VecX bump = default_bump(sph);

    SUBCASE("densities with vanishing moment pass through unchanged") {
        std::mt19937_64 rng(2);
        std::normal_distribution<double> gauss;
        VecX f(sph.node_count());
        for (int i = 0; i < f.size(); ++i) f[i] = gauss(rng);
        const VecX f0 = mean_correct(sph, eta, f, bump);  // now moment-free
        const VecX again = mean_correct(sph, eta, f0, bump);
        CHECK((again - f0).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("flat surface with unit density matches the quadrature closed form") {
        const auto flat = make_flat_patch(1.0, 1.0, 0.5, 12, 12);
        const VecX psi = default_bump(flat);
        const VecX one = VecX::Ones(flat.node_count());
        const VecX r = mean_correct(flat, Displacement::zero(flat), one, psi);
        double area = 0, psi_int = 0;
        for (int i = 0; i < flat.node_count(); ++i) {
            area += flat.w[i];
            psi_int += flat.w[i] * psi[i];
        }
        const VecX expected = one - psi * (area / psi_int);
        CHECK((r - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("moment is annihilated") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> gauss;
        for (int t = 0; t < 20; ++t) {
            VecX f(sph.node_count());
            for (int i = 0; i < f.size(); ++i) f[i] = gauss(rng);
            CHECK(std::abs(gamma_moment(sph, eta, mean_correct(sph, eta, f, bump))) < 1e-12);
        }
    }
}

TEST_CASE("orthogonal correction M_eta^perp") {
    const auto flat = make_flat_patch(1.0, 1.0, 0.5, 12, 12);
    SUBCASE("flat surface reduces to the classical mean-zero projection") {
        std::mt19937_64 rng(6);
        std::normal_distribution<double> gauss;
        VecX f(flat.node_count());
        for (int i = 0; i < f.size(); ++i) f[i] = gauss(rng);
        const VecX r = orth_correct(flat, Displacement::zero(flat), f);
        double mean = 0, area = 0;
        for (int i = 0; i < f.size(); ++i) {
            mean += flat.w[i] * f[i];
            area += flat.w[i];
        }
        const VecX expected = f.array() - mean / area;
        CHECK((r - expected.matrix()).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("removed component is L2(dA)-orthogonal to the output") {
        ElasticParams ep;
        const auto sph = make_sphere(1.0, 16, 32);
        const ShellBasis basis = sphere_basis(sph, ep, 6);
        VecX c = VecX::Zero(6);
        c[2] = 0.3;
        const Displacement eta = basis.displacement(c);
        std::mt19937_64 rng(8);
        std::normal_distribution<double> gauss;
        for (int t = 0; t < 20; ++t) {
            VecX f(sph.node_count());
            for (int i = 0; i < f.size(); ++i) f[i] = gauss(rng);
            const VecX r = orth_correct(sph, eta, f);
            CHECK(std::abs(gamma_moment(sph, eta, r)) < 1e-12);
            double ip = 0;
            for (int i = 0; i < f.size(); ++i) ip += sph.w[i] * (f[i] - r[i]) * r[i];
            CHECK(std::abs(ip) < 1e-12);
        }
    }
}

TEST_CASE("spectral projection P_k") {
    ElasticParams ep;
    const auto flat = make_flat_patch_2d(1.0, 0.5, 48);
    const ShellBasis b = fourier_basis(flat, ep, 10);
    SUBCASE("first mode reproduces itself") {
        VecX c = VecX::Zero(10);
        c[0] = 1.0;
        const VecX mode = b.nodal(c);
        CHECK((spectral_project(b, 1, mode) - mode).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("fields orthogonal to the first k modes project to zero") {
        VecX c = VecX::Zero(10);
        c[8] = 1.0;
        CHECK(spectral_project(b, 5, b.nodal(c)).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("k beyond the basis size is an argument error") {
        CHECK_THROWS_AS(spectral_project(b, 11, VecX::Zero(flat.node_count())),
                        ArgumentError);
    }
    SUBCASE("span recovery at full order") {
        std::mt19937_64 rng(9);
        std::normal_distribution<double> gauss;
        VecX c(10);
        for (int i = 0; i < 10; ++i) c[i] = gauss(rng);
        const VecX f = b.nodal(c);
        CHECK((spectral_project(b, 10, f) - f).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("space mollifier R_eps") {
    ElasticParams ep;
    const auto flat = make_flat_patch_2d(1.0, 0.5, 48);
    const ShellBasis b = fourier_basis(flat, ep, 16);
    SUBCASE("zero input stays zero") {
        const MollifyResult r = space_mollify(flat, b, VecX::Zero(flat.node_count()), 0.1);
        CHECK(r.shift == 0.0);
        CHECK(r.field.values.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("a retained low mode is unchanged up to the shift") {
        VecX c = VecX::Zero(16);
        c[0] = 0.05;
        const VecX mode = b.nodal(c);
        const MollifyResult r = space_mollify(flat, b, mode, 0.05);
        CHECK((r.field.values - mode).maxCoeff() == doctest::Approx(r.shift).epsilon(1e-12));
        CHECK(r.shift < 1e-12);
    }
    SUBCASE("one-sided approximation on random fields") {
        std::mt19937_64 rng(10);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (int t = 0; t < 50; ++t) {
            VecX f(flat.node_count());
            for (int i = 0; i < f.size(); ++i) f[i] = 0.03 * unif(rng);
            const MollifyResult r = space_mollify(flat, b, f, 0.07);
            CHECK((r.field.values - f).minCoeff() >= 0.0);
        }
    }
    SUBCASE("inadmissible shift raises the degeneration error") {
        // admissible square wave: the truncation undershoots at the jumps, so
        // the one-sided shift pushes the mollified field past kappa
        VecX f(flat.node_count());
        for (int i = 0; i < flat.n1; ++i)
            f[i] = (flat.u1[i] < 0.5 * flat.len1) ? 0.43 : -0.43;
        CHECK(f.cwiseAbs().maxCoeff() < flat.kappa);
        CHECK_THROWS_AS(space_mollify(flat, b, f, 0.1), DegenerationError);
    }
}

TEST_CASE("mollified initial data") {
    ElasticParams ep;
    const auto flat = make_flat_patch_2d(1.0, 0.5, 48);
    const ShellBasis b = fourier_basis(flat, ep, 16);
    SUBCASE("zero data maps to zero") {
        InitialData data;
        data.eta0 = VecX::Zero(flat.node_count());
        data.eta1 = VecX::Zero(flat.node_count());
        data.u0 = [](const Vec3&) { return Vec3::Zero(); };
        const MollifiedData md = mollify_initial_data(flat, b, data, 0.1);
        CHECK(md.eta1_eps.cwiseAbs().maxCoeff() == 0.0);
        CHECK(md.eta0_reg.shift == 0.0);
    }
    SUBCASE("gamma-mean-zero mode is re-corrected to machine compatibility") {
        VecX c = VecX::Zero(16);
        c[1] = 0.02;
        InitialData data;
        data.eta0 = VecX::Zero(flat.node_count());
        data.eta1 = b.nodal(c);
        data.u0 = [](const Vec3&) { return Vec3::Zero(); };
        const MollifiedData md = mollify_initial_data(flat, b, data, 0.05);
        CHECK(std::abs(gamma_moment(flat, md.eta0_reg.field, md.eta1_eps)) < 1e-12);
    }
    SUBCASE("incompatible raw data is rejected") {
        InitialData data;
        data.eta0 = VecX::Zero(flat.node_count());
        data.eta1 = VecX::Constant(flat.node_count(), 0.3);  // nonzero mean
        data.u0 = [](const Vec3&) { return Vec3::Zero(); };
        CHECK_THROWS_AS(mollify_initial_data(flat, b, data, 0.05), ArgumentError);
    }
}

TEST_CASE("steklov means commute with time translation for a static datum") {
    ElasticParams ep;
    const auto flat = make_flat_patch_2d(1.0, 0.5, 24);
    const ShellBasis b = fourier_basis(flat, ep, 4);
    SteklovHistory hist;
    hist.t0 = 0.0;
    hist.dt = 0.01;
    const int n = 201;
    for (int i = 0; i < n; ++i) {
        VecX c = VecX::Zero(4);
        c[0] = 0.03;
        hist.delta.push_back(b.displacement(c));
        VecX bb(flat.node_count());
        const double t = hist.dt * i;
        for (int q = 0; q < flat.node_count(); ++q)
            bb[q] = std::sin(3.0 * t) * b.modes(q, 1);
        hist.b.push_back(bb);
    }
    const double eps = 0.06;
    const auto r2 = time_steklov_scalar(flat, hist, eps, 1.5);
    // translation property: recomputing at shifted time with shifted data agrees
    SteklovHistory shifted = hist;
    for (int i = 0; i < n; ++i) {
        const double t = hist.dt * i + 0.5;
        for (int q = 0; q < flat.node_count(); ++q)
            shifted.b[i][q] = std::sin(3.0 * t) * b.modes(q, 1);
    }
    const auto r3 = time_steklov_scalar(flat, shifted, eps, 1.0);
    CHECK((r3.value - r2.value).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("regularizer config supplies the bump for the mean projector") {
    ElasticParams ep;
    const auto sph = make_sphere(1.0, 12, 24);
    const ShellBasis basis = sphere_basis(sph, ep, 4);
    VecX c = VecX::Zero(4);
    c[1] = 0.15;
    const Displacement eta = basis.displacement(c);
    VecX f = VecX::Ones(sph.node_count());
    RegularizerConfig reg;
    reg.validate();
    const VecX def = mean_correct(sph, eta, f, reg);  // default bump
    CHECK(std::abs(gamma_moment(sph, eta, def)) < 1e-12);
    reg.bump = default_bump(sph) * 2.0;
    const VecX scaled = mean_correct(sph, eta, f, reg);
    CHECK((scaled - def).cwiseAbs().maxCoeff() < 1e-14);  // projector is scale-free
    reg.bump = -VecX::Ones(sph.node_count());
    CHECK_THROWS_AS(mean_correct(sph, eta, f, reg), ArgumentError);
}
