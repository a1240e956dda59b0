// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "kfsi/compat_ops.hpp"
#include "kfsi/transform.hpp"

using namespace kfsi;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("volume quadrature weights") {
    SUBCASE("positive weights summing to the domain volume") {
        for (const auto& s :
             {make_sphere(1.0, 16, 32), make_cylinder(0.7, 2.0, 16, 8)}) {
            const VolumeQuadrature q = make_volume_quadrature(s, 12);
            double wmin = kInfinity;
            for (int k = 0; k < q.count(); ++k) wmin = std::min(wmin, q.weight(k));
            CHECK(wmin > 0.0);
            CHECK(q.total_weight() == doctest::Approx(s.volume).epsilon(1e-8));
        }
    }
    SUBCASE("low order rule covers the volume too") {
        const auto flat = make_flat_patch(1.0, 1.0, 0.5, 8, 8);
        const VolumeQuadrature q = make_volume_quadrature(flat, 32, true);
        CHECK(q.total_weight() == doctest::Approx(flat.volume).epsilon(1e-12));
    }
}

TEST_CASE("pushforward") {
    const auto sph = make_sphere(1.0, 16, 32);
    Displacement eta = Displacement::zero(sph);
    for (int i = 0; i < sph.node_count(); ++i) eta.values[i] = 0.15 * sph.nu[i][2];
    const HanzawaMap map(sph, eta);
    const VolumeQuadrature q = make_volume_quadrature(sph, 8);
    const DeformedQuadrature d = deform(q, map);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    std::vector<Vec3> phi(q.count());
    for (auto& v : phi) v = Vec3(gauss(rng), gauss(rng), gauss(rng));

    SUBCASE("identity at zero displacement") {
        const DeformedQuadrature d0 = deform(q, HanzawaMap(sph, Displacement::zero(sph)));
        const auto out = pushforward(d0, phi);
        for (int k = 0; k < q.count(); ++k) CHECK((out[k] - phi[k]).norm() < 1e-14);
    }
    SUBCASE("pullback inverts pushforward nodewise") {
        const auto fwd = pushforward(d, phi);
        const auto back = pullback(d, fwd);
        for (int k = 0; k < q.count(); ++k)
            CHECK((back[k] - phi[k]).norm() < 1e-10 * std::max(1.0, phi[k].norm()));
    }
    SUBCASE("linearity is exact") {
        std::vector<Vec3> phi2(q.count());
        for (int k = 0; k < q.count(); ++k) phi2[k] = 2.0 * phi[k];
        const auto a = pushforward(d, phi);
        const auto b = pushforward(d, phi2);
        for (int k = 0; k < q.count(); ++k) CHECK((b[k] - 2.0 * a[k]).norm() == 0.0);
    }
}

TEST_CASE("divergence preservation of a curl fixture (2d channel)") {
    const double L = 1.0, H = 0.5;
    const auto flat = make_flat_patch_2d(L, H, 24);
    ElasticParams ep;
    const ShellBasis b = fourier_basis(flat, ep, 4);
    VecX c = VecX::Zero(4);
    c[0] = 0.04;
    c[3] = 0.02;
    const HanzawaMap map(flat, b.displacement(c));
    const double a = 2 * kPi / L;
    // stream function chi = sin(a x) sin(a y): phi = (d_y chi, -d_x chi)
    VectorField phi = [=](const Vec3& x) {
        return Vec3(a * std::sin(a * x[0]) * std::cos(a * x[1]),
                    -a * std::cos(a * x[0]) * std::sin(a * x[1]), 0.0);
    };
    std::vector<Vec3> samples;
    for (int i = 0; i < 5; ++i)
        for (int k = 0; k < 4; ++k)
            samples.emplace_back(L * (i + 0.5) / 5, 0.1 * H + 0.6 * H * (k + 0.5) / 4, 0.0);
    CHECK(divergence_sup_fd(map, phi, samples, 1e-3) < 1e-6);
}

TEST_CASE("integrals on deformed domains") {
    const auto sph = make_sphere(1.0, 24, 48);
    SUBCASE("unit integrand, zero displacement: reference volume") {
        const HanzawaMap map(sph, Displacement::zero(sph));
        const VolumeQuadrature q = make_volume_quadrature(sph, 10);
        const double v = volume_integral(deform(q, map), [](const Vec3&) { return 1.0; });
        CHECK(v == doctest::Approx(4.0 / 3.0 * kPi).epsilon(1e-10));
    }
    SUBCASE("offset ball volume at eta = 0.5") {
        const HanzawaMap map(sph, Displacement::constant(sph, 0.5));
        const VolumeQuadrature q = make_volume_quadrature(sph, 48);
        const double v = volume_integral(deform(q, map), [](const Vec3&) { return 1.0; });
        CHECK(v == doctest::Approx(4.0 / 3.0 * kPi * 1.5 * 1.5 * 1.5).epsilon(1e-6));
    }
    SUBCASE("gamma-weighted boundary measure at eta = 0.5") {
        const double a =
            surface_integral(sph, Displacement::constant(sph, 0.5), VecX::Ones(sph.node_count()));
        CHECK(a == doctest::Approx(4 * kPi * 2.25).epsilon(1e-12));
    }
    SUBCASE("mean-corrected densities integrate to zero") {
        ElasticParams ep;
        const ShellBasis b = sphere_basis(sph, ep, 6);
        VecX c = VecX::Zero(6);
        c[2] = 0.2;
        const Displacement eta = b.displacement(c);
        std::mt19937_64 rng(17);
        std::normal_distribution<double> gauss;
        VecX f(sph.node_count());
        for (int i = 0; i < f.size(); ++i) f[i] = gauss(rng);
        const VecX corrected = mean_correct(sph, eta, f, default_bump(sph));
        CHECK(std::abs(surface_integral(sph, eta, corrected)) < 1e-12);
    }
}

TEST_CASE("divergence theorem residual vanishes for the zero field") {
    const auto sph = make_sphere(1.0, 16, 32);
    DivThmFixture fx;
    fx.phi = [](const Vec3&) { return Vec3::Zero(); };
    fx.div_phi = [](const Vec3&) { return 0.0; };
    fx.psi = [](const Vec3& y) { return y[0] * y[1]; };
    fx.grad_psi = [](const Vec3& y) { return Vec3(y[1], y[0], 0.0); };
    fx.b = VecX::Zero(sph.node_count());
    CHECK(divergence_theorem_check(sph, Displacement::constant(sph, 0.2), fx, 12) < 1e-15);
}

TEST_CASE("reynolds transport") {
    const auto sph = make_sphere(1.0, 16, 32);
    SUBCASE("static displacement and static field") {
        ReynoldsFixture fx;
        fx.eta_of_t = [&](double) { return Displacement::constant(sph, 0.25); };
        fx.eta_rate_nodal = [&](double) { return VecX::Zero(sph.node_count()); };
        fx.xi = [](double, const Vec3& y) { return y[0] + y[2] * y[2]; };
        fx.xi_t = [](double, const Vec3&) { return 0.0; };
        CHECK(reynolds_check(sph, 24, fx, 0.5, 0.01) < 1e-12);
    }
    SUBCASE("volume transport: xi = 1 reduces to the flux of the boundary motion") {
        ReynoldsFixture fx;
        fx.eta_of_t = [&](double t) { return Displacement::constant(sph, 0.1 * t); };
        fx.eta_rate_nodal = [&](double) { return VecX::Constant(sph.node_count(), 0.1); };
        fx.xi = [](double, const Vec3&) { return 1.0; };
        fx.xi_t = [](double, const Vec3&) { return 0.0; };
        // |Omega_t| is cubic in t; the residual is the O(dt^2) difference term
        CHECK(reynolds_check(sph, 48, fx, 0.5, 0.02) < 1e-5);
        CHECK(reynolds_check(sph, 48, fx, 0.5, 0.005) <
              reynolds_check(sph, 48, fx, 0.5, 0.02));
    }
}
