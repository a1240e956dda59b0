// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "kfsi/geometry.hpp"
#include "kfsi/verify.hpp"

using namespace kfsi;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("tubular radius of the catalog surfaces") {
    CHECK(tubular_radius(make_sphere(2.4, 12, 24)) == 2.4);
    CHECK(tubular_radius(make_flat_patch(1.0, 1.0, 0.7, 8, 8)) == 0.7);
    CHECK(tubular_radius(make_flat_patch_2d(2.0, 0.3, 16)) == 0.3);
    CHECK(tubular_radius(make_circle(1.1, 24)) == 1.1);
    CHECK(tubular_radius(make_cylinder(0.9, 3.0, 24, 8)) == 0.9);
}

TEST_CASE("sampling estimator agrees with the analytic cylinder radius") {
    const int nt = 40, nz = 10;
    const double R = 1.3, L = 2.0;
    std::vector<Vec3> pts(nt * nz);
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nz; ++j) {
            const double th = 2 * kPi * i / nt;
            pts[i * nz + j] = Vec3(R * std::cos(th), R * std::sin(th), L * j / nz);
        }
    const auto user = make_user_grid(3, nt, nz, std::move(pts), 2 * kPi, L);
    CHECK(std::abs(tubular_radius(user) - R) / R < 0.01);
}

TEST_CASE("degenerate user grids are rejected") {
    const int nt = 16, nz = 6;
    std::vector<Vec3> pts(nt * nz, Vec3(1.0, 0.0, 0.0));  // repeated nodes
    CHECK_THROWS_AS(make_user_grid(3, nt, nz, std::move(pts), 2 * kPi, 1.0),
                    GeometryError);
}

TEST_CASE("gamma factor") {
    SUBCASE("flat surfaces give gamma = 1 for any admissible displacement") {
        const auto flat = make_flat_patch(1.0, 1.0, 0.5, 6, 6);
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif(-0.45, 0.45);
        Displacement eta = Displacement::zero(flat);
        for (int i = 0; i < eta.values.size(); ++i) eta.values[i] = unif(rng);
        const VecX gamma = gamma_factor(flat, eta);
        CHECK((gamma.array() - 1.0).abs().maxCoeff() == 0.0);
    }
    SUBCASE("zero displacement gives gamma = 1 on the sphere") {
        const auto sph = make_sphere(1.9, 12, 24);
        const VecX gamma = gamma_factor(sph, Displacement::zero(sph));
        CHECK((gamma.array() - 1.0).abs().maxCoeff() < 1e-15);
    }
    SUBCASE("unit sphere with eta = 0.5 carries the offset-area ratio 9/4") {
        const auto sph = make_sphere(1.0, 32, 64);
        const VecX gamma = gamma_factor(sph, Displacement::constant(sph, 0.5));
        double num = 0, den = 0;
        for (int i = 0; i < sph.node_count(); ++i) {
            num += sph.w[i] * gamma[i];
            den += sph.w[i];
        }
        CHECK(num / den == doctest::Approx(2.25).epsilon(1e-12));
        // the offset-surface triangulation pins the sign convention of H, G
        const auto oracle =
            offset_area_oracle(sph, [](double, double) { return 0.5; }, 384, 384);
        CHECK(std::abs(num - oracle.raw_area) / oracle.raw_area < 2e-4);
    }
    SUBCASE("circle sign convention matches the offset-length oracle") {
        const double R = 1.4, c = 0.3;
        const auto circ = make_circle(R, 64);
        const VecX gamma = gamma_factor(circ, Displacement::constant(circ, c));
        double len = 0;
        for (int i = 0; i < circ.node_count(); ++i) len += circ.w[i] * gamma[i];
        CHECK(len == doctest::Approx(2 * kPi * (R + c)).epsilon(1e-12));
        const auto oracle =
            offset_area_oracle(circ, [c](double, double) { return c; }, 4096, 1);
        CHECK(std::abs(len - oracle.raw_area) / oracle.raw_area < 1e-6);
    }
    SUBCASE("leaving the tubular neighbourhood raises the degeneration error") {
        const auto sph = make_sphere(1.0, 8, 16);
        CHECK_THROWS_AS(gamma_factor(sph, Displacement::constant(sph, 1.0)),
                        DegenerationError);
        try {
            gamma_factor(sph, Displacement::constant(sph, 1.2));
        } catch (const DegenerationError& e) {
            CHECK(std::isinf(e.tau));
        }
    }
}

TEST_CASE("tau monitor") {
    CHECK(tau(0.0, 0.8) == 1.0);
    CHECK(tau(0.4, 0.8) == doctest::Approx(2.0));
    CHECK(std::isinf(tau(0.8, 0.8)));
    CHECK(std::isinf(tau(1.6, 0.8)));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 0.79);
    for (int t = 0; t < 200; ++t) {
        const double a = unif(rng), b = unif(rng);
        if (a < b) CHECK(tau(a, 0.8) <= tau(b, 0.8));
    }
}

TEST_CASE("blend profile end conditions") {
    const BlendProfile beta;
    CHECK(beta.beta(-1.0) == 0.0);
    CHECK(beta.beta(0.0) == 1.0);
    CHECK(beta.beta_d(-1.0) == 0.0);
    CHECK(beta.beta_dd(-1.0) == 0.0);
    CHECK(beta.beta_d(0.0) == 0.0);
    CHECK(std::abs(beta.beta(-0.5) - (beta.slope_sup() * (0.5 - 0.5 * beta.ramp))) < 1e-12);
    for (const double t : {-1.0 + beta.ramp, -beta.tail}) {
        CHECK(std::abs(beta.beta(t - 1e-9) - beta.beta(t + 1e-9)) < 1e-8);
        CHECK(std::abs(beta.beta_d(t - 1e-9) - beta.beta_d(t + 1e-9)) < 1e-6);
    }
}

TEST_CASE("hanzawa map") {
    const auto flat = make_flat_patch(1.0, 1.0, 0.5, 8, 8);
    SUBCASE("zero displacement gives the identity with unit determinant") {
        const HanzawaMap map(flat, Displacement::zero(flat));
        for (int i = 0; i < flat.node_count(); i += 5)
            for (const double s : {-0.45, -0.2, -0.01}) {
                CHECK((map.point(i, s) - map.ref_point(i, s)).norm() == 0.0);
                CHECK(map.det(i, s) == doctest::Approx(1.0).epsilon(1e-15));
            }
    }
    SUBCASE("constant displacement shears the normal coordinate") {
        const double c = 0.12;
        const HanzawaMap map(flat, Displacement::constant(flat, c));
        const BlendProfile beta;
        for (int i = 0; i < flat.node_count(); i += 7) {
            CHECK((map.point(i, 0.0) - (flat.X[i] + c * flat.nu[i])).norm() < 1e-15);
            const double s = -0.3;
            const Vec3 expected =
                flat.X[i] + (s + c * beta.beta(s / flat.kappa)) * flat.nu[i];
            CHECK((map.point(i, s) - expected).norm() < 1e-15);
        }
    }
    SUBCASE("injectivity bound violations name the offending node") {
        Displacement eta = Displacement::zero(flat);
        eta.values[17] = 0.5;  // bound is 0.98 * kappa = 0.49
        CHECK_THROWS_WITH_AS(HanzawaMap(flat, eta), doctest::Contains("node 17"),
                             DegenerationError);
    }
    SUBCASE("boundary restriction agrees with the boundary map") {
        const auto sph = make_sphere(1.0, 12, 24);
        Displacement eta = Displacement::zero(sph);
        for (int i = 0; i < sph.node_count(); ++i) eta.values[i] = 0.2 * sph.nu[i][2];
        const HanzawaMap map(sph, eta);
        const BoundaryMap bm = boundary_map(sph, eta);
        for (int i = 0; i < sph.node_count(); ++i)
            CHECK((bm.image[i] - map.point(i, 0.0)).norm() < 1e-15);
    }
    SUBCASE("ambient inverse round trip") {
        const auto sph = make_sphere(1.0, 16, 32);
        auto f = [](double th, double ph) { return 0.1 + 0.1 * std::sin(th) * std::cos(ph); };
        const Displacement eta = Displacement::analytic(
            sph, f,
            [](double th, double ph) {
                return Vec2(0.1 * std::cos(th) * std::cos(ph),
                            -0.1 * std::sin(th) * std::sin(ph));
            },
            [](double th, double ph) {
                return Vec3(-0.1 * std::sin(th) * std::cos(ph),
                            -0.1 * std::cos(th) * std::sin(ph),
                            -0.1 * std::sin(th) * std::cos(ph));
            });
        const HanzawaMap map(sph, eta);
        for (const Vec3& x :
             {Vec3(0.3, 0.2, -0.4), Vec3(-0.5, 0.1, 0.2), Vec3(0.0, 0.6, 0.3)}) {
            const Vec3 y = map.psi(x);
            CHECK((map.psi_inverse(y) - x).norm() < 1e-12);
        }
    }
}

TEST_CASE("boundary map of the sphere with constant offset is the larger sphere") {
    const auto sph = make_sphere(1.0, 12, 24);
    const BoundaryMap bm = boundary_map(sph, Displacement::constant(sph, 0.5));
    for (const Vec3& y : bm.image) CHECK(y.norm() == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("offset volume oracle on the ball") {
    const auto sph = make_sphere(1.0, 24, 48);
    const double vol = offset_volume_oracle(sph, VecX::Constant(sph.node_count(), 0.5));
    CHECK(vol == doctest::Approx(4.0 / 3.0 * kPi * std::pow(1.5, 3)).epsilon(1e-12));
}
