// SPDX-License-Identifier: Apache-2.0
#include "kfsi/verify.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "kfsi/io.hpp"

namespace kfsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

CheckResult check_le(const std::string& name, double measured, double threshold,
                     const std::string& detail = "") {
    return {name, measured <= threshold, measured, threshold, "<=", detail};
}
CheckResult check_ge(const std::string& name, double measured, double threshold,
                     const std::string& detail = "") {
    return {name, measured >= threshold, measured, threshold, ">=", detail};
}

Displacement nodal_displacement(const ReferenceSurface& s, const VecX& values) {
    Displacement d = Displacement::zero(s);
    d.values = values;
    d.value_at = nullptr;
    d.grad_at = nullptr;
    return d;
}

// ---------------------------------------------------------------- geometry

std::vector<CheckResult> suite_geometry(const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(opt.seed);
    const int nres = opt.quick ? 48 : 128;
    const int nora = opt.quick ? 256 : 512;

    // catalog tubular radii
    {
        const auto sph = make_sphere(1.7, 16, 32);
        const auto flat = make_flat_patch(1.0, 1.0, 0.37, 8, 8);
        const auto circ = make_circle(1.2, 32);
        const auto cyl = make_cylinder(0.8, 2.0, 24, 8);
        const double err = std::max({std::abs(tubular_radius(sph) - 1.7),
                                     std::abs(tubular_radius(flat) - 0.37),
                                     std::abs(tubular_radius(circ) - 1.2),
                                     std::abs(tubular_radius(cyl) - 0.8)});
        out.push_back(check_le("geometry.kappa_catalog", err, 0.0,
                               "ball R -> kappa = R; channel height; circle; cylinder"));
    }
    // sampling estimator on a user grid of the cylinder
    {
        const int nt = 48, nz = 12;
        const double R = 0.8, L = 2.0;
        std::vector<Vec3> pts(nt * nz);
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < nz; ++j) {
                const double th = 2 * kPi * i / nt;
                pts[i * nz + j] = Vec3(R * std::cos(th), R * std::sin(th), L * j / nz);
            }
        const auto user = make_user_grid(3, nt, nz, std::move(pts), 2 * kPi, L);
        const double rel = std::abs(tubular_radius(user) - R) / R;
        out.push_back(check_le("geometry.kappa_sampling_oracle", rel, 0.01));
    }
    // gamma on the unit sphere, eta = 0.5: ratio 2.25 and offset-area oracle
    {
        const auto sph = make_sphere(1.0, nres, nres);
        const Displacement eta = Displacement::constant(sph, 0.5);
        const VecX gamma = gamma_factor(sph, eta);
        double num = 0, den = 0;
        for (int i = 0; i < sph.node_count(); ++i) {
            num += sph.w[i] * gamma[i];
            den += sph.w[i];
        }
        out.push_back(
            check_le("geometry.gamma_offset_ratio", std::abs(num / den - 2.25), 1e-10));
        const auto oracle =
            offset_area_oracle(sph, [](double, double) { return 0.5; }, nora, nora);
        out.push_back(check_le("geometry.gamma_offset_area",
                               std::abs(num - oracle.raw_area) / oracle.raw_area, 1e-4,
                               "triangulated offset surface at " + std::to_string(nora) +
                                   "^2"));
        // nu-projected vector area equals the gamma integral for nonconstant eta
        auto eta_fn = [](double th, double ph) {
            return 0.15 + 0.2 * std::sin(th) * std::cos(ph);
        };
        Displacement eta2 = Displacement::analytic(
            sph, eta_fn,
            [](double th, double ph) {
                return Vec2(0.2 * std::cos(th) * std::cos(ph),
                            -0.2 * std::sin(th) * std::sin(ph));
            },
            [](double th, double ph) {
                return Vec3(-0.2 * std::sin(th) * std::cos(ph),
                            -0.2 * std::cos(th) * std::sin(ph),
                            -0.2 * std::sin(th) * std::cos(ph));
            });
        const VecX gamma2 = gamma_factor(sph, eta2);
        double gint = 0;
        for (int i = 0; i < sph.node_count(); ++i) gint += sph.w[i] * gamma2[i];
        const auto oracle2 = offset_area_oracle(sph, eta_fn, nora, nora);
        out.push_back(check_le("geometry.gamma_flux_area_identity",
                               std::abs(gint - oracle2.flux_area) / std::abs(gint),
                               opt.quick ? 6e-4 : 1e-4,
                               "projected vector area of the deformed boundary"));
    }
    // gamma positivity on random admissible displacements
    {
        const auto sph = make_sphere(1.3, 24, 48);
        std::uniform_real_distribution<double> unif(-0.98, 0.98);
        double worst = kInfinity;
        const int trials = opt.quick ? 100 : 1000;
        for (int trial = 0; trial < trials; ++trial) {
            VecX v(sph.node_count());
            for (int i = 0; i < v.size(); ++i) v[i] = sph.kappa * unif(rng);
            const VecX gamma = gamma_factor(sph, nodal_displacement(sph, v));
            worst = std::min(worst, gamma.minCoeff());
        }
        out.push_back(check_ge("geometry.gamma_positive_random", worst, 0.0,
                               std::to_string(trials) + " random admissible fields"));
    }
    // tau monitor
    {
        const double kappa = 0.7;
        double err = std::abs(tau(0.0, kappa) - 1.0);
        err = std::max(err, std::abs(tau(0.5 * kappa, kappa) - 2.0));
        const bool inf_ok = std::isinf(tau(kappa, kappa)) && std::isinf(tau(2 * kappa, kappa));
        out.push_back(check_le("geometry.tau_values", err, 1e-14,
                               inf_ok ? "infinity sentinel at kappa" : "sentinel missing"));
        if (!inf_ok) out.back().pass = false;
    }
    // boundary map agrees with the Hanzawa restriction; dets positive
    {
        const auto sph = make_sphere(1.0, 16, 32);
        ElasticParams ep;
        const ShellBasis basis = sphere_basis(sph, ep, 6);
        VecX coef = VecX::Zero(6);
        coef[1] = 0.12;
        coef[3] = -0.08;
        const Displacement eta = basis.displacement(coef);
        const HanzawaMap map(sph, eta);
        const BoundaryMap bm = boundary_map(sph, eta);
        double err = 0;
        for (int i = 0; i < sph.node_count(); ++i)
            err = std::max(err, (bm.image[i] - map.point(i, 0.0)).norm());
        out.push_back(check_le("geometry.boundary_restriction", err, 1e-12));
        // identity at eta = 0
        const HanzawaMap id(sph, Displacement::zero(sph));
        double iderr = 0;
        for (int i = 0; i < sph.node_count(); ++i) {
            iderr = std::max(iderr, std::abs(id.det(i, -0.4) - 1.0));
            iderr = std::max(iderr, (id.point(i, -0.4) - id.ref_point(i, -0.4)).norm());
        }
        out.push_back(check_le("geometry.hanzawa_identity", iderr, 1e-14));
    }
    // deformed volume via det dPsi against the polar-fiber oracle
    {
        const auto sph = make_sphere(1.0, 32, 64);
        ElasticParams ep;
        const ShellBasis basis = sphere_basis(sph, ep, 8);
        VecX coef = VecX::Zero(8);
        coef[0] = 0.2;
        coef[4] = 0.1;
        const Displacement eta = basis.displacement(coef);
        const HanzawaMap map(sph, eta);
        const VolumeQuadrature q = make_volume_quadrature(sph, 48);
        const double vol = deform(q, map).deformed_volume();
        const double oracle = offset_volume_oracle(sph, eta.values);
        out.push_back(check_le("geometry.hanzawa_offset_volume",
                               std::abs(vol - oracle) / oracle, 1e-6));
        // det depends O(eps)-continuously on eta
        std::vector<double> diffs;
        for (const double h : {1e-3, 5e-4, 2.5e-4}) {
            VecX c2 = coef;
            c2[0] += h;
            const HanzawaMap m2(sph, basis.displacement(c2));
            double d = 0;
            for (int i = 0; i < sph.node_count(); i += 7)
                d = std::max(d, std::abs(m2.det(i, -0.3) - map.det(i, -0.3)));
            diffs.push_back(d);
        }
        out.push_back(check_ge("geometry.det_continuity_order", fit_order(diffs), 0.9));
    }
    return out;
}

// ------------------------------------------------------------------- shell

std::vector<CheckResult> suite_shell(const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(opt.seed + 1);
    ElasticParams ep;  // lambda 2, mu 1, eps0 0.1

    const double L = 1.0;
    const auto flat = make_flat_patch(L, L, 0.5, 24, 24);
    // closed-form Koiter energy of a single sine mode
    {
        const double a = 0.3, k = 2 * kPi / L;
        auto f = [=](double x, double) { return a * std::sin(k * x); };
        auto df = [=](double x, double) { return Vec2(a * k * std::cos(k * x), 0.0); };
        auto d2f = [=](double x, double) {
            return Vec3(-a * k * k * std::sin(k * x), 0.0, 0.0);
        };
        const Displacement eta = Displacement::analytic(flat, f, df, d2f);
        const double K = koiter_form(flat, ep, eta, eta);
        const double coef = 4.0 * ep.lambda * ep.mu / (ep.lambda + 2.0 * ep.mu) + 4.0 * ep.mu;
        const double exact = 0.5 * (std::pow(ep.eps0, 3) / 3.0) * coef * a * a *
                             std::pow(k, 4) * (L * L / 2.0);
        out.push_back(check_le("shell.flat_plate_closed_form", std::abs(K - exact) / exact,
                               1e-10));
    }
    // coercivity positive on every catalog surface
    {
        double cmin = kInfinity;
        std::string detail;
        const auto run = [&](const ReferenceSurface& s, const char* name) {
            const ShellBasis b = make_shell_basis(s, ep, 8);
            const double c0 = coercivity_estimate(s, ep, b);
            cmin = std::min(cmin, c0);
            detail += std::string(name) + "=" + std::to_string(c0) + " ";
        };
        run(flat, "flat");
        const auto flat2 = make_flat_patch_2d(1.0, 0.5, 32);
        run(flat2, "flat2d");
        const auto circ = make_circle(1.0, 48);
        run(circ, "circle");
        const auto cyl = make_cylinder(1.0, 2.0, 24, 12);
        run(cyl, "cylinder");
        const auto sph = make_sphere(1.0, 24, 48);
        run(sph, "sphere");
        out.push_back(check_ge("shell.coercivity_positive", cmin, 1e-12, detail));
    }
    // eps0^3 homogeneity of the flat-plate constant
    {
        const ShellBasis b1 = fourier_basis(flat, ep, 8);
        ElasticParams ep2 = ep;
        ep2.eps0 = 2.0 * ep.eps0;
        const ShellBasis b2 = fourier_basis(flat, ep2, 8);
        const double c1 = coercivity_estimate(flat, ep, b1);
        const double c2 = coercivity_estimate(flat, ep2, b2);
        out.push_back(
            check_le("shell.eps0_cubed_homogeneity", std::abs(c2 / c1 / 8.0 - 1.0), 1e-12));
    }
    // bilinearity and symmetry on random pairs
    {
        const auto sph = make_sphere(1.0, 16, 32);
        const ShellBasis b = sphere_basis(sph, ep, 6);
        std::normal_distribution<double> gauss;
        double err = 0;
        const int trials = opt.quick ? 20 : 100;
        for (int t = 0; t < trials; ++t) {
            VecX ca(6), cb(6);
            for (int i = 0; i < 6; ++i) {
                ca[i] = gauss(rng);
                cb[i] = gauss(rng);
            }
            const Displacement da = b.displacement(ca), db = b.displacement(cb);
            const double kab = koiter_form(sph, ep, da, db);
            const double kba = koiter_form(sph, ep, db, da);
            err = std::max(err, std::abs(kab - kba) / std::max(1.0, std::abs(kab)));
            const double kaa = koiter_form(sph, ep, da, da);
            if (kaa < -1e-14) err = kInfinity;
        }
        out.push_back(check_le("shell.koiter_symmetry", err, 1e-12));
    }
    // strains of a constant displacement on the sphere
    {
        const auto sph = make_sphere(1.4, 16, 32);
        const double c = 0.21;
        const Displacement eta = Displacement::constant(sph, c);
        const auto sig = strain_sigma(sph, eta);
        const auto xi = strain_xi(sph, eta);
        double err = 0;
        for (int i = 0; i < sph.node_count(); ++i)
            for (int a = 0; a < 3; ++a) {
                err = std::max(err, std::abs(sig[i][a] + c * sph.h[i][a]));
                err = std::max(err, std::abs(xi[i][a] + c * sph.kform[i][a]));
            }
        out.push_back(check_le("shell.sphere_constant_strains", err, 1e-12));
    }
    // L2 gradient: eigenrelation on the flat plate and the defining property
    {
        const ShellBasis b = fourier_basis(flat, ep, 8);
        VecX coef = VecX::Zero(8);
        coef[1] = 0.4;  // sine mode of the lowest wavenumber pair
        const Displacement eta = b.displacement(coef);
        const VecX r = l2_gradient_apply(flat, ep, b, eta);
        const double k = b.wavenumber[1];
        const double lam = ep.bilaplacian_coeff() * std::pow(k, 4);
        double err = 0;
        for (int i = 0; i < flat.node_count(); ++i)
            err = std::max(err, std::abs(r[i] - lam * eta.values[i]));
        out.push_back(check_le("shell.gradient_flat_eigenrelation",
                               err / std::max(1.0, lam * eta.sup_norm()), 1e-8));
        std::normal_distribution<double> gauss;
        double derr = 0;
        for (int t = 0; t < 20; ++t) {
            VecX cz(8);
            for (int i = 0; i < 8; ++i) cz[i] = gauss(rng);
            const Displacement zeta = b.displacement(cz);
            double ip = 0;
            for (int i = 0; i < flat.node_count(); ++i)
                ip += flat.w[i] * r[i] * zeta.values[i];
            const double rhs = 2.0 * koiter_form(flat, ep, eta, zeta);
            derr = std::max(derr, std::abs(ip - rhs) / std::max(1.0, std::abs(rhs)));
        }
        out.push_back(check_le("shell.gradient_defining_property", derr, 1e-10));
    }
    // Rayleigh quotients are nonincreasing in the basis dimension
    {
        const ShellBasis b6 = fourier_basis(flat, ep, 6);
        const ShellBasis b12 = fourier_basis(flat, ep, 12);
        const double c6 = coercivity_estimate(flat, ep, b6);
        const double c12 = coercivity_estimate(flat, ep, b12);
        out.push_back(check_le("shell.coercivity_nested", c12 - c6, 1e-13,
                               "c0 over the larger space does not exceed the smaller"));
    }
    return out;
}

// ------------------------------------------------------------------ stress

std::vector<CheckResult> suite_stress(const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(opt.seed + 2);
    const long samples = opt.quick ? 2000 : 10000;

    const StressLaw model{1.3, 1.0, 2.7, 0.0};
    const StructureReport rep = certify_structure(model, samples, opt.seed);
    out.push_back(check_le("stress.model_law_c0",
                           std::abs(rep.c0 - model.mu0) / model.mu0, 1e-12));
    out.push_back(check_le("stress.model_law_c1",
                           std::abs(rep.c1 - model.mu0) / model.mu0, 1e-12));
    out.push_back(check_ge("stress.monotonicity", rep.monotone ? 1.0 : 0.0, 1.0,
                           std::to_string(samples) + " random pairs"));

    // regularized law stays monotone
    {
        StressLaw reg = model;
        reg.eps_tilde = 1e-2;
        const StructureReport r2 = certify_structure(reg, samples / 2, opt.seed + 7);
        out.push_back(check_ge("stress.regularized_monotone", r2.monotone ? 1.0 : 0.0, 1.0));
        // cubic growth of the eps-term at large |D|
        std::vector<double> lg;
        for (const double d : {1e5, 1e6, 1e7}) {
            const Mat3 D = d * random_unit_symmetric(rng);
            lg.push_back(std::log10(reg.eval(D).norm()));
        }
        const double slope = (lg[2] - lg[0]) / 2.0;
        out.push_back(check_le("stress.eps_cubic_growth", std::abs(slope - 3.0), 0.05,
                               "log-log slope at |D| in [1e5, 1e7]"));
    }
    // adversarial fixture must fail with a witness
    {
        const StructureReport bad = certify_structure(
            [](const Mat3& D) { return Mat3(-D); }, 1.0, 2.0, 200, opt.seed + 3);
        out.push_back(check_ge("stress.adversarial_detected", bad.monotone ? 0.0 : 1.0, 1.0,
                               "S(D) = -D rejected with witness pair"));
    }
    // odd map and frame indifference
    {
        double err = 0;
        std::normal_distribution<double> gauss;
        for (int t = 0; t < 100; ++t) {
            const Mat3 D = std::pow(10.0, -3.0 + 0.06 * t) * random_unit_symmetric(rng);
            err = std::max(err, (model.eval(-D) + model.eval(D)).norm());
            Mat3 Araw;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) Araw(i, j) = gauss(rng);
            const Eigen::HouseholderQR<Mat3> qr(Araw);
            Mat3 Q = qr.householderQ();
            if (Q.determinant() < 0) Q.col(0) *= -1.0;
            const Mat3 lhs = model.eval(Q * D * Q.transpose());
            const Mat3 rhs = Q * model.eval(D) * Q.transpose();
            err = std::max(err, (lhs - rhs).norm() / std::max(1.0, rhs.norm()));
        }
        out.push_back(check_le("stress.odd_and_frame_indifferent", err, 1e-12));
    }
    // Minty probe over randomized admissible sequences
    {
        const int seqs = opt.quick ? 20 : 100;
        int converged = 0;
        auto law = [&](const Mat3& D) { return model.eval(D); };
        std::normal_distribution<double> gauss;
        for (int t = 0; t < seqs; ++t) {
            const Mat3 A = (0.5 + 0.1 * t) * random_unit_symmetric(rng);
            std::vector<Mat3> seq;
            for (int n = 1; n <= 150; ++n)
                seq.push_back(A + (1.0 / (n * n)) * random_unit_symmetric(rng));
            const MintyReport mr = minty_probe(law, A, seq, 1e-6);
            if (mr.conclusive && mr.converged) ++converged;
        }
        out.push_back(check_ge("stress.minty_probe", static_cast<double>(converged),
                               static_cast<double>(seqs)));
    }
    return out;
}

// --------------------------------------------------------------- transform

std::vector<CheckResult> suite_transform(const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    ElasticParams ep;

    // divergence preservation, flat channel
    {
        const double L = 1.0, H = 0.5;
        const auto flat = make_flat_patch(L, L, H, 16, 16);
        const ShellBasis b = fourier_basis(flat, ep, 6);
        VecX coef = VecX::Zero(6);
        coef[0] = 0.03;
        coef[3] = 0.02;
        const Displacement eta = b.displacement(coef);
        const HanzawaMap map(flat, eta);
        const double a = 2 * kPi / L, c = kPi / H;
        VectorField phi = [=](const Vec3& x) {
            const double z = x[2];  // bottom wall at z = 0
            return Vec3(a * std::sin(a * x[0]) * std::cos(a * x[1]) +
                            c * std::sin(a * x[0]) * std::sin(c * z),
                        c * std::sin(a * x[1]) * std::cos(c * z) -
                            a * std::cos(a * x[0]) * std::sin(a * x[1]),
                        a * std::cos(a * x[0]) * std::cos(c * z) -
                            a * std::cos(a * x[1]) * std::sin(c * z));
        };
        const int nside = opt.quick ? 3 : 6;
        std::vector<Vec3> samples;
        for (int i = 0; i < nside; ++i)
            for (int j = 0; j < nside; ++j)
                for (int k = 0; k < nside; ++k)
                    samples.emplace_back(L * (i + 0.5) / nside, L * (j + 0.5) / nside,
                                         0.1 * H + 0.62 * H * (k + 0.5) / nside);
        const double sup = divergence_sup_fd(map, phi, samples, 2e-3);
        out.push_back(check_le("transform.divfree_flat", sup, 1e-6,
                               "FD oracle on the transported curl fixture"));
    }
    // divergence preservation, ball
    {
        const auto sph = make_sphere(1.0, 24, 48);
        auto eta_fn = [](double th, double ph) {
            return 0.1 + 0.15 * std::sin(th) * std::cos(ph);
        };
        const Displacement eta = Displacement::analytic(
            sph, eta_fn,
            [](double th, double ph) {
                return Vec2(0.15 * std::cos(th) * std::cos(ph),
                            -0.15 * std::sin(th) * std::sin(ph));
            },
            [](double th, double ph) {
                return Vec3(-0.15 * std::sin(th) * std::cos(ph),
                            -0.15 * std::cos(th) * std::sin(ph),
                            -0.15 * std::sin(th) * std::cos(ph));
            });
        const HanzawaMap map(sph, eta);
        VectorField phi = [](const Vec3& x) {
            return Vec3(x[0] * x[0] + x[0], 2 * x[1] * x[2] - 2 * x[0] * x[1],
                        -x[2] - x[2] * x[2]);
        };
        const int n = opt.quick ? 40 : 160;
        std::vector<Vec3> samples;
        std::mt19937_64 rng(opt.seed + 11);
        std::uniform_real_distribution<double> unif(-0.6, 0.6);
        while (static_cast<int>(samples.size()) < n) {
            const Vec3 y(unif(rng), unif(rng), unif(rng));
            if (y.norm() < 0.72) samples.push_back(y);
        }
        const double sup = divergence_sup_fd(map, phi, samples, 4e-3);
        out.push_back(check_le("transform.divfree_ball", sup, 1e-6));
        // pushforward round trip at the quadrature nodes
        const VolumeQuadrature q = make_volume_quadrature(sph, 10);
        const DeformedQuadrature d = deform(q, map);
        std::vector<Vec3> ref(q.count());
        for (int k = 0; k < q.count(); ++k) ref[k] = phi(q.ref_point(k));
        const auto fwd = pushforward(d, ref);
        const auto back = pullback(d, fwd);
        double rt = 0;
        for (int k = 0; k < q.count(); ++k) rt = std::max(rt, (back[k] - ref[k]).norm());
        out.push_back(check_le("transform.pushforward_roundtrip", rt, 1e-10));
    }
    // deformed volume and gamma-weighted surface integrals
    {
        const auto sph = make_sphere(1.0, 32, 64);
        const Displacement eta = Displacement::constant(sph, 0.5);
        const HanzawaMap map(sph, eta);
        const VolumeQuadrature q = make_volume_quadrature(sph, 48);
        const double vol = deform(q, map).deformed_volume();
        const double exact = 4.0 / 3.0 * kPi * std::pow(1.5, 3);
        out.push_back(
            check_le("transform.offset_ball_volume", std::abs(vol - exact) / exact, 1e-6));
        const double area = surface_integral(sph, eta, VecX::Ones(sph.node_count()));
        out.push_back(check_le("transform.gamma_surface_integral",
                               std::abs(area - 4 * kPi * 2.25) / (4 * kPi * 2.25), 1e-10));
        out.push_back(check_le("transform.reference_volume",
                               std::abs(q.total_weight() - sph.volume) / sph.volume, 1e-8));
    }
    // divergence-theorem identity: zero fixture and convergence order
    {
        const auto sph = make_sphere(1.0, 24, 48);
        auto eta_fn = [](double th, double ph) {
            return 0.1 + 0.12 * std::sin(th) * std::sin(ph);
        };
        const Displacement eta = Displacement::analytic(
            sph, eta_fn,
            [](double th, double ph) {
                return Vec2(0.12 * std::cos(th) * std::sin(ph),
                            0.12 * std::sin(th) * std::cos(ph));
            },
            [](double th, double ph) {
                return Vec3(-0.12 * std::sin(th) * std::sin(ph),
                            0.12 * std::cos(th) * std::cos(ph),
                            -0.12 * std::sin(th) * std::sin(ph));
            });
        DivThmFixture zero;
        zero.phi = [](const Vec3&) { return Vec3::Zero(); };
        zero.div_phi = [](const Vec3&) { return 0.0; };
        zero.psi = [](const Vec3& y) { return y[0] + y[1] * y[2]; };
        zero.grad_psi = [](const Vec3& y) { return Vec3(1.0, y[2], y[1]); };
        zero.b = VecX::Zero(sph.node_count());
        out.push_back(check_le("transform.divthm_zero_fixture",
                               divergence_theorem_check(sph, eta, zero, 16), 1e-14));

        DivThmFixture fx;
        fx.phi = [](const Vec3& y) {
            const double alpha = 1.0 + 0.2 * y[0] - 0.1 * y[1] + 0.15 * y[2];
            return Vec3(alpha * y);
        };
        fx.div_phi = [](const Vec3& y) {
            const double alpha = 1.0 + 0.2 * y[0] - 0.1 * y[1] + 0.15 * y[2];
            return 3.0 * alpha + 0.2 * y[0] - 0.1 * y[1] + 0.15 * y[2];
        };
        fx.psi = [](const Vec3& y) { return y[0] * y[0] + y[1] * y[2] + 0.5 * y[1]; };
        fx.grad_psi = [](const Vec3& y) { return Vec3(2 * y[0], y[2] + 0.5, y[1]); };
        fx.b.resize(sph.node_count());
        for (int i = 0; i < sph.node_count(); ++i) {
            const double r = 1.0 + eta.values[i];
            const Vec3 yq = r * sph.nu[i];
            fx.b[i] = (1.0 + 0.2 * yq[0] - 0.1 * yq[1] + 0.15 * yq[2]) * r;
        }
        // wide blend ramps keep the composite-midpoint study in its clean
        // h^2 regime from the first level on
        BlendProfile wide;
        wide.ramp = wide.tail = 0.3;
        std::vector<double> errs;
        for (const int nf : (opt.quick ? std::vector<int>{4, 8, 16}
                                       : std::vector<int>{8, 16, 32, 64}))
            errs.push_back(divergence_theorem_check(sph, eta, fx, nf, /*low_order=*/true, wide));
        out.push_back(check_ge("transform.divthm_order", fit_order(errs), 1.9,
                               "composite-midpoint fibers, dyadic refinement"));
    }
    // Reynolds transport
    {
        const auto sph = make_sphere(1.0, 20, 40);
        ReynoldsFixture fx;
        fx.eta_of_t = [&sph](double t) {
            const double a = 0.15 * std::sin(2.0 * t);
            return Displacement::analytic(
                sph, [=](double th, double ph) { return a * std::sin(th) * std::cos(ph); },
                [=](double th, double ph) {
                    return Vec2(a * std::cos(th) * std::cos(ph),
                                -a * std::sin(th) * std::sin(ph));
                },
                [=](double th, double ph) {
                    return Vec3(-a * std::sin(th) * std::cos(ph),
                                -a * std::cos(th) * std::sin(ph),
                                -a * std::sin(th) * std::cos(ph));
                });
        };
        fx.eta_rate_nodal = [&sph](double t) {
            const double da = 0.3 * std::cos(2.0 * t);
            VecX rate(sph.node_count());
            for (int i = 0; i < sph.node_count(); ++i)
                rate[i] = da * sph.nu[i][0];  // sin(th) cos(ph) = x/R
            return rate;
        };
        fx.xi = [](double t, const Vec3& y) {
            return std::exp(0.2 * t) * (y[0] + y[1] * y[1] + 0.5 * y[2]);
        };
        fx.xi_t = [](double t, const Vec3& y) {
            return 0.2 * std::exp(0.2 * t) * (y[0] + y[1] * y[1] + 0.5 * y[2]);
        };
        // static configuration: residual at machine precision
        ReynoldsFixture st;
        st.eta_of_t = [&sph](double) { return Displacement::constant(sph, 0.2); };
        st.eta_rate_nodal = [&sph](double) { return VecX::Zero(sph.node_count()); };
        st.xi = [](double, const Vec3& y) { return y[0] * y[1] + y[2]; };
        st.xi_t = [](double, const Vec3&) { return 0.0; };
        out.push_back(check_le("transform.reynolds_static",
                               reynolds_check(sph, 48, st, 0.3, 1e-2), 1e-12));
        std::vector<double> errs;
        for (const double dt : (opt.quick ? std::vector<double>{0.08, 0.04, 0.02}
                                          : std::vector<double>{0.08, 0.04, 0.02, 0.01}))
            errs.push_back(reynolds_check(sph, 48, fx, 0.4, dt));
        out.push_back(check_ge("transform.reynolds_order", fit_order(errs), 1.9));
    }
    return out;
}

// ------------------------------------------------------------------ compat

std::vector<CheckResult> suite_compat(const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(opt.seed + 5);
    ElasticParams ep;

    // mean and orthogonal corrections on the sphere
    {
        const auto sph = make_sphere(1.0, 20, 40);
        const ShellBasis b = sphere_basis(sph, ep, 8);
        VecX coef = VecX::Zero(8);
        coef[2] = 0.25;
        const Displacement eta = b.displacement(coef);
        const VecX bump = default_bump(sph);
        std::normal_distribution<double> gauss;
        double moment_err = 0, idem_err = 0, orth_err = 0;
        for (int t = 0; t < (opt.quick ? 10 : 50); ++t) {
            VecX f(sph.node_count());
            for (int i = 0; i < f.size(); ++i) f[i] = gauss(rng);
            const double scale = std::max(1.0, f.cwiseAbs().maxCoeff() * sph.measure);
            const VecX m = mean_correct(sph, eta, f, bump);
            moment_err = std::max(moment_err, std::abs(gamma_moment(sph, eta, m)) / scale);
            const VecX mm = mean_correct(sph, eta, m, bump);
            idem_err = std::max(idem_err, (mm - m).cwiseAbs().maxCoeff() /
                                              std::max(1.0, m.cwiseAbs().maxCoeff()));
            const VecX o = orth_correct(sph, eta, f);
            moment_err = std::max(moment_err, std::abs(gamma_moment(sph, eta, o)) / scale);
            // L2(dA) orthogonality of the removed component
            double ip = 0;
            for (int i = 0; i < f.size(); ++i) ip += sph.w[i] * (f[i] - o[i]) * o[i];
            orth_err = std::max(orth_err, std::abs(ip) / scale);
        }
        out.push_back(check_le("compat.gamma_moment_annihilated", moment_err, 1e-12));
        out.push_back(check_le("compat.projector_idempotent", idem_err, 1e-13));
        out.push_back(check_le("compat.orth_orthogonality", orth_err, 1e-12));
    }
    // spectral projection
    {
        const auto flat = make_flat_patch_2d(1.0, 0.5, 64);
        const ShellBasis b = fourier_basis(flat, ep, 12);
        VecX c = VecX::Zero(12);
        c[0] = 1.0;
        const VecX mode = b.nodal(c);
        const VecX p1 = spectral_project(b, 1, mode);
        double err = (p1 - mode).cwiseAbs().maxCoeff();
        // b orthogonal to the first k modes projects to zero
        VecX c2 = VecX::Zero(12);
        c2[7] = 1.0;
        const VecX hi = b.nodal(c2);
        err = std::max(err, spectral_project(b, 4, hi).cwiseAbs().maxCoeff());
        // norms nondecreasing in k, span recovered at full order
        std::normal_distribution<double> gauss;
        VecX cr(12);
        for (int i = 0; i < 12; ++i) cr[i] = gauss(rng);
        const VecX f = b.nodal(cr);
        double prev = -1.0;
        bool monotone = true;
        for (int k = 1; k <= 12; ++k) {
            const VecX pk = spectral_project(b, k, f);
            double nrm = 0;
            for (int i = 0; i < f.size(); ++i) nrm += flat.w[i] * pk[i] * pk[i];
            if (nrm < prev - 1e-12) monotone = false;
            prev = nrm;
        }
        err = std::max(err, (spectral_project(b, 12, f) - f).cwiseAbs().maxCoeff());
        out.push_back(check_le("compat.spectral_projection", err, 1e-12,
                               monotone ? "norm nondecreasing in k" : "monotonicity broken"));
        if (!monotone) out.back().pass = false;
    }
    // one-sided space mollification on random grid fields
    {
        const auto flat = make_flat_patch_2d(1.0, 0.5, 64);
        const ShellBasis b = fourier_basis(flat, ep, 24);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        double worst = kInfinity;
        const int trials = opt.quick ? 100 : 1000;
        for (int t = 0; t < trials; ++t) {
            VecX f(flat.node_count());
            for (int i = 0; i < f.size(); ++i) f[i] = 0.05 * unif(rng);
            const MollifyResult r = space_mollify(flat, b, f, 0.05);
            worst = std::min(worst, (r.field.values - f).minCoeff());
        }
        out.push_back(check_ge("compat.mollify_from_above", worst, 0.0,
                               std::to_string(trials) + " random fields"));
    }
    // Steklov means on the flat channel: invariance, trace compatibility, order
    {
        const double L = 1.0, H = 0.5;
        const auto flat = make_flat_patch_2d(L, H, 32);
        const ShellBasis b = fourier_basis(flat, ep, 4);
        // histories on a fine grid
        const double t0 = 0.0, dt = 0.01;
        const int nhist = 101;
        auto delta_at = [&](double t) {
            VecX c = VecX::Zero(4);
            c[0] = 0.04 * std::sin(1.7 * t);
            c[1] = 0.03 * std::cos(2.3 * t);
            return c;
        };
        auto coef_at = [&](double t) { return 1.0 + 0.5 * std::sin(3.0 * t); };

        // custom fiber rule including the boundary point s = 0
        VolumeQuadrature qb;
        qb.surface = &flat;
        qb.n_fiber = 3;
        qb.s_nodes = {-0.3 * H, -0.1 * H, 0.0};
        qb.s_weights = {0.1, 0.1, 0.1};

        SteklovHistory hist;
        hist.t0 = t0;
        hist.dt = dt;
        for (int i = 0; i < nhist; ++i) {
            const double t = t0 + i * dt;
            const Displacement d = b.displacement(delta_at(t));
            hist.delta.push_back(d);
            const HanzawaMap map(flat, d);
            const DeformedQuadrature dq = deform(qb, map);
            // phi(s) = pushforward of coef(s) * F with tr F = mode0 * nu
            std::vector<Vec3> ref(qb.count());
            for (int k = 0; k < qb.count(); ++k) {
                const int q = k / qb.n_fiber;
                const double z = H + qb.s_nodes[k % qb.n_fiber];
                Vec3 F = Vec3::Zero();
                F[1] = (z / H) * (z / H) * b.modes(q, 0);
                ref[k] = coef_at(t) * F;
            }
            hist.phi.push_back(pushforward(dq, ref));
            VecX bb(flat.node_count());
            for (int q = 0; q < flat.node_count(); ++q)
                bb[q] = coef_at(t) * b.modes(q, 0);
            hist.b.push_back(bb);
        }
        const double eps = 0.08, t_eval = 0.9;
        const auto rf = time_steklov_field(flat, qb, hist, eps, t_eval);
        const auto rs = time_steklov_scalar(flat, hist, eps, t_eval);
        // the s = 0 slice of the field against the scalar mean times nu
        double trace_err = 0;
        for (int q = 0; q < flat.node_count(); ++q) {
            const int k = q * qb.n_fiber + 2;  // s = 0 node
            const double lhs = rf.field[k].dot(flat.nu[q]);
            trace_err = std::max(trace_err, std::abs(lhs - rs.value[q]));
        }
        out.push_back(check_le("compat.steklov_trace_compat", trace_err, 1e-8));
        out.push_back(check_ge("compat.steklov_zero_extension_flagged",
                               time_steklov_scalar(flat, hist, eps, 0.02).clipped ? 1.0 : 0.0,
                               1.0));
        // order in eps against the instantaneous field
        std::vector<double> errs;
        for (const double e : {0.16, 0.08, 0.04, 0.02}) {
            const auto r = time_steklov_scalar(flat, hist, e, t_eval);
            VecX exact(flat.node_count());
            for (int q = 0; q < flat.node_count(); ++q)
                exact[q] = coef_at(t_eval) * b.modes(q, 0);
            errs.push_back((r.value - exact).cwiseAbs().maxCoeff());
        }
        out.push_back(check_ge("compat.steklov_order", fit_order(errs), 0.9));
        // static datum, constant field on a full window: unchanged
        SteklovHistory hs;
        hs.t0 = t0;
        hs.dt = dt;
        for (int i = 0; i < nhist; ++i) {
            hs.delta.push_back(b.displacement(delta_at(0.0)));
            VecX bb(flat.node_count());
            for (int q = 0; q < flat.node_count(); ++q) bb[q] = b.modes(q, 1);
            hs.b.push_back(bb);
        }
        const auto rstat = time_steklov_scalar(flat, hs, eps, t_eval);
        double serr = 0;
        for (int q = 0; q < flat.node_count(); ++q)
            serr = std::max(serr, std::abs(rstat.value[q] - b.modes(q, 1)));
        out.push_back(check_le("compat.steklov_static_invariance", serr, 1e-12));
    }
    // mollified initial data: compatibility and L2 convergence
    {
        const auto flat = make_flat_patch_2d(1.0, 0.5, 128);
        const ShellBasis b = fourier_basis(flat, ep, 40);
        // triangle wave: algebraic Fourier tail, mean zero
        VecX eta1(flat.node_count());
        for (int i = 0; i < flat.n1; ++i) {
            const double x = flat.u1[i] / flat.len1;
            eta1[i] = 0.1 * (4.0 * std::abs(x - 0.5) - 1.0);
        }
        InitialData data;
        data.eta0 = VecX::Zero(flat.node_count());
        data.eta1 = eta1;
        data.u0 = [](const Vec3&) { return Vec3::Zero(); };
        std::vector<double> errs;
        double compat = 0;
        for (const double e : {0.2, 0.1, 0.05, 0.025}) {
            const MollifiedData md = mollify_initial_data(flat, b, data, e);
            const Displacement r0 = md.eta0_reg.field;
            compat = std::max(compat, std::abs(gamma_moment(flat, r0, md.eta1_eps)));
            double l2 = 0;
            for (int i = 0; i < flat.node_count(); ++i)
                l2 += flat.w[i] * std::pow(md.eta1_eps[i] - eta1[i], 2);
            errs.push_back(std::sqrt(l2));
        }
        out.push_back(check_le("compat.initial_data_compatibility", compat, 1e-12));
        out.push_back(check_ge("compat.initial_data_l2_order", fit_order(errs), 0.9));
    }
    return out;
}

// ------------------------------------------------------------------ energy

std::vector<CheckResult> suite_energy(const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    ElasticParams ep;

    // shell oscillator: period match at eps = 0
    const auto flat = make_flat_patch(1.0, 1.0, 0.5, 8, 8);
    const ShellBasis shell1 = fourier_basis(flat, ep, 1);
    const double omega = std::sqrt(2.0 * shell1.kmat(0, 0) / shell1.mass(0, 0));
    const double period = 2.0 * kPi / omega;
    {
        GalerkinConfig cfg;
        cfg.eps = 0.0;
        cfg.dt = period / 200.0;
        ShellOscillator osc(shell1, ep, cfg, Forcing{});
        VecX e0 = VecX::Constant(1, 0.1), e1 = VecX::Zero(1);
        osc.reset(e0, e1);
        double phase = 0.0;
        double prev_c = e0[0], prev_v = 0.0;
        for (int n = 0; n < 200; ++n) {
            osc.step();
            const double c = osc.eta_coef()[0];
            const double v = osc.rate_coef()[0];
            const double cross = prev_c * (-v / omega) - (-prev_v / omega) * c;
            const double dot = prev_c * c + (prev_v * v) / (omega * omega);
            phase += std::atan2(cross, dot);
            prev_c = c;
            prev_v = v;
        }
        const double omega_eff = phase / period;
        out.push_back(check_le("energy.oscillator_period",
                               std::abs(omega_eff / omega - 1.0), 1e-3,
                               "implicit midpoint, dt = period/200"));
    }
    // parabolized oscillator: identity residual order
    {
        std::vector<double> res;
        for (const int steps : (opt.quick ? std::vector<int>{250, 500, 1000}
                                          : std::vector<int>{500, 1000, 2000})) {
            GalerkinConfig cfg;
            cfg.eps = 0.03;
            cfg.dt = period / steps;
            ShellOscillator osc(shell1, ep, cfg, Forcing{});
            osc.reset(VecX::Constant(1, 0.1), VecX::Zero(1));
            for (int n = 0; n < steps; ++n) osc.step();
            res.push_back(osc.ledger().rows.back().residual);
        }
        out.push_back(check_ge("energy.oscillator_residual_order", fit_order(res), 1.9));
        out.push_back(check_le("energy.oscillator_residual", res.back(),
                               opt.quick ? 3e-6 : 1e-6,
                               "parabolized shell at dt = period/" +
                                   std::string(opt.quick ? "1000" : "2000")));
    }
    // full coupled flat-channel run: residual magnitude and halving
    {
        RunConfig rc = preset_config("plate-pulse");
        rc.horizon = rc.window = 0.25;
        if (opt.quick) {
            rc.n1 = rc.n2 = 8;
            rc.n_fiber = 6;
            rc.n_s = 4;
            rc.n_f = 8;
        }
        const double T = rc.window;
        const int base_steps = opt.quick ? 500 : 2000;
        rc.dt = T / base_steps;
        rc.tol_fp = 1e-8;
        Scenario sc = build_scenario(rc);
        Coupler coupler(*sc.basis, sc.law, sc.elastic, sc.gcfg, sc.ccfg, sc.forcing);
        const auto fp = coupler.fixed_point(sc.input, 0.0, base_steps);
        if (fp.report.status != "converged") {
            out.push_back(check_ge("energy.coupled_fixed_point", 0.0, 1.0,
                                   "fixed point failed: " + fp.report.status));
            return out;
        }
        const double res_fine = fp.sol.ledger.rows.back().residual;
        // re-solve the decoupled system along the converged datum at coarser steps
        std::vector<VecX> datum_fine(base_steps + 1);
        for (int i = 0; i <= base_steps; ++i) datum_fine[i] = fp.sol.eta[i];
        std::vector<double> res = {0.0, 0.0, res_fine};
        for (int level = 0; level < 2; ++level) {
            const int factor = 4 >> level;  // 4 then 2
            const int steps = base_steps / factor;
            std::vector<VecX> datum(steps + 1);
            for (int i = 0; i <= steps; ++i) datum[i] = datum_fine[i * factor];
            GalerkinConfig g = sc.gcfg;
            g.dt = T / steps;
            Coupler c2(*sc.basis, sc.law, sc.elastic, g, sc.ccfg, sc.forcing);
            const auto sol = c2.solve_decoupled(datum, sc.input, 0.0);
            res[level] = sol.ledger.rows.back().residual;
        }
        out.push_back(check_le("energy.coupled_residual", res_fine,
                               opt.quick ? 2e-3 : 1e-4,
                               "plate-pulse, dt = T/" + std::to_string(base_steps)));
        out.push_back(check_ge("energy.coupled_residual_order", fit_order(res), 1.55,
                               "residual falls ~4x per dt halving"));
    }
    return out;
}

}  // namespace

double fit_order(const std::vector<double>& errors) {
    // least squares slope of log2(error) against the dyadic level
    const int n = static_cast<int>(errors.size());
    if (n < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double y = std::log2(std::max(errors[i], 1e-300));
        sx += i;
        sy += y;
        sxx += static_cast<double>(i) * i;
        sxy += i * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

OffsetAreaOracle offset_area_oracle(const ReferenceSurface& s,
                                    const std::function<double(double, double)>& eta,
                                    int n1, int n2) {
    OffsetAreaOracle oracle;
    if (s.dim == 2) {
        // offset curve: raw length and nu-projected length
        const double lo = 0.0, hi = s.len1;
        double raw = 0, flux = 0;
        Vec3 prev_y, prev_nu;
        for (int i = 0; i <= n1; ++i) {
            const double a = lo + (hi - lo) * i / n1;
            const SurfaceFrame f = s.frame_at(a, 0.0);
            const Vec3 y = f.X + eta(a, 0.0) * f.nu;
            if (i > 0) {
                const Vec3 d = y - prev_y;
                raw += d.norm();
                const Vec3 ortho(d[1], -d[0], 0.0);  // outward rotation
                flux += ortho.dot(0.5 * (prev_nu + f.nu));
            }
            prev_y = y;
            prev_nu = f.nu;
        }
        oracle.raw_area = raw;
        oracle.flux_area = flux;
        return oracle;
    }
    // vertex grid with duplicated seams (and poles for the sphere)
    const double a_lo = (s.kind == SurfaceKind::Sphere) ? 0.0 : 0.0;
    const double a_hi = (s.kind == SurfaceKind::Sphere) ? kPi : s.len1;
    const double b_hi = s.len2 > 0 ? s.len2 : 2 * kPi;
    std::vector<Vec3> Y((n1 + 1) * (n2 + 1)), NU((n1 + 1) * (n2 + 1));
    for (int i = 0; i <= n1; ++i)
        for (int j = 0; j <= n2; ++j) {
            const double a = a_lo + (a_hi - a_lo) * i / n1;
            const double b = b_hi * j / n2;
            const SurfaceFrame f = s.frame_at(a, b);
            Y[i * (n2 + 1) + j] = f.X + eta(a, b) * f.nu;
            NU[i * (n2 + 1) + j] = f.nu;
        }
    double raw = 0, flux = 0;
    auto tri = [&](int v0, int v1, int v2) {
        const Vec3 cr = 0.5 * (Y[v1] - Y[v0]).cross(Y[v2] - Y[v0]);
        raw += cr.norm();
        const Vec3 nu = (NU[v0] + NU[v1] + NU[v2]) / 3.0;
        flux += std::abs(cr.dot(nu));
    };
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const int v00 = i * (n2 + 1) + j, v01 = v00 + 1;
            const int v10 = (i + 1) * (n2 + 1) + j, v11 = v10 + 1;
            tri(v00, v10, v11);
            tri(v00, v11, v01);
        }
    oracle.raw_area = raw;
    oracle.flux_area = flux;
    return oracle;
}

double offset_volume_oracle(const ReferenceSurface& s, const VecX& eta_nodal) {
    double vol = 0.0;
    for (int i = 0; i < s.node_count(); ++i) {
        const double e = eta_nodal[i];
        switch (s.kind) {
            case SurfaceKind::Sphere: {
                const double R = s.kappa;
                vol += s.w[i] / (R * R) * std::pow(R + e, 3) / 3.0;
                break;
            }
            case SurfaceKind::Circle:
            case SurfaceKind::Cylinder: {
                const double R = s.kappa;
                vol += s.w[i] / R * std::pow(R + e, 2) / 2.0;
                break;
            }
            case SurfaceKind::FlatPatch:
            case SurfaceKind::FlatPatch2d:
                vol += s.w[i] * (s.kappa + e);
                break;
            default:
                throw ArgumentError("offset_volume_oracle: catalog surfaces only");
        }
    }
    return vol;
}

std::vector<CheckResult> verify_suite(const std::string& suite, const VerifyOptions& opt) {
    if (suite == "geometry") return suite_geometry(opt);
    if (suite == "shell") return suite_shell(opt);
    if (suite == "stress") return suite_stress(opt);
    if (suite == "transform") return suite_transform(opt);
    if (suite == "compat") return suite_compat(opt);
    if (suite == "energy") return suite_energy(opt);
    if (suite == "all") {
        std::vector<CheckResult> out;
        for (const char* name : {"geometry", "shell", "stress", "transform", "compat", "energy"}) {
            auto part = verify_suite(name, opt);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    throw ArgumentError("unknown verify suite '" + suite +
                        "' (expected geometry|shell|stress|transform|compat|energy|all)");
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

std::string verify_json(const std::vector<CheckResult>& results) {
    nlohmann::json j;
    j["schema"] = "kfsi-verify-v1";
    j["passed"] = all_passed(results);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
        arr.push_back({{"name", r.name},
                       {"pass", r.pass},
                       {"measured", r.measured},
                       {"threshold", r.threshold},
                       {"cmp", r.cmp},
                       {"detail", r.detail}});
    }
    j["checks"] = arr;
    return j.dump(2) + "\n";
}

}  // namespace kfsi
