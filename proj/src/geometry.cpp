// SPDX-License-Identifier: Apache-2.0
#include "kfsi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kfsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double p0 = 0.0, p1 = 0.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        p0 = 1.0;
        p1 = t;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    // ascending order
    for (int i = 0; i < n / 2; ++i) {
        std::swap(x[i], x[n - 1 - i]);
        std::swap(w[i], w[n - 1 - i]);
    }
}

void fill_curvature_scalars(ReferenceSurface& s) {
    const int n = s.node_count();
    s.H.resize(n);
    s.G.resize(n);
    s.kform.resize(n);
    for (int i = 0; i < n; ++i) {
        const Sym2 gi = s.g_inv(i);
        const Sym2& h = s.h[i];
        // mixed tensor (g^-1 h)^a_b
        const double m11 = gi[0] * h[0] + gi[1] * h[1];
        const double m12 = gi[0] * h[1] + gi[1] * h[2];
        const double m21 = gi[1] * h[0] + gi[2] * h[1];
        const double m22 = gi[1] * h[1] + gi[2] * h[2];
        s.H[i] = 0.5 * (m11 + m22);
        s.G[i] = (s.dim == 2) ? 0.0 : m11 * m22 - m12 * m21;
        // k_ab = h_ac g^cd h_db
        s.kform[i] = {h[0] * m11 + h[1] * m21, h[0] * m12 + h[1] * m22,
                      h[1] * m12 + h[2] * m22};
    }
}

void fill_volume_by_fibers(ReferenceSurface& s) {
    double vol = 0.0;
    for (int i = 0; i < s.node_count(); ++i) {
        const double k = s.kappa;
        vol += s.w[i] * (k + s.H[i] * k * k + s.G[i] * k * k * k / 3.0);
    }
    s.volume = vol;
}

double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
double smoothstep_d(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}
double smoothstep_i(double x) {  // integral of smoothstep from 0 to x
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * x * (2.5 + x * (-3.0 + x));
}

}  // namespace

Sym2 ReferenceSurface::g_inv(int node) const {
    const Sym2& m = g[node];
    const double det = m[0] * m[2] - m[1] * m[1];
    return {m[2] / det, -m[1] / det, m[0] / det};
}

double ReferenceSurface::sqrt_det_g(int node) const {
    const Sym2& m = g[node];
    return std::sqrt(m[0] * m[2] - m[1] * m[1]);
}

SurfaceFrame ReferenceSurface::frame_at(double a, double b) const {
    SurfaceFrame f;
    switch (kind) {
        case SurfaceKind::FlatPatch: {
            const double height = X.empty() ? 0.0 : X[0][2];
            f.X = Vec3(a, b, height);
            f.nu = Vec3(0, 0, 1);
            f.e1 = Vec3(1, 0, 0);
            f.e2 = Vec3(0, 1, 0);
            f.dnu1 = f.dnu2 = Vec3::Zero();
            return f;
        }
        case SurfaceKind::FlatPatch2d: {
            const double height = X.empty() ? 0.0 : X[0][1];
            f.X = Vec3(a, height, 0);
            f.nu = Vec3(0, 1, 0);
            f.e1 = Vec3(1, 0, 0);
            f.e2 = Vec3(0, 0, 1);
            f.dnu1 = f.dnu2 = Vec3::Zero();
            return f;
        }
        case SurfaceKind::Sphere: {
            const double R = kappa;
            const double st = std::sin(a), ct = std::cos(a);
            const double sp = std::sin(b), cp = std::cos(b);
            f.X = R * Vec3(st * cp, st * sp, ct);
            f.nu = f.X / R;
            f.e1 = R * Vec3(ct * cp, ct * sp, -st);
            f.e2 = R * Vec3(-st * sp, st * cp, 0);
            f.dnu1 = f.e1 / R;
            f.dnu2 = f.e2 / R;
            f.H = -1.0 / R;
            f.G = 1.0 / (R * R);
            return f;
        }
        case SurfaceKind::Circle: {
            const double R = kappa;
            f.X = R * Vec3(std::cos(a), std::sin(a), 0);
            f.nu = f.X / R;
            f.e1 = R * Vec3(-std::sin(a), std::cos(a), 0);
            f.e2 = Vec3(0, 0, 1);
            f.dnu1 = f.e1 / R;
            f.dnu2 = Vec3::Zero();
            f.H = -0.5 / R;
            f.G = 0.0;
            return f;
        }
        case SurfaceKind::Cylinder: {
            const double R = kappa;
            f.X = Vec3(R * std::cos(a), R * std::sin(a), b);
            f.nu = Vec3(std::cos(a), std::sin(a), 0);
            f.e1 = R * Vec3(-std::sin(a), std::cos(a), 0);
            f.e2 = Vec3(0, 0, 1);
            f.dnu1 = f.e1 / R;
            f.dnu2 = Vec3::Zero();
            f.H = -0.5 / R;
            f.G = 0.0;
            return f;
        }
        default:
            throw GeometryError("frame_at: analytic chart unavailable for user grids");
    }
}

void ReferenceSurface::chart_from_point(const Vec3& y, double& a, double& b,
                                        double& s) const {
    switch (kind) {
        case SurfaceKind::FlatPatch: {
            const double height = X[0][2];
            a = y[0];
            b = y[1];
            s = y[2] - height;
            return;
        }
        case SurfaceKind::FlatPatch2d: {
            const double height = X[0][1];
            a = y[0];
            b = 0.0;
            s = y[1] - height;
            return;
        }
        case SurfaceKind::Sphere: {
            const double r = y.norm();
            a = std::acos(std::clamp(y[2] / r, -1.0, 1.0));
            b = std::atan2(y[1], y[0]);
            s = r - kappa;
            return;
        }
        case SurfaceKind::Circle: {
            const double r = std::hypot(y[0], y[1]);
            a = std::atan2(y[1], y[0]);
            b = 0.0;
            s = r - kappa;
            return;
        }
        case SurfaceKind::Cylinder: {
            const double r = std::hypot(y[0], y[1]);
            a = std::atan2(y[1], y[0]);
            b = y[2];
            s = r - kappa;
            return;
        }
        default:
            throw GeometryError("chart_from_point: unavailable for user grids");
    }
}

ReferenceSurface make_flat_patch(double Lx, double Ly, double height, int n1, int n2) {
    if (Lx <= 0 || Ly <= 0 || height <= 0 || n1 < 2 || n2 < 2)
        throw GeometryError("make_flat_patch: invalid parameters");
    ReferenceSurface s;
    s.dim = 3;
    s.kind = SurfaceKind::FlatPatch;
    s.n1 = n1;
    s.n2 = n2;
    s.len1 = Lx;
    s.len2 = Ly;
    s.kappa = height;
    s.u1.resize(n1);
    s.u2.resize(n2);
    for (int i = 0; i < n1; ++i) s.u1[i] = Lx * i / n1;
    for (int j = 0; j < n2; ++j) s.u2[j] = Ly * j / n2;
    const int n = n1 * n2;
    s.X.resize(n);
    s.nu.assign(n, Vec3(0, 0, 1));
    s.e1.assign(n, Vec3(1, 0, 0));
    s.e2.assign(n, Vec3(0, 1, 0));
    s.dnu1.assign(n, Vec3::Zero());
    s.dnu2.assign(n, Vec3::Zero());
    s.g.assign(n, Sym2{1, 0, 1});
    s.h.assign(n, Sym2{0, 0, 0});
    s.christoffel.assign(n, {0, 0, 0, 0, 0, 0});
    s.w.assign(n, Lx * Ly / n);
    s.clamped.assign(n, 0);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            s.X[s.idx(i, j)] = Vec3(s.u1[i], s.u2[j], height);
    fill_curvature_scalars(s);
    s.measure = Lx * Ly;
    fill_volume_by_fibers(s);
    return s;
}

ReferenceSurface make_flat_patch_2d(double Lx, double height, int n1) {
    if (Lx <= 0 || height <= 0 || n1 < 2)
        throw GeometryError("make_flat_patch_2d: invalid parameters");
    ReferenceSurface s;
    s.dim = 2;
    s.kind = SurfaceKind::FlatPatch2d;
    s.n1 = n1;
    s.n2 = 1;
    s.len1 = Lx;
    s.len2 = 0;
    s.periodic2 = false;
    s.kappa = height;
    s.u1.resize(n1);
    s.u2 = {0.0};
    for (int i = 0; i < n1; ++i) s.u1[i] = Lx * i / n1;
    s.X.resize(n1);
    s.nu.assign(n1, Vec3(0, 1, 0));
    s.e1.assign(n1, Vec3(1, 0, 0));
    s.e2.assign(n1, Vec3(0, 0, 1));
    s.dnu1.assign(n1, Vec3::Zero());
    s.dnu2.assign(n1, Vec3::Zero());
    s.g.assign(n1, Sym2{1, 0, 1});
    s.h.assign(n1, Sym2{0, 0, 0});
    s.christoffel.assign(n1, {0, 0, 0, 0, 0, 0});
    s.w.assign(n1, Lx / n1);
    s.clamped.assign(n1, 0);
    for (int i = 0; i < n1; ++i) s.X[i] = Vec3(s.u1[i], height, 0);
    fill_curvature_scalars(s);
    s.measure = Lx;
    fill_volume_by_fibers(s);
    return s;
}

ReferenceSurface make_sphere(double radius, int n_theta, int n_phi, double cap_angle) {
    if (radius <= 0 || n_theta < 2 || n_phi < 4)
        throw GeometryError("make_sphere: invalid parameters");
    ReferenceSurface s;
    s.dim = 3;
    s.kind = SurfaceKind::Sphere;
    s.n1 = n_theta;
    s.n2 = n_phi;
    s.periodic1 = false;
    s.len1 = kPi;
    s.len2 = 2 * kPi;
    s.kappa = radius;
    std::vector<double> gl_x, gl_w;
    gauss_legendre(n_theta, gl_x, gl_w);
    s.u1.resize(n_theta);
    for (int i = 0; i < n_theta; ++i) s.u1[i] = std::acos(-gl_x[i]);  // ascending theta
    s.u2.resize(n_phi);
    for (int j = 0; j < n_phi; ++j) s.u2[j] = 2 * kPi * j / n_phi;
    const int n = n_theta * n_phi;
    s.X.resize(n);
    s.nu.resize(n);
    s.e1.resize(n);
    s.e2.resize(n);
    s.dnu1.resize(n);
    s.dnu2.resize(n);
    s.g.resize(n);
    s.h.resize(n);
    s.christoffel.resize(n);
    s.w.resize(n);
    s.clamped.resize(n);
    for (int i = 0; i < n_theta; ++i) {
        const double th = s.u1[i];
        const double st = std::sin(th), ct = std::cos(th);
        for (int j = 0; j < n_phi; ++j) {
            const int id = s.idx(i, j);
            const SurfaceFrame f = s.frame_at(th, s.u2[j]);
            s.X[id] = f.X;
            s.nu[id] = f.nu;
            s.e1[id] = f.e1;
            s.e2[id] = f.e2;
            s.dnu1[id] = f.dnu1;
            s.dnu2[id] = f.dnu2;
            const double R = radius;
            s.g[id] = {R * R, 0, R * R * st * st};
            s.h[id] = {-R, 0, -R * st * st};
            s.christoffel[id] = {0, 0, -st * ct, 0, ct / st, 0};
            s.w[id] = R * R * gl_w[i] * (2 * kPi / n_phi);
            s.clamped[id] = (th < cap_angle) ? 1 : 0;
        }
    }
    fill_curvature_scalars(s);
    s.measure = std::accumulate(s.w.begin(), s.w.end(), 0.0);
    fill_volume_by_fibers(s);
    return s;
}

ReferenceSurface make_circle(double radius, int n) {
    if (radius <= 0 || n < 4) throw GeometryError("make_circle: invalid parameters");
    ReferenceSurface s;
    s.dim = 2;
    s.kind = SurfaceKind::Circle;
    s.n1 = n;
    s.n2 = 1;
    s.len1 = 2 * kPi;
    s.periodic2 = false;
    s.kappa = radius;
    s.u1.resize(n);
    s.u2 = {0.0};
    for (int i = 0; i < n; ++i) s.u1[i] = 2 * kPi * i / n;
    s.X.resize(n);
    s.nu.resize(n);
    s.e1.resize(n);
    s.e2.resize(n);
    s.dnu1.resize(n);
    s.dnu2.resize(n);
    s.g.assign(n, Sym2{radius * radius, 0, 1});
    s.h.assign(n, Sym2{-radius, 0, 0});
    s.christoffel.assign(n, {0, 0, 0, 0, 0, 0});
    s.w.assign(n, radius * 2 * kPi / n);
    s.clamped.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        const SurfaceFrame f = s.frame_at(s.u1[i], 0.0);
        s.X[i] = f.X;
        s.nu[i] = f.nu;
        s.e1[i] = f.e1;
        s.e2[i] = f.e2;
        s.dnu1[i] = f.dnu1;
        s.dnu2[i] = f.dnu2;
    }
    fill_curvature_scalars(s);
    s.measure = 2 * kPi * radius;
    fill_volume_by_fibers(s);
    return s;
}

ReferenceSurface make_cylinder(double radius, double length, int n_theta, int n_z) {
    if (radius <= 0 || length <= 0 || n_theta < 4 || n_z < 2)
        throw GeometryError("make_cylinder: invalid parameters");
    ReferenceSurface s;
    s.dim = 3;
    s.kind = SurfaceKind::Cylinder;
    s.n1 = n_theta;
    s.n2 = n_z;
    s.len1 = 2 * kPi;
    s.len2 = length;
    s.kappa = radius;
    s.u1.resize(n_theta);
    s.u2.resize(n_z);
    for (int i = 0; i < n_theta; ++i) s.u1[i] = 2 * kPi * i / n_theta;
    for (int j = 0; j < n_z; ++j) s.u2[j] = length * j / n_z;
    const int n = n_theta * n_z;
    s.X.resize(n);
    s.nu.resize(n);
    s.e1.resize(n);
    s.e2.resize(n);
    s.dnu1.resize(n);
    s.dnu2.resize(n);
    s.g.assign(n, Sym2{radius * radius, 0, 1});
    s.h.assign(n, Sym2{-radius, 0, 0});
    s.christoffel.assign(n, {0, 0, 0, 0, 0, 0});
    s.w.assign(n, radius * (2 * kPi / n_theta) * (length / n_z));
    s.clamped.assign(n, 0);
    for (int i = 0; i < n_theta; ++i)
        for (int j = 0; j < n_z; ++j) {
            const int id = s.idx(i, j);
            const SurfaceFrame f = s.frame_at(s.u1[i], s.u2[j]);
            s.X[id] = f.X;
            s.nu[id] = f.nu;
            s.e1[id] = f.e1;
            s.e2[id] = f.e2;
            s.dnu1[id] = f.dnu1;
            s.dnu2[id] = f.dnu2;
        }
    fill_curvature_scalars(s);
    s.measure = 2 * kPi * radius * length;
    fill_volume_by_fibers(s);
    return s;
}

namespace {

// 4th-order central difference stencils on a periodic axis.
Vec3 cdiff(const std::vector<Vec3>& v, int i, int n, double h) {
    auto at = [&](int k) { return v[((k % n) + n) % n]; };
    return (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
}
Vec3 cdiff2(const std::vector<Vec3>& v, int i, int n, double h) {
    auto at = [&](int k) { return v[((k % n) + n) % n]; };
    return (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) -
            at(i + 2)) /
           (12.0 * h * h);
}

}  // namespace

ReferenceSurface make_user_grid(int dim, int n1, int n2, std::vector<Vec3> samples,
                                double len1, double len2) {
    if ((dim != 2 && dim != 3) || n1 < 5 || (dim == 3 && n2 < 5) ||
        static_cast<int>(samples.size()) != n1 * std::max(n2, 1))
        throw GeometryError("make_user_grid: invalid grid");
    ReferenceSurface s;
    s.dim = dim;
    s.kind = SurfaceKind::UserGrid;
    s.n1 = n1;
    s.n2 = (dim == 3) ? n2 : 1;
    s.len1 = len1;
    s.len2 = (dim == 3) ? len2 : 0.0;
    s.periodic2 = (dim == 3);
    s.u1.resize(s.n1);
    for (int i = 0; i < s.n1; ++i) s.u1[i] = len1 * i / s.n1;
    s.u2.resize(s.n2);
    for (int j = 0; j < s.n2; ++j) s.u2[j] = (dim == 3) ? len2 * j / s.n2 : 0.0;
    s.X = std::move(samples);
    const int n = s.node_count();
    const double h1 = len1 / s.n1;
    const double h2 = (dim == 3) ? len2 / s.n2 : 1.0;
    s.nu.resize(n);
    s.e1.resize(n);
    s.e2.resize(n);
    s.dnu1.resize(n);
    s.dnu2.resize(n);
    s.g.resize(n);
    s.h.resize(n);
    s.christoffel.resize(n);
    s.w.resize(n);
    s.clamped.assign(n, 0);

    // derivatives along axis 1 (rows of fixed j) and axis 2
    std::vector<Vec3> row(s.n1), col(s.n2);
    std::vector<Vec3> d1(n), d2(n, Vec3(0, 0, 1)), d11(n), d22(n, Vec3::Zero()),
        d12(n, Vec3::Zero());
    for (int j = 0; j < s.n2; ++j) {
        for (int i = 0; i < s.n1; ++i) row[i] = s.X[s.idx(i, j)];
        for (int i = 0; i < s.n1; ++i) {
            d1[s.idx(i, j)] = cdiff(row, i, s.n1, h1);
            d11[s.idx(i, j)] = cdiff2(row, i, s.n1, h1);
        }
    }
    if (dim == 3) {
        for (int i = 0; i < s.n1; ++i) {
            for (int j = 0; j < s.n2; ++j) col[j] = s.X[s.idx(i, j)];
            for (int j = 0; j < s.n2; ++j) {
                d2[s.idx(i, j)] = cdiff(col, j, s.n2, h2);
                d22[s.idx(i, j)] = cdiff2(col, j, s.n2, h2);
            }
        }
        // mixed derivative: difference of d1 along axis 2
        for (int i = 0; i < s.n1; ++i) {
            for (int j = 0; j < s.n2; ++j) col[j] = d1[s.idx(i, j)];
            for (int j = 0; j < s.n2; ++j) d12[s.idx(i, j)] = cdiff(col, j, s.n2, h2);
        }
    }
    for (int id = 0; id < n; ++id) {
        s.e1[id] = d1[id];
        s.e2[id] = d2[id];
        Vec3 normal;
        if (dim == 3) {
            normal = d1[id].cross(d2[id]);
        } else {
            normal = Vec3(d1[id][1], -d1[id][0], 0.0);  // right-handed in-plane
        }
        const double nn = normal.norm();
        if (nn < 1e-14) throw GeometryError("make_user_grid: degenerate tangent frame");
        s.nu[id] = normal / nn;
        s.g[id] = {d1[id].dot(d1[id]), d1[id].dot(d2[id]), d2[id].dot(d2[id])};
        if (dim == 2) s.g[id] = {d1[id].dot(d1[id]), 0.0, 1.0};
        s.h[id] = {d11[id].dot(s.nu[id]), d12[id].dot(s.nu[id]), d22[id].dot(s.nu[id])};
        if (dim == 2) s.h[id][1] = s.h[id][2] = 0.0;
        const Sym2 gi = s.g_inv(id);
        auto gamma_c = [&](const Vec3& dd, int c) {
            const double p1 = dd.dot(d1[id]);
            const double p2 = dd.dot(d2[id]);
            return (c == 0) ? gi[0] * p1 + gi[1] * p2 : gi[1] * p1 + gi[2] * p2;
        };
        s.christoffel[id] = {gamma_c(d11[id], 0), gamma_c(d12[id], 0),
                             gamma_c(d22[id], 0), gamma_c(d11[id], 1),
                             gamma_c(d12[id], 1), gamma_c(d22[id], 1)};
        s.w[id] = s.sqrt_det_g(id) * h1 * h2;
    }
    // normal derivatives by differencing the normal field
    std::vector<Vec3> nrow(s.n1), ncol(s.n2);
    for (int j = 0; j < s.n2; ++j) {
        for (int i = 0; i < s.n1; ++i) nrow[i] = s.nu[s.idx(i, j)];
        for (int i = 0; i < s.n1; ++i) s.dnu1[s.idx(i, j)] = cdiff(nrow, i, s.n1, h1);
    }
    if (dim == 3) {
        for (int i = 0; i < s.n1; ++i) {
            for (int j = 0; j < s.n2; ++j) ncol[j] = s.nu[s.idx(i, j)];
            for (int j = 0; j < s.n2; ++j) s.dnu2[s.idx(i, j)] = cdiff(ncol, j, s.n2, h2);
        }
    } else {
        for (int id = 0; id < n; ++id) s.dnu2[id] = Vec3::Zero();
    }
    fill_curvature_scalars(s);
    s.measure = std::accumulate(s.w.begin(), s.w.end(), 0.0);
    s.kappa = tubular_radius(s);
    fill_volume_by_fibers(s);
    return s;
}

Displacement Displacement::zero(const ReferenceSurface& s) {
    return constant(s, 0.0);
}

Displacement Displacement::constant(const ReferenceSurface& s, double c) {
    Displacement d;
    const int n = s.node_count();
    d.values = VecX::Constant(n, c);
    d.grad = MatX::Zero(n, 2);
    d.hess = MatX::Zero(n, 3);
    d.value_at = [c](double, double) { return c; };
    d.grad_at = [](double, double) { return Vec2::Zero(); };
    return d;
}

Displacement Displacement::analytic(const ReferenceSurface& s,
                                    const std::function<double(double, double)>& f,
                                    const std::function<Vec2(double, double)>& df,
                                    const std::function<Vec3(double, double)>& d2f) {
    Displacement d;
    const int n = s.node_count();
    d.values.resize(n);
    d.grad.resize(n, 2);
    d.hess.resize(n, 3);
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j) {
            const int id = s.idx(i, j);
            const double a = s.u1[i], b = s.u2[j];
            d.values[id] = f(a, b);
            d.grad.row(id) = df(a, b).transpose();
            d.hess.row(id) = d2f(a, b).transpose();
        }
    d.value_at = f;
    d.grad_at = df;
    return d;
}

double tubular_radius(const ReferenceSurface& s) {
    if (s.kind != SurfaceKind::UserGrid) return s.kappa;

    // curvature bound: 1 / max |principal curvature|
    double max_pc = 0.0;
    for (int i = 0; i < s.node_count(); ++i) {
        const double Hh = s.H[i], Gg = s.G[i];
        const double disc = std::max(Hh * Hh - Gg, 0.0);
        const double r = std::sqrt(disc);
        max_pc = std::max({max_pc, std::abs(Hh + r), std::abs(Hh - r)});
    }
    double kappa_curv = (max_pc > 0.0) ? 1.0 / max_pc : kInfinity;

    // ray bound: half the minimal inward-ray self-intersection distance,
    // estimated on a node subsample
    const int n = s.node_count();
    const int target = 1600;
    const int stride = std::max(1, n / target);
    std::vector<int> ids;
    for (int i = 0; i < n; i += stride) ids.push_back(i);
    const double scale = std::sqrt(s.measure);
    const double h_loc = std::sqrt(s.measure / n) * 2.0;
    double kappa_ray = kInfinity;
    for (size_t ii = 0; ii < ids.size(); ++ii) {
        for (size_t jj = ii + 1; jj < ids.size(); ++jj) {
            const Vec3 w0 = s.X[ids[ii]] - s.X[ids[jj]];
            if (w0.norm() < 1e-13 * scale)
                throw GeometryError("tubular_radius: repeated nodes in grid");
            const Vec3 di = -s.nu[ids[ii]], dj = -s.nu[ids[jj]];
            const double b = di.dot(dj);
            const double denom = 1.0 - b * b;
            if (denom < 1e-9) continue;
            const double d_ = di.dot(w0), e_ = dj.dot(w0);
            const double ti = (b * e_ - d_) / denom;
            const double tj = (e_ - b * d_) / denom;
            if (ti < h_loc || tj < h_loc) continue;
            const double gap = (w0 + ti * di - tj * dj).norm();
            if (gap > 0.5 * h_loc) continue;
            kappa_ray = std::min(kappa_ray, 0.5 * (ti + tj));
        }
    }
    return std::min(kappa_curv, kappa_ray);
}

double tau(double sup_norm, double kappa) {
    if (sup_norm < kappa) return 1.0 / (1.0 - sup_norm / kappa);
    return kInfinity;
}

double tau(const Displacement& eta, double kappa) {
    return tau(eta.sup_norm(), kappa);
}

double gamma_at(const ReferenceSurface& s, int node, double eta_value) {
    return 1.0 - 2.0 * s.H[node] * eta_value + s.G[node] * eta_value * eta_value;
}

VecX gamma_factor(const ReferenceSurface& s, const Displacement& eta) {
    const double sup = eta.sup_norm();
    if (sup >= s.kappa)
        throw DegenerationError(
            "gamma_factor: |eta|_inf = " + std::to_string(sup) +
                " leaves the tubular neighbourhood (kappa = " + std::to_string(s.kappa) + ")",
            kInfinity);
    VecX gamma(s.node_count());
    for (int i = 0; i < s.node_count(); ++i) gamma[i] = gamma_at(s, i, eta.values[i]);
    return gamma;
}

double BlendProfile::beta(double t) const {
    if (t <= -1.0) return 0.0;
    if (t >= 0.0) return 1.0;
    const double A = slope_sup();
    if (t <= -1.0 + ramp) return A * ramp * smoothstep_i((t + 1.0) / ramp);
    if (t <= -tail) return A * (t + 1.0 - 0.5 * ramp);
    return 1.0 - A * tail * smoothstep_i(-t / tail);
}

double BlendProfile::beta_d(double t) const {
    if (t <= -1.0 || t >= 0.0) return 0.0;
    const double A = slope_sup();
    if (t <= -1.0 + ramp) return A * smoothstep((t + 1.0) / ramp);
    if (t <= -tail) return A;
    return A * smoothstep(-t / tail);
}

double BlendProfile::beta_dd(double t) const {
    if (t <= -1.0 || t >= 0.0) return 0.0;
    const double A = slope_sup();
    if (t <= -1.0 + ramp) return A * smoothstep_d((t + 1.0) / ramp) / ramp;
    if (t <= -tail) return 0.0;
    return -A * smoothstep_d(-t / tail) / tail;
}

HanzawaMap::HanzawaMap(const ReferenceSurface& s, const Displacement& eta,
                       BlendProfile profile)
    : surf_(&s), eta_(eta), blend_(profile) {
    const double bound = s.kappa * blend_.admissible_fraction();
    int worst = 0;
    double sup = 0.0;
    for (int i = 0; i < eta_.values.size(); ++i) {
        const double v = std::abs(eta_.values[i]);
        if (v > sup) {
            sup = v;
            worst = i;
        }
    }
    if (sup >= bound) {
        throw DegenerationError(
            "hanzawa_map: injectivity bound violated at node " + std::to_string(worst) +
                ": |eta| = " + std::to_string(sup) + " >= " + std::to_string(bound) +
                " (margin " + std::to_string(1.0 - sup / bound) + ")",
            tau(sup, s.kappa));
    }
}

HanzawaMap::ChartData HanzawaMap::chart(double eta_v, double s) const {
    const double k = surf_->kappa;
    const double t = s / k;
    ChartData c;
    c.beta = blend_.beta(t);
    c.beta_d = blend_.beta_d(t);
    c.sigma = s + eta_v * c.beta;
    c.sigma_s = 1.0 + eta_v * c.beta_d / k;
    return c;
}

double HanzawaMap::sigma(int node, double s) const {
    return chart(eta_.values[node], s).sigma;
}

double HanzawaMap::dsigma_ds(int node, double s) const {
    return chart(eta_.values[node], s).sigma_s;
}

Vec3 HanzawaMap::ref_point(int node, double s) const {
    return surf_->X[node] + s * surf_->nu[node];
}

Vec3 HanzawaMap::point(int node, double s) const {
    return surf_->X[node] + chart(eta_.values[node], s).sigma * surf_->nu[node];
}

Mat3 HanzawaMap::jacobian_impl(const SurfaceFrame& f, double eta_v, const Vec2& eta_g,
                               double s) const {
    const ChartData c = chart(eta_v, s);
    Mat3 A, B;
    A.col(0) = f.e1 + s * f.dnu1;
    A.col(1) = f.e2 + s * f.dnu2;
    A.col(2) = f.nu;
    B.col(0) = f.e1 + c.sigma * f.dnu1 + c.beta * eta_g[0] * f.nu;
    B.col(1) = f.e2 + c.sigma * f.dnu2 + c.beta * eta_g[1] * f.nu;
    B.col(2) = c.sigma_s * f.nu;
    return B * A.inverse();
}

Mat3 HanzawaMap::jacobian(int node, double s) const {
    SurfaceFrame f;
    f.X = surf_->X[node];
    f.nu = surf_->nu[node];
    f.e1 = surf_->e1[node];
    f.e2 = surf_->e2[node];
    f.dnu1 = surf_->dnu1[node];
    f.dnu2 = surf_->dnu2[node];
    return jacobian_impl(f, eta_.values[node], eta_.grad.row(node).transpose(), s);
}

double HanzawaMap::det(int node, double s) const {
    // det dLambda at offset v carries the factor 1 - 2Hv + Gv^2, the same
    // quadratic as gamma evaluated at v.
    const ChartData c = chart(eta_.values[node], s);
    return c.sigma_s * gamma_at(*surf_, node, c.sigma) / gamma_at(*surf_, node, s);
}

Vec3 HanzawaMap::psi(const Vec3& x) const {
    if (!eta_.value_at) throw GeometryError("hanzawa psi: displacement lacks closures");
    double a, b, s;
    surf_->chart_from_point(x, a, b, s);
    const SurfaceFrame f = surf_->frame_at(a, b);
    const ChartData c = chart(eta_.value_at(a, b), s);
    return f.X + c.sigma * f.nu;
}

Vec3 HanzawaMap::psi_inverse(const Vec3& y) const {
    if (!eta_.value_at) throw GeometryError("hanzawa psi_inverse: displacement lacks closures");
    double a, b, sig;
    surf_->chart_from_point(y, a, b, sig);
    const double ev = eta_.value_at(a, b);
    double s = std::min(sig, 0.0);
    for (int it = 0; it < 60; ++it) {
        const ChartData c = chart(ev, s);
        const double r = c.sigma - sig;
        if (std::abs(r) < 1e-14 * surf_->kappa) break;
        s -= r / c.sigma_s;
        s = std::clamp(s, -surf_->kappa, 0.0);
    }
    const SurfaceFrame f = surf_->frame_at(a, b);
    return f.X + s * f.nu;
}

Mat3 HanzawaMap::jacobian_at(const Vec3& x) const {
    if (!eta_.value_at || !eta_.grad_at)
        throw GeometryError("hanzawa jacobian_at: displacement lacks closures");
    double a, b, s;
    surf_->chart_from_point(x, a, b, s);
    return jacobian_impl(surf_->frame_at(a, b), eta_.value_at(a, b), eta_.grad_at(a, b), s);
}

double HanzawaMap::det_at(const Vec3& x) const {
    return jacobian_at(x).determinant();
}

Vec3 HanzawaMap::point_velocity(int node, double s, double eta_rate_value) const {
    const double t = s / surf_->kappa;
    return blend_.beta(t) * eta_rate_value * surf_->nu[node];
}

BoundaryMap boundary_map(const ReferenceSurface& s, const Displacement& eta) {
    const double sup = eta.sup_norm();
    if (sup >= s.kappa)
        throw DegenerationError("boundary_map: |eta|_inf >= kappa", kInfinity);
    BoundaryMap m;
    const int n = s.node_count();
    m.image.resize(n);
    m.tangent.resize(n);
    for (int i = 0; i < n; ++i) {
        const double ev = eta.values[i];
        m.image[i] = s.X[i] + ev * s.nu[i];
        Mat3 t;
        t.col(0) = s.e1[i] + ev * s.dnu1[i] + eta.grad(i, 0) * s.nu[i];
        t.col(1) = s.e2[i] + ev * s.dnu2[i] + eta.grad(i, 1) * s.nu[i];
        t.col(2) = s.nu[i];
        m.tangent[i] = t;
    }
    return m;
}

}  // namespace kfsi
