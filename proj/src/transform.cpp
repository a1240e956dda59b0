// SPDX-License-Identifier: Apache-2.0
#include "kfsi/transform.hpp"

#include <cmath>

namespace kfsi {

namespace {

void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    // nodes/weights on (0, 1), built from the [-1, 1] rule by Newton iteration
    x.resize(n);
    w.resize(n);
    constexpr double kPi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double p0 = 1.0, p1 = t;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        p0 = 1.0;
        p1 = t;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = 0.5 * (t + 1.0);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    for (int i = 0; i < n / 2; ++i) {
        std::swap(x[i], x[n - 1 - i]);
        std::swap(w[i], w[n - 1 - i]);
    }
}

}  // namespace

double VolumeQuadrature::weight(int k) const {
    const int i = surf_index(k), j = fiber_index(k);
    const double s = s_nodes[j];
    return surface->w[i] * s_weights[j] * gamma_at(*surface, i, s);
}

Vec3 VolumeQuadrature::ref_point(int k) const {
    const int i = surf_index(k), j = fiber_index(k);
    return surface->X[i] + s_nodes[j] * surface->nu[i];
}

double VolumeQuadrature::total_weight() const {
    double acc = 0.0;
    for (int k = 0; k < count(); ++k) acc += weight(k);
    return acc;
}

VolumeQuadrature make_volume_quadrature(const ReferenceSurface& s, int n_fiber,
                                        bool low_order) {
    if (n_fiber < 2) throw ArgumentError("make_volume_quadrature: n_fiber too small");
    VolumeQuadrature q;
    q.surface = &s;
    q.n_fiber = n_fiber;
    q.low_order = low_order;
    q.s_nodes.resize(n_fiber);
    q.s_weights.resize(n_fiber);
    if (low_order) {
        const double h = s.kappa / n_fiber;
        for (int j = 0; j < n_fiber; ++j) {
            q.s_nodes[j] = -s.kappa + (j + 0.5) * h;
            q.s_weights[j] = h;
        }
    } else {
        std::vector<double> x, w;
        gauss_legendre_01(n_fiber, x, w);
        for (int j = 0; j < n_fiber; ++j) {
            q.s_nodes[j] = -s.kappa * (1.0 - x[j]);
            q.s_weights[j] = s.kappa * w[j];
        }
    }
    return q;
}

double DeformedQuadrature::deformed_volume() const {
    double acc = 0.0;
    for (int k = 0; k < quad->count(); ++k) acc += quad->weight(k) * det[k];
    return acc;
}

DeformedQuadrature deform(const VolumeQuadrature& q, const HanzawaMap& map) {
    DeformedQuadrature d;
    d.quad = &q;
    const int n = q.count();
    d.y.resize(n);
    d.jac.resize(n);
    d.det.resize(n);
    for (int k = 0; k < n; ++k) {
        const int i = q.surf_index(k);
        const double s = q.s_nodes[q.fiber_index(k)];
        d.y[k] = map.point(i, s);
        d.jac[k] = map.jacobian(i, s);
        d.det[k] = map.det(i, s);
        if (!(d.det[k] > 0.0))
            throw DegenerationError("deform: nonpositive Jacobian determinant at node " +
                                        std::to_string(k),
                                    kInfinity);
    }
    return d;
}

std::vector<Vec3> pushforward(const DeformedQuadrature& d, const VectorField& phi) {
    std::vector<Vec3> out(d.quad->count());
    for (int k = 0; k < d.quad->count(); ++k)
        out[k] = d.jac[k] * phi(d.quad->ref_point(k)) / d.det[k];
    return out;
}

std::vector<Vec3> pushforward(const DeformedQuadrature& d, const std::vector<Vec3>& phi) {
    std::vector<Vec3> out(d.quad->count());
    for (int k = 0; k < d.quad->count(); ++k) out[k] = d.jac[k] * phi[k] / d.det[k];
    return out;
}

std::vector<Vec3> pullback(const DeformedQuadrature& d, const std::vector<Vec3>& phi_def) {
    std::vector<Vec3> out(d.quad->count());
    for (int k = 0; k < d.quad->count(); ++k)
        out[k] = d.jac[k].inverse() * phi_def[k] * d.det[k];
    return out;
}

Vec3 pushforward_at(const HanzawaMap& map, const VectorField& phi, const Vec3& y) {
    const Vec3 x = map.psi_inverse(y);
    const Mat3 J = map.jacobian_at(x);
    return J * phi(x) / J.determinant();
}

double divergence_sup_fd(const HanzawaMap& map, const VectorField& phi,
                         const std::vector<Vec3>& samples, double fd_step) {
    const int dim = map.surface().dim;
    double sup = 0.0;
    for (const Vec3& y : samples) {
        double div = 0.0;
        for (int c = 0; c < dim; ++c) {
            Vec3 e = Vec3::Zero();
            e[c] = fd_step;
            const double m2 = pushforward_at(map, phi, y - 2 * e)[c];
            const double m1 = pushforward_at(map, phi, y - e)[c];
            const double p1 = pushforward_at(map, phi, y + e)[c];
            const double p2 = pushforward_at(map, phi, y + 2 * e)[c];
            div += (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * fd_step);
        }
        sup = std::max(sup, std::abs(div));
    }
    return sup;
}

double volume_integral(const DeformedQuadrature& d, const ScalarField& f) {
    double acc = 0.0;
    for (int k = 0; k < d.quad->count(); ++k)
        acc += d.quad->weight(k) * d.det[k] * f(d.y[k]);
    return acc;
}

double surface_integral(const ReferenceSurface& s, const Displacement& eta,
                        const VecX& b_nodal) {
    const VecX gamma = gamma_factor(s, eta);
    double acc = 0.0;
    for (int i = 0; i < s.node_count(); ++i) acc += s.w[i] * gamma[i] * b_nodal[i];
    return acc;
}

double divergence_theorem_check(const ReferenceSurface& s, const Displacement& eta,
                                const DivThmFixture& fixture, int n_fiber,
                                bool low_order, BlendProfile blend) {
    const VolumeQuadrature q = make_volume_quadrature(s, n_fiber, low_order);
    const HanzawaMap map(s, eta, blend);
    const DeformedQuadrature d = deform(q, map);
    double lhs = 0.0, rhs_vol = 0.0;
    for (int k = 0; k < q.count(); ++k) {
        const double wk = q.weight(k) * d.det[k];
        lhs += wk * fixture.phi(d.y[k]).dot(fixture.grad_psi(d.y[k]));
        rhs_vol -= wk * fixture.div_phi(d.y[k]) * fixture.psi(d.y[k]);
    }
    const VecX gamma = gamma_factor(s, eta);
    double rhs_surf = 0.0;
    for (int i = 0; i < s.node_count(); ++i) {
        const Vec3 yq = s.X[i] + eta.values[i] * s.nu[i];
        rhs_surf += s.w[i] * gamma[i] * fixture.b[i] * fixture.psi(yq);
    }
    return std::abs(lhs - (rhs_vol + rhs_surf));
}

double reynolds_check(const ReferenceSurface& s, int n_fiber,
                      const ReynoldsFixture& fixture, double t, double dt) {
    const VolumeQuadrature q = make_volume_quadrature(s, n_fiber);
    auto vol = [&](double tt) {
        const Displacement eta = fixture.eta_of_t(tt);
        const HanzawaMap map(s, eta);
        const DeformedQuadrature d = deform(q, map);
        return volume_integral(d, [&](const Vec3& y) { return fixture.xi(tt, y); });
    };
    const double dV = (vol(t + dt) - vol(t - dt)) / (2.0 * dt);

    const Displacement eta = fixture.eta_of_t(t);
    const HanzawaMap map(s, eta);
    const DeformedQuadrature d = deform(q, map);
    const double bulk = volume_integral(d, [&](const Vec3& y) { return fixture.xi_t(t, y); });
    const VecX rate = fixture.eta_rate_nodal(t);
    const VecX gamma = gamma_factor(s, eta);
    double flux = 0.0;
    for (int i = 0; i < s.node_count(); ++i) {
        const Vec3 yq = s.X[i] + eta.values[i] * s.nu[i];
        flux += s.w[i] * gamma[i] * rate[i] * fixture.xi(t, yq);
    }
    return std::abs(dV - bulk - flux);
}

}  // namespace kfsi
