// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kfsi/geometry.hpp"
#include "kfsi/types.hpp"

namespace kfsi {

// Quadrature of the reference domain in normal-fiber coordinates (q, s):
// tensor product of the surface rule with a 1-D rule on (-kappa, 0) and the
// analytic |det dLambda| = 1 - 2Hs + Gs^2 weight. Catalog fibers cover the
// whole domain, so no separate core grid is needed.
struct VolumeQuadrature {
    const ReferenceSurface* surface = nullptr;
    int n_fiber = 0;
    bool low_order = false;               // composite midpoint instead of Gauss
    std::vector<double> s_nodes, s_weights;

    int count() const { return surface->node_count() * n_fiber; }
    int surf_index(int k) const { return k / n_fiber; }
    int fiber_index(int k) const { return k % n_fiber; }
    // reference weight including the fiber measure factor
    double weight(int k) const;
    Vec3 ref_point(int k) const;
    double total_weight() const;  // == |Omega| up to quadrature error
};

VolumeQuadrature make_volume_quadrature(const ReferenceSurface& s, int n_fiber,
                                        bool low_order = false);

// Hanzawa data cached on the quadrature nodes for one displacement.
struct DeformedQuadrature {
    const VolumeQuadrature* quad = nullptr;
    std::vector<Vec3> y;      // deformed points Psi(x_k)
    std::vector<Mat3> jac;    // dPsi
    std::vector<double> det;  // det dPsi (> 0)
    double deformed_volume() const;
};

DeformedQuadrature deform(const VolumeQuadrature& q, const HanzawaMap& map);

using VectorField = std::function<Vec3(const Vec3&)>;
using ScalarField = std::function<double(const Vec3&)>;

// Divergence-preserving pushforward (dPsi (det dPsi)^-1 phi) o Psi^-1 and its
// inverse, evaluated on the cached quadrature nodes.
std::vector<Vec3> pushforward(const DeformedQuadrature& d, const VectorField& phi);
std::vector<Vec3> pushforward(const DeformedQuadrature& d, const std::vector<Vec3>& phi);
std::vector<Vec3> pullback(const DeformedQuadrature& d, const std::vector<Vec3>& phi_deformed);

// Pointwise pushforward at an arbitrary point of the deformed domain
// (catalog surfaces with analytic displacements only).
Vec3 pushforward_at(const HanzawaMap& map, const VectorField& phi, const Vec3& y);

// Independent finite-difference oracle for the divergence of the transported
// field: 4th-order central differences in the ambient coordinates, sup over
// the given sample points (must keep a stencil margin inside the domain).
double divergence_sup_fd(const HanzawaMap& map, const VectorField& phi,
                         const std::vector<Vec3>& samples, double fd_step);

double volume_integral(const DeformedQuadrature& d, const ScalarField& f);
double surface_integral(const ReferenceSurface& s, const Displacement& eta,
                        const VecX& b_nodal);

struct DivThmFixture {
    VectorField phi;
    ScalarField div_phi;
    ScalarField psi;
    VectorField grad_psi;
    VecX b;  // scalar normal-trace density at surface nodes (tr phi = b nu)
};

// Residual of the change-of-variables divergence identity
//   int phi . grad psi = -int div(phi) psi + int b gamma(eta) tr(psi) dA.
double divergence_theorem_check(const ReferenceSurface& s, const Displacement& eta,
                                const DivThmFixture& fixture, int n_fiber,
                                bool low_order = false,
                                BlendProfile blend = BlendProfile{});

struct ReynoldsFixture {
    std::function<Displacement(double)> eta_of_t;
    std::function<VecX(double)> eta_rate_nodal;  // d/dt eta at surface nodes
    std::function<double(double, const Vec3&)> xi;
    std::function<double(double, const Vec3&)> xi_t;
};

// Residual of the transport identity
//   d/dt int_{Omega_t} xi = int_{Omega_t} dt xi + int_{bdry} v . nu_t xi dA_t,
// with the time derivative replaced by a central difference of width dt.
double reynolds_check(const ReferenceSurface& s, int n_fiber,
                      const ReynoldsFixture& fixture, double t, double dt);

}  // namespace kfsi
