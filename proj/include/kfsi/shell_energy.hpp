// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kfsi/geometry.hpp"
#include "kfsi/types.hpp"

namespace kfsi {

struct ElasticParams {
    double lambda = 2.0;
    double mu = 1.0;
    double eps0 = 0.1;   // half thickness
    double rho_s = 1.0;
    double rho_f = 1.0;

    void validate() const;
    double membrane_coeff() const { return eps0; }
    double bending_coeff() const { return eps0 * eps0 * eps0 / 3.0; }
    double trace_modulus() const { return 4.0 * lambda * mu / (lambda + 2.0 * mu); }
    // coefficient of the bilaplacian in grad K on flat parts
    double bilaplacian_coeff() const {
        return eps0 * eps0 * eps0 * 8.0 * mu * (lambda + mu) / (3.0 * (lambda + 2.0 * mu));
    }
};

// Modal basis of the shell displacement space: Fourier modes on periodic
// charts, real spherical harmonics on the sphere. Modes are L2(dA)
// orthonormal; the constant mode is excluded so every basis function has
// vanishing surface mean.
struct ShellBasis {
    const ReferenceSurface* surface = nullptr;
    int count = 0;
    MatX modes;            // nodes x count
    MatX d1, d2;           // chart gradients
    MatX h11, h12, h22;    // chart second derivatives
    MatX mass;             // integral W_j W_k dA
    MatX kmat;             // K(W_j, W_k)
    MatX h2gram;           // covariant H^2 Gram matrix
    std::vector<double> wavenumber;  // |k| (Fourier) or degree l (harmonics)
    std::vector<std::function<double(double, double)>> mode_at;      // may be empty
    std::vector<std::function<Vec2(double, double)>> mode_grad_at;

    Displacement displacement(const VecX& coef) const;
    VecX project(const VecX& nodal) const;  // L2(dA) projection onto the span
    VecX nodal(const VecX& coef) const { return modes * coef; }
};

ShellBasis fourier_basis(const ReferenceSurface& s, const ElasticParams& params, int n_s);
ShellBasis sphere_basis(const ReferenceSurface& s, const ElasticParams& params, int n_s,
                        double cap_penalty = 0.0);
// dispatch on the catalog kind
ShellBasis make_shell_basis(const ReferenceSurface& s, const ElasticParams& params, int n_s);

// Linearized strain tensors sigma(eta) = -h eta and
// xi(eta) = covariant Hessian(eta) - k eta, per node.
std::vector<Sym2> strain_sigma(const ReferenceSurface& s, const Displacement& eta);
std::vector<Sym2> strain_xi(const ReferenceSurface& s, const Displacement& eta);

// Koiter bilinear form K(a, b); K(eta) := K(eta, eta) >= 0.
double koiter_form(const ReferenceSurface& s, const ElasticParams& params,
                   const Displacement& a, const Displacement& b);

// Minimal generalized Rayleigh quotient min K(eta) / |eta|_{H^2}^2 over the
// basis span. Positive on a correctly clamped configuration.
double coercivity_estimate(const ReferenceSurface& s, const ElasticParams& params,
                           const ShellBasis& basis);

// Riesz representative of the L2 gradient: nodal field r with
// integral(r * zeta dA) = 2 K(eta, zeta) for every basis zeta.
VecX l2_gradient_apply(const ReferenceSurface& s, const ElasticParams& params,
                       const ShellBasis& basis, const Displacement& eta);

}  // namespace kfsi
