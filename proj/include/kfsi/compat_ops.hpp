// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kfsi/shell_energy.hpp"
#include "kfsi/transform.hpp"

namespace kfsi {

struct RegularizerConfig {
    double eps = 0.05;       // time window and space mollification scale
    double eps_tilde = 0.0;  // stress regularization (consumed by the stress law)
    double cutoff_scale = 1.0;  // spectral cutoff = cutoff_scale / eps
    VecX bump;               // psi for the mean projector; empty: per-surface default
    int projection_k = 0;    // spectral cutoff for P_k; 0: full span
    void validate() const;
};

// Fixed smooth positive bump supported in the interior of M, used as the
// correction direction of the mean projector.
VecX default_bump(const ReferenceSurface& s);

// gamma-weighted moment a(b, eta) = integral b gamma(eta) dA
double gamma_moment(const ReferenceSurface& s, const Displacement& eta, const VecX& b);

// M_eta: b - psi a(b, eta)/a(psi, eta); annihilates the gamma moment.
VecX mean_correct(const ReferenceSurface& s, const Displacement& eta, const VecX& b,
                  const VecX& bump);
VecX mean_correct(const ReferenceSurface& s, const Displacement& eta, const VecX& b,
                  const RegularizerConfig& reg);

// M_eta^perp: correction along gamma(eta) itself; L2(dA)-orthogonal variant.
VecX orth_correct(const ReferenceSurface& s, const Displacement& eta, const VecX& b);

// P_k: L2(dA)-orthogonal projection onto the first k basis modes.
VecX spectral_project(const ShellBasis& basis, int k, const VecX& b_nodal);

struct MollifyResult {
    Displacement field;  // R_eps eta0
    VecX coef;           // retained modal coefficients
    double shift;        // nonnegative constant achieving one-sided approximation
};

// R_eps: spectral truncation at wavenumber ~ 1/eps plus the minimal constant
// shift making the result a uniform upper approximation of eta0.
MollifyResult space_mollify(const ReferenceSurface& s, const ShellBasis& basis,
                            const VecX& eta0_nodal, double eps,
                            double cutoff_scale = 1.0);

// Histories on a uniform time grid t0 + i dt. delta samples must already be
// admissible displacements; fields live on the deformed volume nodes of their
// own sample time, boundary scalars on the surface nodes.
struct SteklovHistory {
    double t0 = 0.0, dt = 0.0;
    std::vector<Displacement> delta;
    std::vector<std::vector<Vec3>> phi;
    std::vector<VecX> b;
};

struct SteklovFieldResult {
    std::vector<Vec3> field;  // R0_eps phi(t) at the t-deformed volume nodes
    bool clipped = false;     // window extended before t0 (zero extension used)
};
struct SteklovScalarResult {
    VecX value;  // R1_eps b(t) at surface nodes
    bool clipped = false;
};

SteklovFieldResult time_steklov_field(const ReferenceSurface& s, const VolumeQuadrature& q,
                                      const SteklovHistory& hist, double eps, double t);
SteklovScalarResult time_steklov_scalar(const ReferenceSurface& s,
                                        const SteklovHistory& hist, double eps, double t);

struct InitialData {
    VecX eta0, eta1;  // nodal on the surface grid
    VectorField u0;   // divergence-free on Omega_{eta0}, zero-extended
};

struct MollifiedData {
    MollifyResult eta0_reg;
    VecX eta1_eps;   // smooth, gamma(R eta0)-compatible
    VectorField u0_eps;
    double compat_residual_in = 0.0;
};

// Mollified initial data: eta1 is truncated and re-corrected so that
// integral eta1_eps gamma(R_eps eta0) dA = 0; u0 is already smooth and
// supported in Omega_{R_eps eta0} since R_eps eta0 >= eta0.
MollifiedData mollify_initial_data(const ReferenceSurface& s, const ShellBasis& basis,
                                   const InitialData& data, double eps,
                                   double compat_tol = 1e-8);

}  // namespace kfsi
