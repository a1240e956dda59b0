// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "kfsi/types.hpp"

namespace kfsi {

enum class SurfaceKind { FlatPatch, FlatPatch2d, Sphere, Circle, Cylinder, UserGrid };

// Local frame of the middle surface at a chart point.
struct SurfaceFrame {
    Vec3 X, nu, e1, e2, dnu1, dnu2;
    double H = 0.0, G = 0.0;
};

// Discretized middle surface of the reference boundary with metric,
// curvature, normal field, chart frames, quadrature and clamped mask.
//
// Ambient dimension is 2 or 3; the surface itself is (dim-1)-dimensional.
// The dim == 2 case is represented by an extrusion: all points live in the
// z == 0 plane, e2 is the out-of-plane unit vector and the second chart
// direction is inert, so the 3x3 map machinery applies unchanged.
struct ReferenceSurface {
    int dim = 3;
    SurfaceKind kind = SurfaceKind::UserGrid;
    int n1 = 0, n2 = 1;
    std::vector<double> u1, u2;
    bool periodic1 = true, periodic2 = true;
    double len1 = 0.0, len2 = 0.0;  // chart extents

    std::vector<Vec3> X, nu, e1, e2, dnu1, dnu2;
    std::vector<Sym2> g, h, kform;  // first/second fundamental form, k = h g^-1 h
    std::vector<double> H, G;       // mean and Gauss curvature (G == 0 when dim == 2)
    std::vector<std::array<double, 6>> christoffel;  // chart Christoffel symbols
    std::vector<double> w;          // quadrature weights for dA
    std::vector<uint8_t> clamped;   // Gamma mask per node
    double kappa = 0.0;             // tubular radius
    double measure = 0.0;           // sum of w
    double volume = 0.0;            // |Omega| enclosed by the fibers

    int node_count() const { return n1 * n2; }
    int idx(int i, int j) const { return i * n2 + j; }
    int surf_dim() const { return dim - 1; }
    Sym2 g_inv(int node) const;
    double sqrt_det_g(int node) const;

    // Analytic frame at arbitrary chart coordinates (catalog surfaces only).
    SurfaceFrame frame_at(double a, double b) const;
    // Chart coordinates and signed normal offset of an ambient point inside
    // the fiber region (catalog surfaces only).
    void chart_from_point(const Vec3& y, double& a, double& b, double& s) const;
};

ReferenceSurface make_flat_patch(double Lx, double Ly, double height, int n1, int n2);
ReferenceSurface make_flat_patch_2d(double Lx, double height, int n1);
ReferenceSurface make_sphere(double radius, int n_theta, int n_phi, double cap_angle = 0.0);
ReferenceSurface make_circle(double radius, int n);
ReferenceSurface make_cylinder(double radius, double length, int n_theta, int n_z);
// Periodic tensor grid of embedding samples; metric and curvature data are
// recovered by finite differences on the chart.
ReferenceSurface make_user_grid(int dim, int n1, int n2, std::vector<Vec3> samples,
                                double len1, double len2);

// Transverse displacement of the middle surface: nodal samples plus chart
// derivatives; optional closures allow evaluation between nodes (needed by
// the ambient map queries). Functions defined on M are tacitly extended by
// zero across the clamped region.
struct Displacement {
    VecX values;
    MatX grad;  // n x 2 chart gradient
    MatX hess;  // n x 3 chart second derivatives (11, 12, 22)
    std::function<double(double, double)> value_at;
    std::function<Vec2(double, double)> grad_at;

    double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }

    static Displacement zero(const ReferenceSurface& s);
    static Displacement constant(const ReferenceSurface& s, double c);
    static Displacement analytic(const ReferenceSurface& s,
                                 const std::function<double(double, double)>& f,
                                 const std::function<Vec2(double, double)>& df,
                                 const std::function<Vec3(double, double)>& d2f);
};

// Maximal tubular radius. Catalog surfaces return the analytic value; user
// grids return min(1/max|principal curvature|, half the minimal normal-ray
// self-intersection distance estimated by pair sampling).
double tubular_radius(const ReferenceSurface& s);

// Degeneracy monitor (1 - |eta|_inf/kappa)^-1, infinity once the sup-norm
// reaches kappa. Total function.
double tau(double sup_norm, double kappa);
double tau(const Displacement& eta, double kappa);

// Surface-measure change factor gamma(eta) = 1 - 2 H eta + G eta^2 per node.
// Requires |eta|_inf < kappa.
VecX gamma_factor(const ReferenceSurface& s, const Displacement& eta);
double gamma_at(const ReferenceSurface& s, int node, double eta_value);

// Blend profile for the Hanzawa map: C^3 ramp-plateau-ramp on [-1, 0] with
// beta(-1) = 0, beta(0) = 1, beta' = beta'' = 0 at both ends and
// sup beta' = 1/(1 - ramp - tail). The small plateau slope keeps the map
// injective for displacements up to (1 - ramp - tail) * kappa.
struct BlendProfile {
    double ramp = 0.02;  // ramp width at s = -1
    double tail = 0.02;  // ramp width at s = 0
    double beta(double t) const;
    double beta_d(double t) const;
    double beta_dd(double t) const;
    double slope_sup() const { return 1.0 / (1.0 - 0.5 * (ramp + tail)); }
    double admissible_fraction() const { return 1.0 / slope_sup(); }
};

// Hanzawa transformation Psi_eta of the reference domain onto the deformed
// domain, expressed in normal-fiber coordinates (chart point q, offset s).
// Identity at s = -kappa, boundary offset eta(q) at s = 0.
class HanzawaMap {
public:
    HanzawaMap(const ReferenceSurface& s, const Displacement& eta,
               BlendProfile profile = BlendProfile{});

    const ReferenceSurface& surface() const { return *surf_; }
    const BlendProfile& profile() const { return blend_; }
    double eta_value(int node) const { return eta_.values[node]; }

    double sigma(int node, double s) const;          // deformed offset
    double dsigma_ds(int node, double s) const;
    Vec3 ref_point(int node, double s) const;        // Lambda(q, s)
    Vec3 point(int node, double s) const;            // Psi(Lambda(q, s))
    Mat3 jacobian(int node, double s) const;
    double det(int node, double s) const;

    // Ambient evaluation through the analytic chart (catalog surfaces and
    // displacements carrying closures only).
    Vec3 psi(const Vec3& x) const;
    Vec3 psi_inverse(const Vec3& y) const;
    Mat3 jacobian_at(const Vec3& x) const;
    double det_at(const Vec3& x) const;

    // Time derivative data for a moving boundary: given the rate field of
    // eta, velocity of the material point Psi(x) and of the Jacobian.
    Vec3 point_velocity(int node, double s, double eta_rate_value) const;

private:
    struct ChartData {
        double sigma, sigma_s, beta, beta_d;
    };
    ChartData chart(double eta_v, double s) const;
    Mat3 jacobian_impl(const SurfaceFrame& f, double eta_v, const Vec2& eta_g,
                       double s) const;

    const ReferenceSurface* surf_;
    Displacement eta_;
    BlendProfile blend_;
};

// Direct boundary deformation q -> q + eta(q) nu(q).
struct BoundaryMap {
    std::vector<Vec3> image;          // per node
    std::vector<Mat3> tangent;        // dPhi columns in the chart frame (col 2 inert for dim==2)
};
BoundaryMap boundary_map(const ReferenceSurface& s, const Displacement& eta);

}  // namespace kfsi
