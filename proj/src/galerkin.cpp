// SPDX-License-Identifier: Apache-2.0
#include "kfsi/galerkin.hpp"

#include <cmath>

namespace kfsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct FlatGeomInfo {
    int vax = 2;                 // vertical ambient axis
    std::array<int, 2> hax{0, 1};
    int nh = 2;                  // number of horizontal axes
    double height = 0.0;
};

FlatGeomInfo flat_info(const ReferenceSurface& s) {
    FlatGeomInfo info;
    info.height = s.kappa;
    if (s.kind == SurfaceKind::FlatPatch) {
        info.vax = 2;
        info.hax = {0, 1};
        info.nh = 2;
    } else if (s.kind == SurfaceKind::FlatPatch2d) {
        info.vax = 1;
        info.hax = {0, 0};
        info.nh = 1;
    } else {
        throw ArgumentError(
            "build_basis: the coupled basis requires a flat channel catalog surface "
            "(fixed shell modes admit divergence-free liftings for every admissible "
            "datum only when the surface-measure factor is constant)");
    }
    return info;
}

double smoothstep(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
double smoothstep_d(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}
double smoothstep_dd(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

enum class FieldType { Lifting, Vertical, HorizontalCurl, MeanFlow };

struct FieldSpec {
    FieldType type;
    int mode = 0;   // scalar surface mode index
    int m = 1;      // vertical profile index
    int axis = 0;   // ambient axis for mean flows
};

// vertical profiles and their first/second z-derivatives
void profile_lift(double z, double H, double& R, double& Rd, double& Rdd) {
    const double x = z / H;
    R = smoothstep(x);
    Rd = smoothstep_d(x) / H;
    Rdd = smoothstep_dd(x) / (H * H);
}
void profile_vertical(int m, double z, double H, double& Q, double& Qd, double& Qdd) {
    const double a = m * kPi * z / H;
    const double s = std::sin(a);
    Q = s * s;
    Qd = (m * kPi / H) * std::sin(2.0 * a);
    Qdd = 2.0 * (m * kPi / H) * (m * kPi / H) * std::cos(2.0 * a);
}
void profile_mean(int m, double z, double H, double& P, double& Pd, double& Pdd) {
    const double k = m * kPi / H;
    P = std::sin(k * z);
    Pd = k * std::cos(k * z);
    Pdd = -k * k * std::sin(k * z);
}

// deformation data of the flat Hanzawa map at one volume node
struct FlatDeform {
    Vec3 zeta_d = Vec3::Zero();   // gradient of the deformed vertical coordinate
    Mat3 zeta_dd = Mat3::Zero();
    Vec3 dt_zeta_d = Vec3::Zero();
    double dt_zeta = 0.0;
    double det = 1.0;
    Vec3 y = Vec3::Zero();
};

}  // namespace

CoupledBasis build_basis(const ReferenceSurface& s, const ShellBasis& shell, int n_s,
                         int n_f, int n_fiber, int profile_cap,
                         bool with_boundary_nodes) {
    const FlatGeomInfo info = flat_info(s);
    if (n_s < 0 || n_f < 0 || n_s + n_f < 1)
        throw ArgumentError("build_basis: need at least one basis field");
    if (n_s > shell.count)
        throw ArgumentError("build_basis: n_s exceeds the shell basis size");

    CoupledBasis basis;
    basis.surface = &s;
    basis.shell = &shell;
    basis.n_s = n_s;
    basis.n_f = n_f;
    basis.quad = make_volume_quadrature(s, n_fiber);
    if (with_boundary_nodes) {
        basis.quad.s_nodes.push_back(0.0);
        basis.quad.s_weights.push_back(0.0);
        basis.quad.n_fiber += 1;
    }

    std::vector<FieldSpec> specs;
    for (int k = 0; k < n_s; ++k) specs.push_back({FieldType::Lifting, k, 0, 0});
    for (int m = 1; m <= profile_cap && static_cast<int>(specs.size()) < n_s + n_f; ++m) {
        for (int a = 0; a < info.nh && static_cast<int>(specs.size()) < n_s + n_f; ++a)
            specs.push_back({FieldType::MeanFlow, 0, m, info.hax[a]});
        for (int k = 0; k < shell.count && static_cast<int>(specs.size()) < n_s + n_f; ++k) {
            specs.push_back({FieldType::Vertical, k, m, 0});
            if (info.nh == 2 && static_cast<int>(specs.size()) < n_s + n_f)
                specs.push_back({FieldType::HorizontalCurl, k, m, 0});
        }
    }
    if (static_cast<int>(specs.size()) < n_s + n_f)
        throw ArgumentError("build_basis: profile_cap too small for requested n_f");

    const int N = n_s + n_f;
    const int count = basis.quad.count();
    basis.phi.assign(static_cast<size_t>(count) * N, Vec3::Zero());
    basis.grad_phi.assign(static_cast<size_t>(count) * N, Mat3::Zero());

    const double H = info.height;
    for (int k = 0; k < count; ++k) {
        const int i = basis.quad.surf_index(k);
        const double z = H + basis.quad.s_nodes[basis.quad.fiber_index(k)];
        for (int f = 0; f < N; ++f) {
            const FieldSpec& sp = specs[f];
            Vec3 phi = Vec3::Zero();
            Mat3 grad = Mat3::Zero();  // grad(c, a) is d phi_c / d x_a
            if (sp.type == FieldType::MeanFlow) {
                double P, Pd, Pdd;
                profile_mean(sp.m, z, H, P, Pd, Pdd);
                phi[sp.axis] = P;
                grad(sp.axis, info.vax) = Pd;
            } else {
                const int md = sp.mode;
                const double e = shell.modes(i, md);
                const double e1 = shell.d1(i, md), e2 = shell.d2(i, md);
                const double e11 = shell.h11(i, md), e12 = shell.h12(i, md),
                             e22 = shell.h22(i, md);
                const double k2 = shell.wavenumber[md] * shell.wavenumber[md];
                const int h0 = info.hax[0], h1 = info.hax[1], v = info.vax;
                if (sp.type == FieldType::HorizontalCurl) {
                    double P, Pd, Pdd;
                    profile_mean(sp.m, z, H, P, Pd, Pdd);
                    phi[h0] = P * e2;
                    phi[h1] = -P * e1;
                    grad(h0, h0) = P * e12;
                    grad(h1, h0) = -P * e11;
                    grad(h0, h1) = P * e22;
                    grad(h1, h1) = -P * e12;
                    grad(h0, v) = Pd * e2;
                    grad(h1, v) = -Pd * e1;
                } else {
                    double R, Rd, Rdd;
                    if (sp.type == FieldType::Lifting)
                        profile_lift(z, H, R, Rd, Rdd);
                    else
                        profile_vertical(sp.m, z, H, R, Rd, Rdd);
                    phi[h0] = Rd * e1 / k2;
                    phi[v] = R * e;
                    grad(h0, h0) = Rd * e11 / k2;
                    grad(v, h0) = R * e1;
                    grad(h0, v) = Rdd * e1 / k2;
                    grad(v, v) = Rd * e;
                    if (info.nh == 2) {
                        phi[h1] = Rd * e2 / k2;
                        grad(h0, h1) = Rd * e12 / k2;
                        grad(h1, h0) = Rd * e12 / k2;
                        grad(h1, h1) = Rd * e22 / k2;
                        grad(v, h1) = R * e2;
                        grad(h1, v) = Rdd * e2 / k2;
                    }
                }
            }
            basis.phi[basis.fid(k, f)] = phi;
            basis.grad_phi[basis.fid(k, f)] = grad;
        }
    }

    // Gram conditioning of the undeformed mass matrix
    const MatX A0 = assemble_mass(basis, VecX::Zero(std::max(shell.count, 1)));
    Eigen::SelfAdjointEigenSolver<MatX> es(A0);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    basis.gram_condition = (lmin > 0) ? lmax / lmin : kInfinity;
    if (!(basis.gram_condition < 1e12))
        throw ConfigError("build_basis: basis Gram condition number " +
                          std::to_string(basis.gram_condition) + " exceeds 1e12");
    return basis;
}

namespace {

// Per-node deformation data for the whole quadrature; delta/rate are shell
// coefficient vectors (first n_s entries used).
struct DeformationField {
    std::vector<FlatDeform> node;
    double sup = 0.0;
};

DeformationField flat_deformation(const CoupledBasis& basis, const VecX& delta_coef,
                                  const VecX& rate_coef, bool with_rate) {
    const ReferenceSurface& s = *basis.surface;
    const ShellBasis& shell = *basis.shell;
    const FlatGeomInfo info = flat_info(s);
    const int nsurf = s.node_count();
    const int nc = static_cast<int>(delta_coef.size());

    VecX ev = VecX::Zero(nsurf), e1 = ev, e2 = ev, e11 = ev, e12 = ev, e22 = ev;
    VecX rv = ev, r1 = ev, r2 = ev;
    if (nc > 0) {
        const auto cols = shell.modes.leftCols(nc);
        ev = cols * delta_coef;
        e1 = shell.d1.leftCols(nc) * delta_coef;
        e2 = shell.d2.leftCols(nc) * delta_coef;
        e11 = shell.h11.leftCols(nc) * delta_coef;
        e12 = shell.h12.leftCols(nc) * delta_coef;
        e22 = shell.h22.leftCols(nc) * delta_coef;
        if (with_rate && rate_coef.size() == nc) {
            rv = cols * rate_coef;
            r1 = shell.d1.leftCols(nc) * rate_coef;
            r2 = shell.d2.leftCols(nc) * rate_coef;
        }
    }
    DeformationField out;
    out.sup = (nc > 0) ? ev.cwiseAbs().maxCoeff() : 0.0;
    const BlendProfile blend;  // matches the geometry module default
    const double kappa = s.kappa;
    const double bound = kappa * blend.admissible_fraction();
    if (out.sup >= bound)
        throw DegenerationError("flat_deformation: datum sup-norm " +
                                    std::to_string(out.sup) +
                                    " violates the injectivity bound " + std::to_string(bound),
                                tau(out.sup, kappa));

    const VolumeQuadrature& q = basis.quad;
    out.node.resize(q.count());
    const int v = info.vax, h0 = info.hax[0], h1 = info.hax[1];
    for (int k = 0; k < q.count(); ++k) {
        const int i = q.surf_index(k);
        const double sfib = q.s_nodes[q.fiber_index(k)];
        const double that = sfib / kappa;
        const double b = blend.beta(that);
        const double bd = blend.beta_d(that) / kappa;
        const double bdd = blend.beta_dd(that) / (kappa * kappa);
        FlatDeform d;
        d.zeta_d[h0] = e1[i] * b;
        if (info.nh == 2) d.zeta_d[h1] = e2[i] * b;
        d.zeta_d[v] = 1.0 + ev[i] * bd;
        d.zeta_dd(h0, h0) = e11[i] * b;
        if (info.nh == 2) {
            d.zeta_dd(h0, h1) = d.zeta_dd(h1, h0) = e12[i] * b;
            d.zeta_dd(h1, h1) = e22[i] * b;
            d.zeta_dd(h1, v) = d.zeta_dd(v, h1) = e2[i] * bd;
        }
        d.zeta_dd(h0, v) = d.zeta_dd(v, h0) = e1[i] * bd;
        d.zeta_dd(v, v) = ev[i] * bdd;
        d.det = d.zeta_d[v];
        if (!(d.det > 0.0))
            throw DegenerationError("flat_deformation: nonpositive Jacobian", kInfinity);
        if (with_rate) {
            d.dt_zeta = rv[i] * b;
            d.dt_zeta_d[h0] = r1[i] * b;
            if (info.nh == 2) d.dt_zeta_d[h1] = r2[i] * b;
            d.dt_zeta_d[v] = rv[i] * bd;
        }
        d.y = q.ref_point(k);
        d.y[v] += ev[i] * b;
        out.node[k] = d;
    }
    return out;
}

}  // namespace

BasisAtTime basis_at(const CoupledBasis& basis, const VecX& delta_coef,
                     const VecX& rate_coef, bool with_rate) {
    const FlatGeomInfo info = flat_info(*basis.surface);
    const DeformationField def = flat_deformation(basis, delta_coef, rate_coef, with_rate);
    const int N = basis.size();
    const int count = basis.quad.count();
    BasisAtTime bt;
    bt.count = count;
    bt.N = N;
    bt.has_rate = with_rate;
    bt.wdet.resize(count);
    bt.y.resize(count);
    bt.W.resize(static_cast<size_t>(count) * N);
    bt.G.resize(static_cast<size_t>(count) * N);
    if (with_rate) bt.dtW.resize(static_cast<size_t>(count) * N);

    const int v = info.vax;
    for (int k = 0; k < count; ++k) {
        const FlatDeform& d = def.node[k];
        bt.wdet[k] = basis.quad.weight(k) * d.det;
        bt.y[k] = d.y;
        Mat3 dpsi = Mat3::Identity();
        dpsi.row(v) = d.zeta_d.transpose();
        Mat3 dpsi_inv = Mat3::Identity();
        for (int c = 0; c < 3; ++c) dpsi_inv(v, c) = (c == v) ? 1.0 / d.det : -d.zeta_d[c] / d.det;
        const Vec3 grad_det = d.zeta_dd.col(v);  // d det / d x_c = zeta_dd(c, v)
        for (int f = 0; f < N; ++f) {
            const Vec3& phi = basis.phi[basis.fid(k, f)];
            const Mat3& gphi = basis.grad_phi[basis.fid(k, f)];
            const Vec3 dpsi_phi = dpsi * phi;
            const Vec3 W = dpsi_phi / d.det;
            // Mx(i, c) = d/dx_c of (A phi)_i
            Mat3 Mx;
            for (int c = 0; c < 3; ++c) {
                Vec3 col = dpsi * gphi.col(c);
                col[v] += d.zeta_dd.row(c).dot(phi);
                Mx.col(c) = col / d.det - dpsi_phi * (grad_det[c] / (d.det * d.det));
            }
            const Mat3 G = Mx * dpsi_inv;
            bt.W[basis.fid(k, f)] = W;
            bt.G[basis.fid(k, f)] = G;
            if (with_rate) {
                Vec3 dtA_phi = Vec3::Zero();
                dtA_phi[v] = d.dt_zeta_d.dot(phi) / d.det;
                const Vec3 dt_term = dtA_phi - dpsi_phi * (d.dt_zeta_d[v] / (d.det * d.det));
                Vec3 vel = Vec3::Zero();
                vel[v] = d.dt_zeta;
                bt.dtW[basis.fid(k, f)] = dt_term - G * vel;
            }
        }
    }
    return bt;
}

MatX assemble_mass(const CoupledBasis& basis, const VecX& delta_coef) {
    const BasisAtTime bt = basis_at(basis, delta_coef, VecX(), false);
    const int N = basis.size();
    MatX A = MatX::Zero(N, N);
    for (int k = 0; k < bt.count; ++k) {
        const double w = bt.wdet[k];
        for (int j = 0; j < N; ++j) {
            const Vec3& Wj = bt.W[basis.fid(k, j)];
            for (int l = j; l < N; ++l) A(j, l) += w * Wj.dot(bt.W[basis.fid(k, l)]);
        }
    }
    for (int j = 0; j < N; ++j)
        for (int l = 0; l < j; ++l) A(j, l) = A(l, j);
    // shell kinetic block
    if (basis.n_s > 0)
        A.topLeftCorner(basis.n_s, basis.n_s) +=
            basis.shell->mass.topLeftCorner(basis.n_s, basis.n_s);
    return A;
}

TransportTensor assemble_transport(const CoupledBasis& basis, const VecX& delta_coef) {
    const BasisAtTime bt = basis_at(basis, delta_coef, VecX(), false);
    const int N = basis.size();
    TransportTensor T;
    T.E.assign(N, MatX::Zero(N, N));
    for (int k = 0; k < bt.count; ++k) {
        const double w = bt.wdet[k];
        for (int j = 0; j < N; ++j) {
            const Mat3 Dj = 0.5 * (bt.G[basis.fid(k, j)] + bt.G[basis.fid(k, j)].transpose());
            for (int kk = 0; kk < N; ++kk) {
                const Vec3 DjWk = Dj * bt.W[basis.fid(k, kk)];
                for (int l = 0; l < N; ++l)
                    T.E[j](kk, l) += w * bt.W[basis.fid(k, l)].dot(DjWk);
            }
        }
    }
    // boundary cubic term over the shell scalars
    const ReferenceSurface& s = *basis.surface;
    const ShellBasis& shell = *basis.shell;
    const int nsurf = s.node_count();
    VecX eta = VecX::Zero(nsurf);
    if (delta_coef.size() > 0) eta = shell.modes.leftCols(delta_coef.size()) * delta_coef;
    for (int q = 0; q < nsurf; ++q) {
        const double gam = gamma_at(s, q, eta[q]);
        for (int j = 0; j < basis.n_s; ++j)
            for (int kk = 0; kk < basis.n_s; ++kk)
                for (int l = 0; l < basis.n_s; ++l)
                    T.E[j](kk, l) -= 0.5 * s.w[q] * gam * shell.modes(q, l) *
                                     shell.modes(q, kk) * shell.modes(q, j);
    }
    return T;
}

double energy_identity_residual(const EnergyLedger& ledger, double t1, double t2) {
    const auto& rows = ledger.rows;
    if (rows.size() < 2) return 0.0;
    int i1 = -1, i2 = -1;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (i1 < 0 && rows[i].t >= t1 - 1e-12) i1 = static_cast<int>(i);
        if (rows[i].t <= t2 + 1e-12) i2 = static_cast<int>(i);
    }
    if (i1 < 0 || i2 <= i1) return 0.0;
    double integral = 0.0, emax = 0.0;
    for (int i = i1; i < i2; ++i) {
        const double h = rows[i + 1].t - rows[i].t;
        const double fa = rows[i].diss_rate + rows[i].parabol_rate - rows[i].power_rate;
        const double fb = rows[i + 1].diss_rate + rows[i + 1].parabol_rate - rows[i + 1].power_rate;
        integral += 0.5 * h * (fa + fb);
    }
    for (int i = i1; i <= i2; ++i) emax = std::max(emax, rows[i].energy());
    const double res = std::abs(rows[i2].energy() - rows[i1].energy() + integral);
    return (emax > 1e-30) ? res / emax : res;
}

GronwallReport gronwall_check(const EnergyLedger& ledger, const GalerkinConfig& cfg) {
    GronwallReport rep;
    const auto& rows = ledger.rows;
    if (rows.size() < 2) {
        rep.pass = true;
        return rep;
    }
    const double t0 = rows.front().t;
    const double rhs0 = 2.0 * rows.front().e_kin_fluid + rows.front().dteta_l2sq +
                        rows.front().eta_h2;
    double cum_du = 0.0, cum_fg = 0.0, cum_du0 = 0.0, cum_h2rate = 0.0;
    double cmax = 0.0;
    std::vector<double> ts, logratio;
    for (size_t i = 1; i < rows.size(); ++i) {
        const double h = rows[i].t - rows[i - 1].t;
        cum_du += 0.5 * h * (rows[i - 1].du_lp_p + rows[i].du_lp_p);
        cum_du0 += 0.5 * h * (rows[i - 1].du_lp0_p0 + rows[i].du_lp0_p0);
        cum_h2rate += 0.5 * h * (rows[i - 1].dteta_h2sq + rows[i].dteta_h2sq);
        cum_fg += 0.5 * h * (rows[i - 1].f_l2sq + rows[i - 1].g_l2sq + rows[i].f_l2sq +
                             rows[i].g_l2sq);
        const double lhs =
            2.0 * rows[i].e_kin_fluid + cum_du + rows[i].dteta_l2sq + rows[i].eta_h2;
        const double rhs = (rhs0 + cum_fg) * std::exp(rows[i].t - t0);
        if (rhs > 1e-30) {
            const double c = lhs / rhs;
            cmax = std::max(cmax, c);
            ts.push_back(rows[i].t);
            logratio.push_back(std::log(std::max(c, 1e-300)));
        }
    }
    rep.constant = cmax;
    rep.eps_term = cfg.eps * cum_h2rate + cfg.eps_tilde * cum_du0;
    // Growth faster than every constant multiple of e^t RHS shows up as a
    // ratio whose log-slope does not decay. Transients (pulsed forcing on a
    // short window) have a steep but decelerating slope, so the tail slope
    // is compared against the mid-window slope.
    auto slope_over = [&](size_t lo, size_t hi) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (size_t i = lo; i < hi && i < ts.size(); ++i) {
            sx += ts[i];
            sy += logratio[i];
            sxx += ts[i] * ts[i];
            sxy += ts[i] * logratio[i];
            ++n;
        }
        if (n < 2) return 0.0;
        const double denom = n * sxx - sx * sx;
        return (std::abs(denom) > 1e-300) ? (n * sxy - sx * sy) / denom : 0.0;
    };
    double mid_slope = 0.0;
    if (ts.size() >= 8) {
        mid_slope = slope_over(ts.size() / 4, ts.size() / 2);
        rep.log_slope = slope_over(3 * ts.size() / 4, ts.size());
    }
    rep.pass = std::isfinite(cmax) &&
               (rep.log_slope <= 0.5 || rep.log_slope <= 0.6 * mid_slope);
    return rep;
}

DecoupledStepper::DecoupledStepper(const CoupledBasis& basis, const StressLaw& law,
                                   const ElasticParams& elastic, const GalerkinConfig& cfg,
                                   Forcing forcing)
    : basis_(&basis), law_(law), elastic_(elastic), cfg_(cfg), forcing_(std::move(forcing)) {
    if (!(cfg.eps > 0)) throw ConfigError("stepper: Steklov window eps must be positive");
    if (!(cfg.eps_tilde >= 0)) throw ConfigError("stepper: eps_tilde must be nonnegative");
    if (!(cfg.dt > 0)) throw ConfigError("stepper: dt must be positive");
    law_.eps_tilde = cfg.eps_tilde;  // the regularization weight is a solver knob
    const int N = basis.size();
    stiffness_ = MatX::Zero(N, N);
    if (basis.n_s > 0)
        stiffness_.topLeftCorner(basis.n_s, basis.n_s) =
            2.0 * basis.shell->kmat.topLeftCorner(basis.n_s, basis.n_s);
}

void DecoupledStepper::reset(const SolveInput& input, std::vector<VecX> datum_coef,
                             double t0) {
    if (datum_coef.size() < 2) throw ArgumentError("reset: datum needs at least two samples");
    datum_ = std::move(datum_coef);
    t0_ = t_ = t0;
    step_index_ = 0;
    const int N = basis_->size();
    alpha_ = VecX::Zero(N);
    if (input.eta1_coef.size() > 0) {
        if (input.eta1_coef.size() != basis_->n_s)
            throw ArgumentError("reset: eta1 coefficient size mismatch");
        alpha_.head(basis_->n_s) = input.eta1_coef;
    }
    if (input.alpha0_interior.size() > 0) {
        if (input.alpha0_interior.size() != basis_->n_f)
            throw ArgumentError("reset: interior coefficient size mismatch");
        alpha_.tail(basis_->n_f) = input.alpha0_interior;
    }
    eta_ = (input.eta0_coef.size() > 0) ? input.eta0_coef : VecX::Zero(basis_->n_s);
    if (eta_.size() != basis_->n_s) throw ArgumentError("reset: eta0 coefficient size mismatch");
    alpha_hist_.clear();
    eta_hist_.clear();
    alpha_hist_.push_back(alpha_);
    eta_hist_.push_back(eta_);
    ledger_.rows.clear();
    const VecX rate0 = (datum_[1] - datum_[0]) / cfg_.dt;
    push_ledger_row(t0_, alpha_, eta_, datum_[0], rate0);
}

VecX DecoupledStepper::windowed_alpha(const VecX& current_mid, double t_mid) const {
    const double eps = cfg_.eps;
    const double lo = t_mid - eps;
    const int n = step_index_;  // completed steps; history has n+1 samples
    const double dt = cfg_.dt;
    VecX acc = VecX::Zero(alpha_.size());
    for (int i = 0; i < n; ++i) {
        const double ta = t0_ + i * dt;
        const double a = std::max(lo, ta), b = std::min(t_mid, ta + dt);
        if (b <= a) continue;
        const double qa = (a - ta) / dt, qb = (b - ta) / dt;
        const double s1 = qb - qa, s2 = 0.5 * (qb * qb - qa * qa);
        acc += dt * ((s1 - s2) * alpha_hist_[i] + s2 * alpha_hist_[i + 1]);
    }
    // trailing half step from t_n to t_mid with linear values alpha_n -> x
    const double tn = t0_ + n * dt;
    const double a = std::max(lo, tn);
    if (t_mid > a) {
        const double seg = t_mid - tn;
        const double qa = (a - tn) / seg, qb = 1.0;
        const double s1 = qb - qa, s2 = 0.5 * (qb * qb - qa * qa);
        acc += seg * ((s1 - s2) * alpha_hist_[n] + s2 * current_mid);
    }
    return acc / eps;
}

VecX DecoupledStepper::nonlinear_rhs(const BasisAtTime& bt, const VecX& x,
                                     const VecX& xbar, double t_mid) {
    const int N = bt.N;
    const CoupledBasis& B = *basis_;
    VecX terms = VecX::Zero(N);
    for (int k = 0; k < bt.count; ++k) {
        const double w = bt.wdet[k];
        Vec3 u = Vec3::Zero(), vbar = Vec3::Zero(), dtu = Vec3::Zero();
        Mat3 Gu = Mat3::Zero();
        for (int i = 0; i < N; ++i) {
            const size_t id = B.fid(k, i);
            u += x[i] * bt.W[id];
            vbar += xbar[i] * bt.W[id];
            Gu += x[i] * bt.G[id];
            dtu += x[i] * bt.dtW[id];
        }
        const Mat3 Du = 0.5 * (Gu + Gu.transpose());
        const Mat3 S = law_.eval(Du);
        for (int j = 0; j < N; ++j) {
            const size_t id = B.fid(k, j);
            const Mat3& Gj = bt.G[id];
            // P x: moving-basis coupling
            double acc = dtu.dot(bt.W[id]);
            // T2: -(vbar (x) u) : DW_j with DW_j the symmetric part of Gj
            acc -= 0.5 * (vbar.dot(Gj * u) + u.dot(Gj * vbar));
            // T5: stress projection (S symmetric, so S : Gj = S : sym Gj)
            acc += S.cwiseProduct(Gj).sum();
            terms[j] += w * acc;
        }
    }
    // boundary stabilizer terms over the shell scalars
    const ReferenceSurface& s = *B.surface;
    const ShellBasis& shell = *B.shell;
    if (B.n_s > 0) {
        const int ns = B.n_s;
        const int n = step_index_;
        const VecX rate_coef = (datum_[n + 1] - datum_[n]) / cfg_.dt;
        const int nc = static_cast<int>(datum_[n].size());
        const VecX dt_delta = shell.modes.leftCols(nc) * rate_coef;
        const VecX delta_mid =
            shell.modes.leftCols(nc) * (0.5 * (datum_[n] + datum_[n + 1]));
        const VecX dteta = shell.modes.leftCols(ns) * x.head(ns);
        const VecX dteta_bar = shell.modes.leftCols(ns) * xbar.head(ns);
        (void)t_mid;
        for (int q = 0; q < s.node_count(); ++q) {
            const double gam = gamma_at(s, q, delta_mid[q]);
            const double common =
                0.5 * s.w[q] * gam * (dteta[q] * dt_delta[q] + dteta_bar[q] * dteta[q]);
            for (int j = 0; j < ns; ++j) terms[j] += common * shell.modes(q, j);
        }
    }
    return terms;
}

StepStats DecoupledStepper::step() {
    if (done()) throw SolverError("step: datum exhausted", t_);
    const int n = step_index_;
    const double dt = cfg_.dt;
    const double t_mid = t0_ + (n + 0.5) * dt;
    const VecX c_mid = 0.5 * (datum_[n] + datum_[n + 1]);
    const VecX c_rate = (datum_[n + 1] - datum_[n]) / dt;

    const BasisAtTime bt = basis_at(*basis_, c_mid, c_rate, true);
    const int N = basis_->size();

    // mass and viscous Gram at the midpoint
    MatX A = MatX::Zero(N, N);
    MatX Kvisc = MatX::Zero(N, N);
    std::vector<Mat3> sym_cache(N);
    for (int k = 0; k < bt.count; ++k) {
        const double w = bt.wdet[k];
        for (int j = 0; j < N; ++j) {
            const Mat3& Gj = bt.G[basis_->fid(k, j)];
            sym_cache[j] = 0.5 * (Gj + Gj.transpose());
        }
        for (int j = 0; j < N; ++j) {
            const Vec3& Wj = bt.W[basis_->fid(k, j)];
            for (int l = j; l < N; ++l) {
                A(j, l) += w * Wj.dot(bt.W[basis_->fid(k, l)]);
                Kvisc(j, l) += w * sym_cache[j].cwiseProduct(sym_cache[l]).sum();
            }
        }
    }
    for (int j = 0; j < N; ++j)
        for (int l = 0; l < j; ++l) {
            A(j, l) = A(l, j);
            Kvisc(j, l) = Kvisc(l, j);
        }
    if (basis_->n_s > 0)
        A.topLeftCorner(basis_->n_s, basis_->n_s) +=
            basis_->shell->mass.topLeftCorner(basis_->n_s, basis_->n_s);

    Eigen::LLT<MatX> allt(A);
    if (allt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<MatX> es(A);
        throw SolverError("step: mass matrix not positive definite (min eigenvalue " +
                              std::to_string(es.eigenvalues().minCoeff()) + ")",
                          t_mid);
    }

    // linear core of the stress law, solved implicitly; the damped Picard
    // iteration resolves only the shear-dependent excess
    const double mu_lin =
        (law_.p >= 2.0) ? law_.mu0 * std::pow(law_.delta, law_.p - 2.0) : 0.0;
    MatX M_eff = (2.0 / dt) * A + (0.5 * dt + cfg_.eps) * stiffness_ + mu_lin * Kvisc;
    Eigen::LLT<MatX> llt(M_eff);
    if (llt.info() != Eigen::Success)
        throw SolverError("step: effective matrix not positive definite", t_mid);

    // constant part of the right-hand side
    VecX b_const = (2.0 / dt) * (A * alpha_);
    VecX eta_ext = VecX::Zero(N);
    eta_ext.head(basis_->n_s) = eta_;
    b_const -= stiffness_ * eta_ext;
    if (forcing_.f) {
        for (int k = 0; k < bt.count; ++k) {
            const Vec3 fv = forcing_.f(t_mid, bt.y[k]);
            if (fv.squaredNorm() == 0.0) continue;
            for (int j = 0; j < N; ++j)
                b_const[j] += bt.wdet[k] * fv.dot(bt.W[basis_->fid(k, j)]);
        }
    }
    if (forcing_.g && basis_->n_s > 0) {
        const ReferenceSurface& s = *basis_->surface;
        for (int i1 = 0; i1 < s.n1; ++i1)
            for (int i2 = 0; i2 < s.n2; ++i2) {
                const int q = s.idx(i1, i2);
                const double gv = forcing_.g(t_mid, s.u1[i1], s.u2[i2]);
                if (gv == 0.0) continue;
                for (int j = 0; j < basis_->n_s; ++j)
                    b_const[j] += s.w[q] * gv * basis_->shell->modes(q, j);
            }
    }

    // damped Picard iteration on the nonlinear and memory terms
    VecX x = alpha_;
    StepStats stats;
    double prev_res = kInfinity;
    int stagnant = 0;
    for (int m = 0; m < cfg_.max_picard; ++m) {
        const VecX xbar = windowed_alpha(x, t_mid);
        const VecX rhs = b_const - nonlinear_rhs(bt, x, xbar, t_mid) + mu_lin * (Kvisc * x);
        const VecX x_new = llt.solve(rhs);
        const double res = (x_new - x).norm() / std::max(1.0, x_new.norm());
        x += cfg_.picard_damping * (x_new - x);
        stats.picard_iterations = m + 1;
        stats.picard_residual = res;
        if (res <= cfg_.tol_picard) break;
        if (res >= 0.99 * prev_res) {
            if (++stagnant >= 50)
                throw SolverError("step: Picard stagnation, residual " + std::to_string(res),
                                  t_mid);
        } else {
            stagnant = 0;
        }
        prev_res = res;
        if (m + 1 == cfg_.max_picard)
            throw SolverError("step: Picard did not converge, residual " + std::to_string(res),
                              t_mid);
    }

    alpha_ = 2.0 * x - alpha_;
    eta_ = eta_ + dt * x.head(basis_->n_s);
    ++step_index_;
    t_ = t0_ + step_index_ * dt;
    alpha_hist_.push_back(alpha_);
    eta_hist_.push_back(eta_);
    const VecX rate_next = (datum_[n + 1] - datum_[n]) / dt;
    push_ledger_row(t_, alpha_, eta_, datum_[n + 1], rate_next);
    return stats;
}

void DecoupledStepper::push_ledger_row(double t, const VecX& alpha, const VecX& eta,
                                       const VecX& delta, const VecX& /*rate*/) {
    const BasisAtTime bt = basis_at(*basis_, delta, VecX(), false);
    const CoupledBasis& B = *basis_;
    const ShellBasis& shell = *B.shell;
    const int N = B.size();
    EnergyRow row;
    row.t = t;
    const double p = law_.p, p0 = law_.p0();
    for (int k = 0; k < bt.count; ++k) {
        Vec3 u = Vec3::Zero();
        Mat3 Gu = Mat3::Zero();
        for (int i = 0; i < N; ++i) {
            u += alpha[i] * bt.W[B.fid(k, i)];
            Gu += alpha[i] * bt.G[B.fid(k, i)];
        }
        const Mat3 Du = 0.5 * (Gu + Gu.transpose());
        const Mat3 S = law_.eval(Du);
        const double w = bt.wdet[k];
        row.e_kin_fluid += 0.5 * w * u.squaredNorm();
        row.diss_rate += w * S.cwiseProduct(Du).sum();
        const double dn = Du.norm();
        row.du_lp_p += w * std::pow(dn, p);
        row.du_lp0_p0 += w * std::pow(dn, p0);
        if (forcing_.f) {
            const Vec3 fv = forcing_.f(t, bt.y[k]);
            row.power_rate += w * fv.dot(u);
            row.f_l2sq += w * fv.squaredNorm();
        }
    }
    if (B.n_s > 0) {
        const VecX as = alpha.head(B.n_s);
        const MatX mass = shell.mass.topLeftCorner(B.n_s, B.n_s);
        const MatX kmat = shell.kmat.topLeftCorner(B.n_s, B.n_s);
        const MatX h2 = shell.h2gram.topLeftCorner(B.n_s, B.n_s);
        row.dteta_l2sq = as.dot(mass * as);
        row.e_kin_shell = 0.5 * row.dteta_l2sq;
        row.e_koiter = eta.dot(kmat * eta);
        row.parabol_rate = 2.0 * cfg_.eps * as.dot(kmat * as);
        row.dteta_h2sq = as.dot(h2 * as);
        row.eta_h2 = eta.dot(h2 * eta);
        const VecX eta_nodal = shell.modes.leftCols(B.n_s) * eta;
        row.eta_sup = eta_nodal.size() ? eta_nodal.cwiseAbs().maxCoeff() : 0.0;
        row.tau_val = tau(row.eta_sup, B.surface->kappa);
        if (forcing_.g) {
            const ReferenceSurface& s = *B.surface;
            const VecX dteta = shell.modes.leftCols(B.n_s) * as;
            for (int i1 = 0; i1 < s.n1; ++i1)
                for (int i2 = 0; i2 < s.n2; ++i2) {
                    const int q = s.idx(i1, i2);
                    const double gv = forcing_.g(t, s.u1[i1], s.u2[i2]);
                    row.power_rate += s.w[q] * gv * dteta[q];
                    row.g_l2sq += s.w[q] * gv * gv;
                }
        }
    }
    ledger_.rows.push_back(row);
    ledger_.rows.back().residual =
        energy_identity_residual(ledger_, ledger_.rows.front().t, t);
}

ShellOscillator::ShellOscillator(const ShellBasis& shell, const ElasticParams& elastic,
                                 const GalerkinConfig& cfg, Forcing forcing)
    : shell_(&shell), elastic_(elastic), cfg_(cfg), forcing_(std::move(forcing)) {
    stiffness_ = 2.0 * shell.kmat;
}

void ShellOscillator::reset(const VecX& eta0_coef, const VecX& eta1_coef, double t0) {
    eta_ = eta0_coef;
    rate_ = eta1_coef;
    t_ = t0;
    ledger_.rows.clear();
    push_row();
}

void ShellOscillator::step() {
    const double dt = cfg_.dt;
    const double t_mid = t_ + 0.5 * dt;
    const MatX M_eff = (2.0 / dt) * shell_->mass + (0.5 * dt + cfg_.eps) * stiffness_;
    VecX rhs = (2.0 / dt) * (shell_->mass * rate_) - stiffness_ * eta_;
    if (forcing_.g) {
        const ReferenceSurface& s = *shell_->surface;
        for (int i1 = 0; i1 < s.n1; ++i1)
            for (int i2 = 0; i2 < s.n2; ++i2) {
                const int q = s.idx(i1, i2);
                const double gv = forcing_.g(t_mid, s.u1[i1], s.u2[i2]);
                if (gv == 0.0) continue;
                for (int j = 0; j < shell_->count; ++j)
                    rhs[j] += s.w[q] * gv * shell_->modes(q, j);
            }
    }
    const VecX x = M_eff.llt().solve(rhs);
    rate_ = 2.0 * x - rate_;
    eta_ = eta_ + dt * x;
    t_ += dt;
    push_row();
}

void ShellOscillator::push_row() {
    EnergyRow row;
    row.t = t_;
    row.dteta_l2sq = rate_.dot(shell_->mass * rate_);
    row.e_kin_shell = 0.5 * row.dteta_l2sq;
    row.e_koiter = eta_.dot(shell_->kmat * eta_);
    row.parabol_rate = 2.0 * cfg_.eps * rate_.dot(shell_->kmat * rate_);
    row.dteta_h2sq = rate_.dot(shell_->h2gram * rate_);
    row.eta_h2 = eta_.dot(shell_->h2gram * eta_);
    const VecX eta_nodal = shell_->modes * eta_;
    row.eta_sup = eta_nodal.cwiseAbs().maxCoeff();
    row.tau_val = tau(row.eta_sup, shell_->surface->kappa);
    if (forcing_.g) {
        const ReferenceSurface& s = *shell_->surface;
        const VecX dteta = shell_->modes * rate_;
        for (int i1 = 0; i1 < s.n1; ++i1)
            for (int i2 = 0; i2 < s.n2; ++i2) {
                const int q = s.idx(i1, i2);
                const double gv = forcing_.g(t_, s.u1[i1], s.u2[i2]);
                row.power_rate += s.w[q] * gv * dteta[q];
                row.g_l2sq += s.w[q] * gv * gv;
            }
    }
    ledger_.rows.push_back(row);
    ledger_.rows.back().residual =
        energy_identity_residual(ledger_, ledger_.rows.front().t, t_);
}

}  // namespace kfsi
