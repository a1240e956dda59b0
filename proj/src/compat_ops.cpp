// SPDX-License-Identifier: Apache-2.0
#include "kfsi/compat_ops.hpp"

#include <cmath>

namespace kfsi {

namespace {
constexpr double kPi = 3.14159265358979323846;

// weights integrating the piecewise-linear interpolant of the samples over
// the window (t - eps, t), zero-extended below t0
void window_weights(double t0, double dt, int count, double eps, double t,
                    std::vector<double>& wts, bool& clipped) {
    wts.assign(count, 0.0);
    clipped = false;
    double lo = t - eps;
    const double t_end = t0 + dt * (count - 1);
    if (lo < t0 - 1e-12 * dt) {
        clipped = true;
        lo = t0;
    }
    const double hi = std::min(t, t_end);
    if (hi <= lo) return;
    for (int i = 0; i + 1 < count; ++i) {
        const double ta = t0 + i * dt;
        const double a = std::max(lo, ta), b = std::min(hi, ta + dt);
        if (b <= a) continue;
        const double qa = (a - ta) / dt, qb = (b - ta) / dt;
        const double s1 = qb - qa, s2 = 0.5 * (qb * qb - qa * qa);
        wts[i] += dt * (s1 - s2);
        wts[i + 1] += dt * s2;
    }
}

}  // namespace

void RegularizerConfig::validate() const {
    std::vector<std::string> issues;
    if (!(eps > 0)) issues.push_back("regularization: eps must be positive");
    if (!(eps_tilde >= 0)) issues.push_back("regularization: eps_tilde must be nonnegative");
    if (!(cutoff_scale > 0)) issues.push_back("regularization: cutoff_scale must be positive");
    if (!issues.empty()) throw ConfigError("invalid regularizer config", issues);
}

VecX default_bump(const ReferenceSurface& s) {
    VecX psi(s.node_count());
    for (int i = 0; i < s.n1; ++i)
        for (int j = 0; j < s.n2; ++j) {
            const int id = s.idx(i, j);
            double v = 1.0;
            // smooth periodic bump centred in the chart; on the sphere the
            // theta direction is nonperiodic and the bump avoids the poles
            const double a = s.u1[i];
            if (s.periodic1 && s.len1 > 0) {
                v *= std::pow(0.5 + 0.5 * std::cos(2.0 * kPi * (a - 0.5 * s.len1) / s.len1), 2.0);
            } else if (s.len1 > 0) {
                const double x = a / s.len1;
                v *= std::pow(std::sin(kPi * x), 4.0);
            }
            if (s.surf_dim() == 2) {
                const double b = s.u2[j];
                if (s.periodic2 && s.len2 > 0) {
                    v *= std::pow(0.5 + 0.5 * std::cos(2.0 * kPi * (b - 0.5 * s.len2) / s.len2), 2.0);
                }
            }
            psi[id] = s.clamped[id] ? 0.0 : v;
        }
    if (psi.maxCoeff() <= 0.0) throw ConfigError("default_bump: bump vanished");
    return psi;
}

double gamma_moment(const ReferenceSurface& s, const Displacement& eta, const VecX& b) {
    const VecX gamma = gamma_factor(s, eta);
    double acc = 0.0;
    for (int i = 0; i < s.node_count(); ++i) acc += s.w[i] * gamma[i] * b[i];
    return acc;
}

VecX mean_correct(const ReferenceSurface& s, const Displacement& eta, const VecX& b,
                  const VecX& bump) {
    const double a_b = gamma_moment(s, eta, b);
    const double a_psi = gamma_moment(s, eta, bump);
    if (std::abs(a_psi) < 1e-300) throw ArgumentError("mean_correct: degenerate bump moment");
    return b - bump * (a_b / a_psi);
}

VecX mean_correct(const ReferenceSurface& s, const Displacement& eta, const VecX& b,
                  const RegularizerConfig& reg) {
    if (reg.bump.size() > 0) {
        if (reg.bump.size() != s.node_count() || reg.bump.minCoeff() < 0.0 ||
            reg.bump.maxCoeff() <= 0.0)
            throw ArgumentError("mean_correct: bump must be nonnegative, nonzero, "
                                "and sized to the surface grid");
        return mean_correct(s, eta, b, reg.bump);
    }
    return mean_correct(s, eta, b, default_bump(s));
}

VecX orth_correct(const ReferenceSurface& s, const Displacement& eta, const VecX& b) {
    const VecX gamma = gamma_factor(s, eta);
    double a_b = 0.0, a_g = 0.0;
    for (int i = 0; i < s.node_count(); ++i) {
        a_b += s.w[i] * gamma[i] * b[i];
        a_g += s.w[i] * gamma[i] * gamma[i];
    }
    return b - gamma * (a_b / a_g);
}

VecX spectral_project(const ShellBasis& basis, int k, const VecX& b_nodal) {
    if (k < 0 || k > basis.count)
        throw ArgumentError("spectral_project: k exceeds the basis size");
    if (k == 0) return VecX::Zero(b_nodal.size());
    VecX rhs(k);
    for (int j = 0; j < k; ++j) {
        double acc = 0.0;
        for (int id = 0; id < b_nodal.size(); ++id)
            acc += basis.surface->w[id] * b_nodal[id] * basis.modes(id, j);
        rhs[j] = acc;
    }
    const MatX msub = basis.mass.topLeftCorner(k, k);
    const VecX coef = msub.ldlt().solve(rhs);
    return basis.modes.leftCols(k) * coef;
}

MollifyResult space_mollify(const ReferenceSurface& s, const ShellBasis& basis,
                            const VecX& eta0_nodal, double eps, double cutoff_scale) {
    if (!(eps > 0)) throw ArgumentError("space_mollify: eps must be positive");
    const double cutoff = cutoff_scale / eps;
    int keep = 0;
    while (keep < basis.count && basis.wavenumber[keep] <= cutoff) ++keep;
    MollifyResult r;
    VecX truncated;
    if (keep == 0) {
        r.coef = VecX::Zero(basis.count);
        truncated = VecX::Zero(eta0_nodal.size());
    } else {
        VecX rhs(keep);
        for (int j = 0; j < keep; ++j) {
            double acc = 0.0;
            for (int id = 0; id < eta0_nodal.size(); ++id)
                acc += s.w[id] * eta0_nodal[id] * basis.modes(id, j);
            rhs[j] = acc;
        }
        const VecX csub = basis.mass.topLeftCorner(keep, keep).ldlt().solve(rhs);
        r.coef = VecX::Zero(basis.count);
        r.coef.head(keep) = csub;
        truncated = basis.modes.leftCols(keep) * csub;
    }
    r.shift = std::max(0.0, (eta0_nodal - truncated).maxCoeff());
    // roundoff guard: the one-sided property must hold exactly on the grid
    for (int guard = 0; guard < 4; ++guard) {
        const double deficit = (eta0_nodal.array() - (truncated.array() + r.shift)).maxCoeff();
        if (deficit <= 0.0) break;
        r.shift = std::nextafter(r.shift + deficit, kInfinity);
    }
    Displacement d = basis.displacement(r.coef);
    d.values.array() += r.shift;
    if (d.value_at) {
        auto base = d.value_at;
        const double shift = r.shift;
        d.value_at = [base, shift](double a, double b) { return base(a, b) + shift; };
    }
    if (d.sup_norm() >= s.kappa)
        throw DegenerationError("space_mollify: shifted field leaves the tubular neighbourhood",
                                kInfinity);
    r.field = std::move(d);
    return r;
}

SteklovFieldResult time_steklov_field(const ReferenceSurface& s, const VolumeQuadrature& q,
                                      const SteklovHistory& hist, double eps, double t) {
    if (hist.phi.size() != hist.delta.size())
        throw ArgumentError("time_steklov_field: history size mismatch");
    std::vector<double> wts;
    SteklovFieldResult out;
    window_weights(hist.t0, hist.dt, static_cast<int>(hist.delta.size()), eps, t, wts,
                   out.clipped);
    const int n = q.count();
    std::vector<Vec3> acc(n, Vec3::Zero());
    for (size_t i = 0; i < hist.delta.size(); ++i) {
        if (wts[i] == 0.0) continue;
        const HanzawaMap map(s, hist.delta[i]);
        const DeformedQuadrature d = deform(q, map);
        const std::vector<Vec3> ref = pullback(d, hist.phi[i]);
        for (int k = 0; k < n; ++k) acc[k] += (wts[i] / eps) * ref[k];
    }
    // interpolate delta at t for the outgoing pushforward
    const double pos = (t - hist.t0) / hist.dt;
    const int i0 = std::max(0, std::min(static_cast<int>(hist.delta.size()) - 1,
                                        static_cast<int>(std::lround(pos))));
    const HanzawaMap map_t(s, hist.delta[i0]);
    const DeformedQuadrature dt_ = deform(q, map_t);
    out.field = pushforward(dt_, acc);
    return out;
}

SteklovScalarResult time_steklov_scalar(const ReferenceSurface& s,
                                        const SteklovHistory& hist, double eps, double t) {
    if (hist.b.size() != hist.delta.size())
        throw ArgumentError("time_steklov_scalar: history size mismatch");
    std::vector<double> wts;
    SteklovScalarResult out;
    window_weights(hist.t0, hist.dt, static_cast<int>(hist.delta.size()), eps, t, wts,
                   out.clipped);
    const int n = s.node_count();
    VecX acc = VecX::Zero(n);
    for (size_t i = 0; i < hist.delta.size(); ++i) {
        if (wts[i] == 0.0) continue;
        const HanzawaMap map(s, hist.delta[i]);
        for (int k = 0; k < n; ++k) acc[k] += (wts[i] / eps) * map.det(k, 0.0) * hist.b[i][k];
    }
    const double pos = (t - hist.t0) / hist.dt;
    const int i0 = std::max(0, std::min(static_cast<int>(hist.delta.size()) - 1,
                                        static_cast<int>(std::lround(pos))));
    const HanzawaMap map_t(s, hist.delta[i0]);
    out.value.resize(n);
    for (int k = 0; k < n; ++k) out.value[k] = acc[k] / map_t.det(k, 0.0);
    return out;
}

MollifiedData mollify_initial_data(const ReferenceSurface& s, const ShellBasis& basis,
                                   const InitialData& data, double eps, double compat_tol) {
    MollifiedData out;
    Displacement eta0_d = Displacement::zero(s);
    eta0_d.values = data.eta0;
    // raw compatibility of (eta1, eta0)
    out.compat_residual_in = gamma_moment(s, eta0_d, data.eta1);
    const double scale =
        std::max(1.0, data.eta1.cwiseAbs().maxCoeff() * s.measure);
    if (std::abs(out.compat_residual_in) > compat_tol * scale)
        throw ArgumentError("mollify_initial_data: incompatible raw data, gamma moment = " +
                            std::to_string(out.compat_residual_in));
    out.eta0_reg = space_mollify(s, basis, data.eta0, eps);
    // truncate eta1 at the same cutoff, then restore compatibility
    MollifyResult m1 = space_mollify(s, basis, data.eta1, eps);
    const VecX eta1_smooth = (m1.field.values.array() - m1.shift).matrix();  // pure truncation
    out.eta1_eps = orth_correct(s, out.eta0_reg.field, eta1_smooth);
    // u0 is smooth and supported in Omega_{eta0} subset Omega_{R eta0}
    out.u0_eps = data.u0;
    return out;
}

}  // namespace kfsi
