// SPDX-License-Identifier: Apache-2.0
#include "kfsi/shell_energy.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace kfsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

// <C, A (x) B> = c_tr tr_g(A) tr_g(B) + 4 mu <A, B>_g for symmetric chart tensors
double elasticity_contract(const Sym2& gi, double c_tr, double mu, const Sym2& A,
                           const Sym2& B) {
    const double trA = gi[0] * A[0] + 2.0 * gi[1] * A[1] + gi[2] * A[2];
    const double trB = gi[0] * B[0] + 2.0 * gi[1] * B[1] + gi[2] * B[2];
    // raise both indices of A: A^ = Gi A Gi
    const double a11 = gi[0] * (gi[0] * A[0] + gi[1] * A[1]) + gi[1] * (gi[0] * A[1] + gi[1] * A[2]);
    const double a12 = gi[0] * (gi[1] * A[0] + gi[2] * A[1]) + gi[1] * (gi[1] * A[1] + gi[2] * A[2]);
    const double a22 = gi[1] * (gi[1] * A[0] + gi[2] * A[1]) + gi[2] * (gi[1] * A[1] + gi[2] * A[2]);
    const double inner = a11 * B[0] + 2.0 * a12 * B[1] + a22 * B[2];
    return c_tr * trA * trB + 4.0 * mu * inner;
}

Sym2 covariant_hessian(const ReferenceSurface& s, const Displacement& eta, int node) {
    const auto& gamma = s.christoffel[node];
    const double g1 = eta.grad(node, 0), g2 = eta.grad(node, 1);
    return {eta.hess(node, 0) - gamma[0] * g1 - gamma[3] * g2,
            eta.hess(node, 1) - gamma[1] * g1 - gamma[4] * g2,
            eta.hess(node, 2) - gamma[2] * g1 - gamma[5] * g2};
}

struct ModeSpec {
    double k1 = 0.0, k2 = 0.0;  // chart wavevector
    bool is_sin = false;
    double knorm2() const { return k1 * k1 + k2 * k2; }
};

// Associated Legendre P_l^m(x) (no Condon-Shortley) with first derivative.
void legendre_plm(int l, int m, double x, double& P, double& dPdx) {
    const double somx2 = std::sqrt(std::max(1.0 - x * x, 1e-300));
    double pmm = 1.0;
    for (int i = 1; i <= m; ++i) pmm *= (2.0 * i - 1.0) * somx2;
    if (l == m) {
        P = pmm;
    } else {
        double pmmp1 = x * (2.0 * m + 1.0) * pmm;
        if (l == m + 1) {
            P = pmmp1;
        } else {
            double pll = 0.0;
            for (int ll = m + 2; ll <= l; ++ll) {
                pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
                pmm = pmmp1;
                pmmp1 = pll;
            }
            P = pll;
        }
    }
    // (1-x^2) dP_l^m/dx = (l+m) P_{l-1}^m - l x P_l^m
    double Pprev = 0.0, dummy = 0.0;
    if (l > m) legendre_plm(l - 1, m, x, Pprev, dummy);
    dPdx = ((l + m) * Pprev - l * x * P) / std::max(1.0 - x * x, 1e-300);
}

// inner product <A, B>_g with both indices raised on A
double g_inner(const Sym2& gi, const Sym2& A, const Sym2& B) {
    return 0.25 * elasticity_contract(gi, 0.0, 1.0, A, B);
}

void assemble_matrices(const ReferenceSurface& s, const ElasticParams& params,
                       ShellBasis& basis) {
    const int n = s.node_count();
    const int ns = basis.count;
    basis.mass = MatX::Zero(ns, ns);
    basis.kmat = MatX::Zero(ns, ns);
    basis.h2gram = MatX::Zero(ns, ns);
    const double c_tr = params.trace_modulus();
    const double cm = params.membrane_coeff();
    const double cb = params.bending_coeff();

    // per-mode strain and Hessian fields
    std::vector<std::vector<Sym2>> sig(ns, std::vector<Sym2>(n));
    std::vector<std::vector<Sym2>> xi(ns, std::vector<Sym2>(n));
    for (int j = 0; j < ns; ++j) {
        for (int id = 0; id < n; ++id) {
            const double v = basis.modes(id, j);
            const auto& gamma = s.christoffel[id];
            const double g1 = basis.d1(id, j), g2 = basis.d2(id, j);
            const Sym2 hcov = {basis.h11(id, j) - gamma[0] * g1 - gamma[3] * g2,
                               basis.h12(id, j) - gamma[1] * g1 - gamma[4] * g2,
                               basis.h22(id, j) - gamma[2] * g1 - gamma[5] * g2};
            sig[j][id] = {-s.h[id][0] * v, -s.h[id][1] * v, -s.h[id][2] * v};
            xi[j][id] = {hcov[0] - s.kform[id][0] * v, hcov[1] - s.kform[id][1] * v,
                         hcov[2] - s.kform[id][2] * v};
        }
    }
    for (int id = 0; id < n; ++id) {
        const Sym2 gi = s.g_inv(id);
        const double wq = s.w[id];
        for (int j = 0; j < ns; ++j) {
            for (int k = j; k < ns; ++k) {
                const double mjk = wq * basis.modes(id, j) * basis.modes(id, k);
                basis.mass(j, k) += mjk;
                double kj = 0.5 * wq *
                            (cm * elasticity_contract(gi, c_tr, params.mu, sig[j][id], sig[k][id]) +
                             cb * elasticity_contract(gi, c_tr, params.mu, xi[j][id], xi[k][id]));
                basis.kmat(j, k) += kj;
                // covariant H2 inner product
                const double grad_inner =
                    gi[0] * basis.d1(id, j) * basis.d1(id, k) +
                    gi[1] * (basis.d1(id, j) * basis.d2(id, k) + basis.d2(id, j) * basis.d1(id, k)) +
                    gi[2] * basis.d2(id, j) * basis.d2(id, k);
                const Sym2 hj = {xi[j][id][0] + s.kform[id][0] * basis.modes(id, j),
                                 xi[j][id][1] + s.kform[id][1] * basis.modes(id, j),
                                 xi[j][id][2] + s.kform[id][2] * basis.modes(id, j)};
                const Sym2 hk = {xi[k][id][0] + s.kform[id][0] * basis.modes(id, k),
                                 xi[k][id][1] + s.kform[id][1] * basis.modes(id, k),
                                 xi[k][id][2] + s.kform[id][2] * basis.modes(id, k)};
                basis.h2gram(j, k) += wq * (basis.modes(id, j) * basis.modes(id, k) +
                                            grad_inner + g_inner(gi, hj, hk));
            }
        }
    }
    for (int j = 0; j < ns; ++j)
        for (int k = 0; k < j; ++k) {
            basis.mass(j, k) = basis.mass(k, j);
            basis.kmat(j, k) = basis.kmat(k, j);
            basis.h2gram(j, k) = basis.h2gram(k, j);
        }
}

void add_cap_penalty(const ReferenceSurface& s, ShellBasis& basis, double penalty) {
    if (penalty <= 0.0) return;
    const int ns = basis.count;
    for (int id = 0; id < s.node_count(); ++id) {
        if (!s.clamped[id]) continue;
        const Sym2 gi = s.g_inv(id);
        for (int j = 0; j < ns; ++j)
            for (int k = 0; k < ns; ++k) {
                const double grad_inner =
                    gi[0] * basis.d1(id, j) * basis.d1(id, k) +
                    gi[1] * (basis.d1(id, j) * basis.d2(id, k) + basis.d2(id, j) * basis.d1(id, k)) +
                    gi[2] * basis.d2(id, j) * basis.d2(id, k);
                basis.kmat(j, k) += penalty * s.w[id] *
                                    (basis.modes(id, j) * basis.modes(id, k) + grad_inner);
            }
    }
}

}  // namespace

void ElasticParams::validate() const {
    std::vector<std::string> issues;
    if (!(lambda > 0)) issues.push_back("elastic: lambda must be positive");
    if (!(mu > 0)) issues.push_back("elastic: mu must be positive");
    if (!(eps0 > 0)) issues.push_back("elastic: eps0 must be positive");
    if (!(rho_s > 0)) issues.push_back("elastic: rho_s must be positive");
    if (!(rho_f > 0)) issues.push_back("elastic: rho_f must be positive");
    if (!issues.empty()) throw ConfigError("invalid elastic parameters", issues);
    if (!(bilaplacian_coeff() > 0)) throw ConfigError("elastic: degenerate bending coefficient");
}

Displacement ShellBasis::displacement(const VecX& coef) const {
    if (coef.size() != count) throw ArgumentError("displacement: coefficient size mismatch");
    Displacement d;
    d.values = modes * coef;
    d.grad.resize(modes.rows(), 2);
    d.grad.col(0) = d1 * coef;
    d.grad.col(1) = d2 * coef;
    d.hess.resize(modes.rows(), 3);
    d.hess.col(0) = h11 * coef;
    d.hess.col(1) = h12 * coef;
    d.hess.col(2) = h22 * coef;
    if (!mode_at.empty()) {
        auto vals = std::make_shared<std::vector<std::function<double(double, double)>>>(mode_at);
        auto grads = std::make_shared<std::vector<std::function<Vec2(double, double)>>>(mode_grad_at);
        VecX c = coef;
        d.value_at = [vals, c](double a, double b) {
            double out = 0.0;
            for (int j = 0; j < c.size(); ++j) out += c[j] * (*vals)[j](a, b);
            return out;
        };
        d.grad_at = [grads, c](double a, double b) {
            Vec2 out = Vec2::Zero();
            for (int j = 0; j < c.size(); ++j) out += c[j] * (*grads)[j](a, b);
            return out;
        };
    }
    return d;
}

VecX ShellBasis::project(const VecX& nodal_values) const {
    VecX rhs = VecX::Zero(count);
    for (int j = 0; j < count; ++j) {
        double acc = 0.0;
        for (int id = 0; id < nodal_values.size(); ++id)
            acc += surface->w[id] * nodal_values[id] * modes(id, j);
        rhs[j] = acc;
    }
    return mass.ldlt().solve(rhs);
}

ShellBasis fourier_basis(const ReferenceSurface& s, const ElasticParams& params, int n_s) {
    if (n_s < 1) throw ArgumentError("fourier_basis: n_s must be positive");
    const bool two_d_chart = (s.kind == SurfaceKind::FlatPatch || s.kind == SurfaceKind::Cylinder);
    const bool one_d_chart = (s.kind == SurfaceKind::FlatPatch2d || s.kind == SurfaceKind::Circle);
    if (!two_d_chart && !one_d_chart)
        throw ArgumentError("fourier_basis: surface chart is not periodic");

    // chart wavenumber unit per axis
    const double b1 = 2.0 * kPi / s.len1;
    const double b2 = two_d_chart ? 2.0 * kPi / s.len2 : 0.0;

    std::vector<ModeSpec> specs;
    const int mmax = n_s + 2;
    for (int m = 0; m <= mmax; ++m) {
        for (int n = (two_d_chart ? -mmax : 0); n <= (two_d_chart ? mmax : 0); ++n) {
            if (m == 0 && n <= 0) continue;  // half lattice, no constant
            if (m == 0 && !two_d_chart) continue;
            ModeSpec c{m * b1, n * b2, false};
            specs.push_back(c);
        }
    }
    std::sort(specs.begin(), specs.end(), [](const ModeSpec& a, const ModeSpec& b) {
        if (a.knorm2() != b.knorm2()) return a.knorm2() < b.knorm2();
        if (a.k1 != b.k1) return a.k1 < b.k1;
        return a.k2 < b.k2;
    });
    std::vector<ModeSpec> chosen;
    for (const auto& c : specs) {
        ModeSpec cosm = c, sinm = c;
        sinm.is_sin = true;
        chosen.push_back(cosm);
        if (static_cast<int>(chosen.size()) == n_s) break;
        chosen.push_back(sinm);
        if (static_cast<int>(chosen.size()) == n_s) break;
    }
    if (static_cast<int>(chosen.size()) < n_s)
        throw ArgumentError("fourier_basis: not enough modes enumerated");

    ShellBasis basis;
    basis.surface = &s;
    basis.count = n_s;
    const int n = s.node_count();
    basis.modes.resize(n, n_s);
    basis.d1.resize(n, n_s);
    basis.d2.resize(n, n_s);
    basis.h11.resize(n, n_s);
    basis.h12.resize(n, n_s);
    basis.h22.resize(n, n_s);
    const double norm = std::sqrt(2.0 / s.measure);
    for (int j = 0; j < n_s; ++j) {
        const ModeSpec& c = chosen[j];
        basis.wavenumber.push_back(std::sqrt(c.knorm2()));
        for (int i1 = 0; i1 < s.n1; ++i1)
            for (int i2 = 0; i2 < s.n2; ++i2) {
                const int id = s.idx(i1, i2);
                const double phase = c.k1 * s.u1[i1] + c.k2 * s.u2[i2];
                const double v = c.is_sin ? std::sin(phase) : std::cos(phase);
                const double dv = c.is_sin ? std::cos(phase) : -std::sin(phase);
                basis.modes(id, j) = norm * v;
                basis.d1(id, j) = norm * dv * c.k1;
                basis.d2(id, j) = norm * dv * c.k2;
                basis.h11(id, j) = -norm * v * c.k1 * c.k1;
                basis.h12(id, j) = -norm * v * c.k1 * c.k2;
                basis.h22(id, j) = -norm * v * c.k2 * c.k2;
            }
        const double k1 = c.k1, k2 = c.k2;
        const bool is_sin = c.is_sin;
        basis.mode_at.push_back([=](double a, double b) {
            const double ph = k1 * a + k2 * b;
            return norm * (is_sin ? std::sin(ph) : std::cos(ph));
        });
        basis.mode_grad_at.push_back([=](double a, double b) {
            const double ph = k1 * a + k2 * b;
            const double dv = is_sin ? std::cos(ph) : -std::sin(ph);
            return Vec2(norm * dv * k1, norm * dv * k2);
        });
    }
    assemble_matrices(s, params, basis);
    return basis;
}

ShellBasis sphere_basis(const ReferenceSurface& s, const ElasticParams& params, int n_s,
                        double cap_penalty) {
    if (s.kind != SurfaceKind::Sphere) throw ArgumentError("sphere_basis: not a sphere");
    ShellBasis basis;
    basis.surface = &s;
    basis.count = n_s;
    const int n = s.node_count();
    basis.modes.resize(n, n_s);
    basis.d1.resize(n, n_s);
    basis.d2.resize(n, n_s);
    basis.h11.resize(n, n_s);
    basis.h12.resize(n, n_s);
    basis.h22.resize(n, n_s);
    const double R = s.kappa;

    struct Harm {
        int l, m;
        bool is_sin;
    };
    std::vector<Harm> chosen;
    for (int l = 1; static_cast<int>(chosen.size()) < n_s; ++l) {
        for (int m = 0; m <= l && static_cast<int>(chosen.size()) < n_s; ++m) {
            chosen.push_back({l, m, false});
            if (m > 0 && static_cast<int>(chosen.size()) < n_s) chosen.push_back({l, m, true});
        }
        if (l > 64) throw ArgumentError("sphere_basis: basis request too large");
    }
    for (int j = 0; j < n_s; ++j) {
        const auto [l, m, is_sin] = chosen[j];
        basis.wavenumber.push_back(static_cast<double>(l));
        double lognum = std::lgamma(l - m + 1.0) - std::lgamma(l + m + 1.0);
        double Nlm = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * std::exp(lognum));
        if (m > 0) Nlm *= std::sqrt(2.0);
        Nlm /= R;  // unit L2(dA) norm on the radius-R sphere
        for (int i1 = 0; i1 < s.n1; ++i1) {
            const double th = s.u1[i1];
            const double x = std::cos(th), st = std::sin(th);
            double P, dPdx;
            legendre_plm(l, m, x, P, dPdx);
            const double u = Nlm * P;                 // theta part
            const double du = -Nlm * dPdx * st;       // d/dtheta
            // Legendre ODE: u'' = -cot(theta) u' - (l(l+1) - m^2/sin^2) u
            const double ddu = -(x / st) * du - (l * (l + 1.0) - m * m / (st * st)) * u;
            for (int i2 = 0; i2 < s.n2; ++i2) {
                const int id = s.idx(i1, i2);
                const double ph = m * s.u2[i2];
                const double t = is_sin ? std::sin(ph) : std::cos(ph);
                const double dt = m * (is_sin ? std::cos(ph) : -std::sin(ph));
                const double ddt = -m * m * t;
                basis.modes(id, j) = u * t;
                basis.d1(id, j) = du * t;
                basis.d2(id, j) = u * dt;
                basis.h11(id, j) = ddu * t;
                basis.h12(id, j) = du * dt;
                basis.h22(id, j) = u * ddt;
            }
        }
    }
    assemble_matrices(s, params, basis);
    add_cap_penalty(s, basis, cap_penalty);
    return basis;
}

ShellBasis make_shell_basis(const ReferenceSurface& s, const ElasticParams& params, int n_s) {
    switch (s.kind) {
        case SurfaceKind::FlatPatch:
        case SurfaceKind::FlatPatch2d:
        case SurfaceKind::Circle:
        case SurfaceKind::Cylinder:
            return fourier_basis(s, params, n_s);
        case SurfaceKind::Sphere:
            return sphere_basis(s, params, n_s, 0.0);
        default:
            throw ArgumentError("make_shell_basis: unsupported surface kind");
    }
}

std::vector<Sym2> strain_sigma(const ReferenceSurface& s, const Displacement& eta) {
    std::vector<Sym2> out(s.node_count());
    for (int id = 0; id < s.node_count(); ++id) {
        const double v = eta.values[id];
        out[id] = {-s.h[id][0] * v, -s.h[id][1] * v, -s.h[id][2] * v};
    }
    return out;
}

std::vector<Sym2> strain_xi(const ReferenceSurface& s, const Displacement& eta) {
    std::vector<Sym2> out(s.node_count());
    for (int id = 0; id < s.node_count(); ++id) {
        const Sym2 hcov = covariant_hessian(s, eta, id);
        const double v = eta.values[id];
        out[id] = {hcov[0] - s.kform[id][0] * v, hcov[1] - s.kform[id][1] * v,
                   hcov[2] - s.kform[id][2] * v};
    }
    return out;
}

double koiter_form(const ReferenceSurface& s, const ElasticParams& params,
                   const Displacement& a, const Displacement& b) {
    const auto sa = strain_sigma(s, a), sb = strain_sigma(s, b);
    const auto xa = strain_xi(s, a), xb = strain_xi(s, b);
    const double c_tr = params.trace_modulus();
    double acc = 0.0;
    for (int id = 0; id < s.node_count(); ++id) {
        const Sym2 gi = s.g_inv(id);
        acc += s.w[id] * (params.membrane_coeff() *
                              elasticity_contract(gi, c_tr, params.mu, sa[id], sb[id]) +
                          params.bending_coeff() *
                              elasticity_contract(gi, c_tr, params.mu, xa[id], xb[id]));
    }
    return 0.5 * acc;
}

double coercivity_estimate(const ReferenceSurface& s, const ElasticParams& params,
                           const ShellBasis& basis) {
    (void)s;
    (void)params;
    Eigen::GeneralizedSelfAdjointEigenSolver<MatX> solver(basis.kmat, basis.h2gram);
    if (solver.info() != Eigen::Success)
        throw ConfigError("coercivity_estimate: generalized eigensolve failed");
    const double c0 = solver.eigenvalues().minCoeff();
    if (!(c0 > 0.0))
        throw ConfigError("coercivity_estimate: nonpositive Rayleigh quotient " +
                          std::to_string(c0) + " (broken clamping or quadrature)");
    return c0;
}

VecX l2_gradient_apply(const ReferenceSurface& s, const ElasticParams& params,
                       const ShellBasis& basis, const Displacement& eta) {
    VecX rhs(basis.count);
    for (int j = 0; j < basis.count; ++j) {
        VecX cj = VecX::Zero(basis.count);
        cj[j] = 1.0;
        rhs[j] = 2.0 * koiter_form(s, params, eta, basis.displacement(cj));
    }
    Eigen::LDLT<MatX> ldlt(basis.mass);
    if (ldlt.info() != Eigen::Success)
        throw ConfigError("l2_gradient_apply: singular mass matrix");
    const VecX coef = ldlt.solve(rhs);
    return basis.nodal(coef);
}

}  // namespace kfsi
