// SPDX-License-Identifier: Apache-2.0
#include "kfsi/stress_law.hpp"

#include <cmath>

namespace kfsi {

void StressLaw::validate() const {
    std::vector<std::string> issues;
    if (!(mu0 > 0)) issues.push_back("stress: mu0 must be positive");
    if (!(delta >= 0)) issues.push_back("stress: delta must be nonnegative");
    if (!(p > 6.0 / 5.0)) issues.push_back("stress: exponent p must exceed 6/5");
    if (!(eps_tilde >= 0)) issues.push_back("stress: eps_tilde must be nonnegative");
    if (!issues.empty()) throw ConfigError("invalid stress law", issues);
}

Mat3 StressLaw::eval_core(const Mat3& D) const {
    const double dn = D.norm();
    if (dn == 0.0) return Mat3::Zero();  // removable singularity for delta = 0, p < 2
    return mu0 * std::pow(delta + dn, p - 2.0) * D;
}

Mat3 StressLaw::eval(const Mat3& D) const {
    Mat3 out = eval_core(D);
    if (eps_tilde > 0.0) {
        const double dn = D.norm();
        out += eps_tilde * dn * dn * D;
    }
    return out;
}

Mat3 random_unit_symmetric(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat3 A = Mat3::Zero();
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double v = gauss(rng);
            A(i, j) = v;
            A(j, i) = v;
        }
    const double n = A.norm();
    if (n == 0.0) return random_unit_symmetric(rng, dim);
    return A / n;
}

StructureReport certify_structure(const StressFn& law, double delta, double p,
                                  long sample_count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-8.0, 8.0);
    StructureReport rep;
    rep.sample_count = sample_count;
    rep.c0 = 0.0;
    rep.c1 = kInfinity;
    for (long i = 0; i < sample_count; ++i) {
        const double scale = std::pow(10.0, unif(rng));
        const Mat3 D = scale * random_unit_symmetric(rng);
        const Mat3 S = law(D);
        const double dn = D.norm();
        const double envelope = std::pow(delta + dn, p - 2.0) * dn;
        if (envelope <= 0.0) continue;
        const double growth = S.norm() / envelope;
        const double coer = S.cwiseProduct(D).sum() / (envelope * dn);
        if (growth > rep.c0) {
            rep.c0 = growth;
            rep.extremal_growth = {dn, growth, coer};
        }
        if (coer < rep.c1) {
            rep.c1 = coer;
            rep.extremal_coercivity = {dn, growth, coer};
        }
    }
    // strict monotonicity on random pairs spanning the same scales
    for (long i = 0; i < sample_count; ++i) {
        const double sD = std::pow(10.0, unif(rng));
        const double sE = std::pow(10.0, unif(rng));
        const Mat3 D = sD * random_unit_symmetric(rng);
        const Mat3 E = sE * random_unit_symmetric(rng);
        if ((D - E).norm() == 0.0) continue;
        const Mat3 dS = law(D) - law(E);
        const double prod = dS.cwiseProduct(D - E).sum();
        if (!(prod > 0.0)) {
            rep.monotone = false;
            rep.witness_D = D;
            rep.witness_E = E;
            rep.witness_product = prod;
            break;
        }
    }
    rep.passed = rep.monotone && rep.c1 > 0.0 && std::isfinite(rep.c0);
    return rep;
}

StructureReport certify_structure(const StressLaw& law, long sample_count,
                                  unsigned seed) {
    law.validate();
    return certify_structure([&law](const Mat3& D) { return law.eval(D); }, law.delta,
                             law.p, sample_count, seed);
}

MintyReport minty_probe(const StressFn& law, const Mat3& A,
                        const std::vector<Mat3>& trial_sequence, double tol) {
    MintyReport rep;
    if (trial_sequence.empty()) {
        rep.conclusive = true;
        rep.converged = true;
        rep.first_converged_index = 0;
        return rep;
    }
    const Mat3 SA = law(A);
    std::vector<double> products(trial_sequence.size()), dists(trial_sequence.size());
    for (size_t i = 0; i < trial_sequence.size(); ++i) {
        const Mat3 diff = trial_sequence[i] - A;
        products[i] = (law(trial_sequence[i]) - SA).cwiseProduct(diff).sum();
        dists[i] = diff.norm();
    }
    // premise check on the tail quarter of the sequence
    const size_t tail = std::max<size_t>(1, trial_sequence.size() / 4);
    double pmax = 0.0, dmax = 0.0;
    for (size_t i = trial_sequence.size() - tail; i < trial_sequence.size(); ++i) {
        pmax = std::max(pmax, std::abs(products[i]));
        dmax = std::max(dmax, dists[i]);
    }
    rep.tail_max_product = pmax;
    rep.tail_max_distance = dmax;
    const double scale = std::max(1.0, A.norm());
    rep.conclusive = pmax <= tol * scale;
    rep.converged = rep.conclusive && dmax <= std::sqrt(tol) * scale;
    if (rep.converged) {
        for (size_t i = 0; i < dists.size(); ++i) {
            if (dists[i] <= std::sqrt(tol) * scale) {
                rep.first_converged_index = static_cast<int>(i);
                break;
            }
        }
    }
    return rep;
}

}  // namespace kfsi
