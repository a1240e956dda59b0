// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <random>

#include "kfsi/types.hpp"

namespace kfsi {

// Generalized Newtonian extra stress S(D) = mu0 (delta + |D|)^(p-2) D together
// with its regularization S(D) + eps_tilde |D|^2 D. The structure constants
// c0, c1 are certified numerically, never assumed.
struct StressLaw {
    double mu0 = 1.0;
    double delta = 1.0;
    double p = 2.0;
    double eps_tilde = 0.0;

    double p0() const { return std::max(p, 4.0); }
    void validate() const;

    // S_eps(D); removable singularity at D = 0 for delta = 0, p < 2.
    Mat3 eval(const Mat3& D) const;
    // model law without the eps_tilde term
    Mat3 eval_core(const Mat3& D) const;
};

struct StructureSample {
    double dnorm = 0.0;
    double growth_ratio = 0.0;
    double coercivity_ratio = 0.0;
};

struct StructureReport {
    bool passed = false;
    double c0 = 0.0;  // growth constant:   |S(D)| <= c0 (delta+|D|)^(p-2) |D|
    double c1 = 0.0;  // coercivity:        S(D):D >= c1 (delta+|D|)^(p-2) |D|^2
    StructureSample extremal_growth, extremal_coercivity;
    long sample_count = 0;
    // populated on monotonicity failure
    bool monotone = true;
    Mat3 witness_D = Mat3::Zero(), witness_E = Mat3::Zero();
    double witness_product = 0.0;
};

using StressFn = std::function<Mat3(const Mat3&)>;

// Empirical certification of the p-structure bullets over log-uniformly
// scaled random symmetric matrices, |D| in [1e-8, 1e8].
StructureReport certify_structure(const StressLaw& law, long sample_count,
                                  unsigned seed = 2024);
StructureReport certify_structure(const StressFn& law, double delta, double p,
                                  long sample_count, unsigned seed = 2024);

struct MintyReport {
    bool conclusive = false;  // premise (duality products -> 0) held numerically
    bool converged = false;   // |A_n - A| -> 0
    int first_converged_index = -1;
    double tail_max_distance = 0.0;
    double tail_max_product = 0.0;
};

// Monotone-limit probe: given a trial sequence A_n with
// (S(A_n)-S(A)):(A_n-A) -> 0, verify A_n -> A.
MintyReport minty_probe(const StressFn& law, const Mat3& A,
                        const std::vector<Mat3>& trial_sequence,
                        double tol = 1e-6);

// Random symmetric matrix with unit Frobenius norm.
Mat3 random_unit_symmetric(std::mt19937_64& rng, int dim = 3);

}  // namespace kfsi
