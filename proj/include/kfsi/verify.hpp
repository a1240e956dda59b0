// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kfsi/config.hpp"

namespace kfsi {

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string cmp;  // "<=" or ">="
    std::string detail;
};

struct VerifyOptions {
    unsigned seed = 1234;
    bool quick = false;  // reduced sizes for unit-test runs
};

// suite in {geometry, shell, stress, transform, compat, energy, all}
std::vector<CheckResult> verify_suite(const std::string& suite, const VerifyOptions& opt);
std::string verify_json(const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

// Geometric oracles, deliberately independent of the quadrature path they
// cross-check: plain triangle geometry on a sampled offset surface and the
// polar-fiber volume formula.
struct OffsetAreaOracle {
    double raw_area = 0.0;   // sum of triangle areas
    double flux_area = 0.0;  // triangle vector areas projected on the reference normal
};
OffsetAreaOracle offset_area_oracle(const ReferenceSurface& s,
                                    const std::function<double(double, double)>& eta,
                                    int n1, int n2);
double offset_volume_oracle(const ReferenceSurface& s, const VecX& eta_nodal);

// Measured convergence order from a dyadic refinement of errors (least
// squares slope of log2 error against level).
double fit_order(const std::vector<double>& errors);

}  // namespace kfsi
