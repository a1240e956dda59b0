// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "kfsi/stress_law.hpp"

using namespace kfsi;

TEST_CASE("pointwise evaluation of the model law") {
    SUBCASE("zero shear rate maps to zero") {
        const StressLaw law{1.0, 1.0, 2.5, 0.0};
        CHECK(law.eval(Mat3::Zero()).norm() == 0.0);
    }
    SUBCASE("removable singularity at delta = 0, p < 2") {
        const StressLaw law{1.0, 0.0, 1.5, 0.0};
        CHECK(law.eval(Mat3::Zero()).norm() == 0.0);
        Mat3 D = Mat3::Identity() * 1e-12;
        CHECK(std::isfinite(law.eval(D).norm()));
    }
    SUBCASE("p = 2 is the Newtonian core") {
        const StressLaw law{1.7, 0.3, 2.0, 0.2};
        std::mt19937_64 rng(1);
        for (int t = 0; t < 20; ++t) {
            const Mat3 D = 3.0 * random_unit_symmetric(rng);
            const Mat3 expected = 1.7 * D + 0.2 * D.squaredNorm() * D;
            CHECK((law.eval(D) - expected).norm() < 1e-14 * expected.norm());
        }
    }
    SUBCASE("direct substitution: mu0=1, delta=1, p=3, |D|=1 gives S = 2D") {
        const StressLaw law{1.0, 1.0, 3.0, 0.0};
        Mat3 D = Mat3::Zero();
        D(0, 0) = 1.0 / std::sqrt(2.0);
        D(1, 1) = -1.0 / std::sqrt(2.0);
        CHECK((law.eval(D) - 2.0 * D).norm() == 0.0);
    }
    SUBCASE("invalid parameters are rejected with the full issue list") {
        const StressLaw law{-1.0, -2.0, 1.0, -0.5};
        CHECK_THROWS_AS(law.validate(), ConfigError);
        try {
            law.validate();
        } catch (const ConfigError& e) {
            CHECK(e.issues.size() == 4);
        }
    }
}

TEST_CASE("structure certification") {
    SUBCASE("model law certifies with c0 = c1 = mu0") {
        const StressLaw law{2.2, 0.7, 2.3, 0.0};
        const StructureReport rep = certify_structure(law, 4000, 99);
        CHECK(rep.passed);
        CHECK(rep.c0 == doctest::Approx(2.2).epsilon(1e-13));
        CHECK(rep.c1 == doctest::Approx(2.2).epsilon(1e-13));
        CHECK(rep.monotone);
    }
    SUBCASE("regularized law remains monotone") {
        StressLaw law{1.0, 0.0, 1.4, 0.0};
        law.eps_tilde = 1e-2;
        CHECK(certify_structure(law, 3000, 4).monotone);
    }
    SUBCASE("a non-monotone fixture fails with a witness pair") {
        const StructureReport rep =
            certify_structure([](const Mat3& D) { return Mat3(-D); }, 1.0, 2.0, 100, 7);
        CHECK(!rep.passed);
        CHECK(!rep.monotone);
        CHECK((rep.witness_D - rep.witness_E).norm() > 0.0);
        CHECK(rep.witness_product <= 0.0);
    }
}

TEST_CASE("stress invariants") {
    const StressLaw law{1.0, 0.4, 2.8, 1e-3};
    std::mt19937_64 rng(13);
    SUBCASE("odd map and nonnegative duality") {
        for (int t = 0; t < 100; ++t) {
            const Mat3 D = std::pow(10.0, -4 + 0.08 * t) * random_unit_symmetric(rng);
            CHECK((law.eval(-D) + law.eval(D)).norm() == 0.0);
            CHECK(law.eval(D).cwiseProduct(D).sum() >= 0.0);
        }
    }
    SUBCASE("frame indifference under random rotations") {
        std::normal_distribution<double> gauss;
        for (int t = 0; t < 50; ++t) {
            const Mat3 D = 2.0 * random_unit_symmetric(rng);
            Mat3 A;
            for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = gauss(rng);
            Mat3 Q = Eigen::HouseholderQR<Mat3>(A).householderQ();
            if (Q.determinant() < 0) Q.col(0) *= -1;
            const Mat3 lhs = law.eval(Q * D * Q.transpose());
            const Mat3 rhs = Q * law.eval(D) * Q.transpose();
            CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, rhs.norm()));
        }
    }
}

TEST_CASE("minty probe") {
    const StressLaw model{1.0, 1.0, 2.6, 0.0};
    auto law = [&](const Mat3& D) { return model.eval(D); };
    std::mt19937_64 rng(21);
    const Mat3 A = 1.3 * random_unit_symmetric(rng);
    SUBCASE("constant sequence converges at step zero") {
        const std::vector<Mat3> seq(10, A);
        const MintyReport rep = minty_probe(law, A, seq);
        CHECK(rep.conclusive);
        CHECK(rep.converged);
        CHECK(rep.first_converged_index == 0);
    }
    SUBCASE("1/n perturbations converge at the expected rate") {
        const Mat3 E = random_unit_symmetric(rng);
        std::vector<Mat3> seq;
        for (int n = 1; n <= 2000; ++n) seq.push_back(A + E / n);
        const MintyReport rep = minty_probe(law, A, seq);
        CHECK(rep.conclusive);
        CHECK(rep.converged);
        CHECK(rep.tail_max_distance <= 1.0 / 1500.0);
    }
    SUBCASE("a sequence violating the premise is inconclusive, not a failure") {
        std::vector<Mat3> seq(30, A + random_unit_symmetric(rng));
        const MintyReport rep = minty_probe(law, A, seq);
        CHECK(!rep.conclusive);
        CHECK(!rep.converged);
    }
}
