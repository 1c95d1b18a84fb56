#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "genbound/core.hpp"

namespace genbound {
namespace {

using testing::population;
using testing::sampled;

StudyData two_by_two() {
    return StudyData({sampled("t1", true, 1.0), sampled("t2", true, 2.0), sampled("c1", false, 0.0),
                      sampled("c2", false, 1.0)},
                     {-2.0, 3.0});
}

TEST(EstimateSate, TwoPointArms) {
    const auto s = estimate_sate(two_by_two());
    EXPECT_DOUBLE_EQ(s.estimate, 1.0);
    // s1^2 = s0^2 = 0.5, se = sqrt(0.5/2 + 0.5/2)
    EXPECT_NEAR(s.se, std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(s.ci_lo, 1.0 - 1.959964 * std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(s.ci_hi - s.ci_lo, 2 * 1.959964 * s.se, 1e-14);
}

TEST(EstimateSate, ConstantOutcomes) {
    const StudyData d({sampled("a", true, 0.3), sampled("b", true, 0.3), sampled("c", false, 0.3),
                       sampled("d", false, 0.3), population("e")},
                      {-1.0, 1.0});
    const auto s = estimate_sate(d);
    EXPECT_EQ(s.estimate, 0.0);
    EXPECT_EQ(s.se, 0.0);
    EXPECT_EQ(s.ci_lo, s.ci_hi);
}

TEST(EstimateSate, MissingArm) {
    const StudyData d({sampled("a", true, 0.3), sampled("b", true, 0.1)}, {-1.0, 1.0});
    try {
        estimate_sate(d);
        FAIL() << "expected MissingArm";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingArm);
    }
}

TEST(EstimateSate, DegenerateArm) {
    const StudyData d({sampled("a", true, 0.3), sampled("b", true, 0.1), sampled("c", false, 0.0)}, {-1.0, 1.0});
    try {
        estimate_sate(d);
        FAIL() << "expected DegenerateArm";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateArm);
    }
}

TEST(StudyDataInvariants, RejectsMalformedUnits) {
    auto bad = population("p");
    bad.w = true;
    EXPECT_THROW(StudyData({sampled("a", true, 0.0), bad}, {-1.0, 1.0}), Error);
    EXPECT_THROW(StudyData({sampled("a", true, 5.0)}, {-1.0, 1.0}), Error);
    EXPECT_THROW(StudyData({sampled("a", true, 0.0, {1.0}), population("p", {1.0, 2.0})}, {-1.0, 1.0}), Error);
    EXPECT_THROW(StudyData({sampled("a", true, 0.0)}, {1.0, 1.0}), Error);
    EXPECT_THROW(StudyData({population("p")}, {-1.0, 1.0}), Error);
}

TEST(EstimateSateProperties, PermutationAndShiftInvariance) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = testing::random_study(rng, 40, 12, 0, {-2.0, 2.0});
        std::vector<UnitRecord> units(d.units().begin(), d.units().end());
        std::shuffle(units.begin(), units.end(), rng);
        const StudyData permuted(units, d.range());
        EXPECT_NEAR(estimate_sate(permuted).estimate, estimate_sate(d).estimate, 1e-14);
        EXPECT_NEAR(estimate_sate(permuted).se, estimate_sate(d).se, 1e-14);

        for (auto& u : units)
            if (u.y) *u.y += 3.0;
        const StudyData shifted(units, {1.0, 5.0});
        EXPECT_NEAR(estimate_sate(shifted).estimate, estimate_sate(d).estimate, 1e-12);
    }
}

UnitRecord with_truth(UnitRecord u, double y1, double y0) {
    u.truth = PotentialOutcomes{y1, y0};
    return u;
}

TEST(TruePate, ConstantEffect) {
    const StudyData d({with_truth(sampled("a", true, 1.5), 1.5, 1.0), with_truth(sampled("b", false, 0.2), 0.7, 0.2),
                       with_truth(population("c"), -0.5, -1.0)},
                      {-2.0, 2.0});
    EXPECT_DOUBLE_EQ(true_pate(d), 0.5);
}

TEST(TruePate, FourUnitAverage) {
    const StudyData d({with_truth(sampled("a", true, 1.0), 1.0, 0.0), with_truth(sampled("b", false, 0.0), 1.0, 0.0),
                       with_truth(population("c"), 0.0, 1.0), with_truth(population("d"), -1.0, 0.0)},
                      {-2.0, 2.0});
    EXPECT_DOUBLE_EQ(true_pate(d), 0.0);
}

TEST(TruePate, NotSimulated) {
    const StudyData d({sampled("a", true, 1.0), sampled("b", false, 0.0)}, {-2.0, 2.0});
    try {
        true_pate(d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSimulated);
    }
}

TEST(TruePate, FullSelectionEqualsSate) {
    // Pr(Z = 1) = 1: the PATE is the sample average effect.
    const StudyData d({with_truth(sampled("a", true, 1.0), 1.0, 0.5), with_truth(sampled("b", false, 0.0), 0.4, 0.0)},
                      {-2.0, 2.0});
    EXPECT_DOUBLE_EQ(true_pate(d), true_sate(d));
}

TEST(TruePateProperties, DecompositionBySelection) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> eff(0.5, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto base = testing::random_study(rng, 30, 6, 0);
        std::vector<UnitRecord> units(base.units().begin(), base.units().end());
        double s1 = 0, s0 = 0;
        for (auto& u : units) {
            const double e = eff(rng);
            u.truth = PotentialOutcomes{e, 0.0};
            (u.z ? s1 : s0) += e;
        }
        const StudyData d(units, base.range());
        const double p = d.selection_probability();
        const double expected = p * (s1 / 6.0) + (1 - p) * (s0 / 24.0);
        EXPECT_NEAR(true_pate(d), expected, 1e-12);
    }
}

}  // namespace
}  // namespace genbound
