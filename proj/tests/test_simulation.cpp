#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "genbound/simulation.hpp"

namespace genbound::sim {
namespace {

double corr(const std::vector<CovariateRow>& x, std::size_t a, std::size_t b) {
    std::vector<double> u, v;
    for (const auto& r : x) u.push_back(r[a]), v.push_back(r[b]);
    const double mu = stats::mean(u), mv = stats::mean(v);
    double suv = 0, suu = 0, svv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        suv += (u[i] - mu) * (v[i] - mv);
        suu += (u[i] - mu) * (u[i] - mu);
        svv += (v[i] - mv) * (v[i] - mv);
    }
    return suv / std::sqrt(suu * svv);
}

TEST(Covariates, CorrelationAndMeans) {
    SimConfig cfg;
    Engine rng = child_engine(1, 0);
    const auto x = generate_covariates(cfg, rng);
    ASSERT_EQ(x.size(), 2000u);
    EXPECT_NEAR(corr(x, 0, 1), 0.5, 0.06);
    EXPECT_NEAR(corr(x, 0, 2), 0.25, 0.07);
    EXPECT_NEAR(corr(x, 1, 3), 0.25, 0.07);
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> col;
        for (const auto& r : x) col.push_back(r[j]);
        EXPECT_NEAR(stats::mean(col), 0.0, 0.07) << "column " << j;
        EXPECT_NEAR(stats::stddev(col), 1.0, 0.07) << "column " << j;
    }
}

TEST(Covariates, IndependenceHook) {
    SimConfig cfg;
    cfg.independent_covariates = true;
    Engine rng = child_engine(2, 0);
    const auto x = generate_covariates(cfg, rng);
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b) EXPECT_NEAR(corr(x, a, b), 0.0, 0.07);
}

TEST(Covariates, SanctionedRhosArePositiveDefinite) {
    for (double rho : {0.0, 0.25, 0.5}) EXPECT_NO_THROW(cholesky_factor(correlation_matrix(rho)));
    try {
        cholesky_factor(correlation_matrix(0.99));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }
}

TEST(Selection, ExpitExamples) {
    EXPECT_EQ(stats::expit(0.0), 0.5);
    EXPECT_NEAR(selection_probability({1.0, 0.0, 0.0, 0.0}, {0.4, 0.4, 1.0}), 0.6900, 1e-4);
}

TEST(Selection, EligibleCountAndSampleSize) {
    SimConfig cfg;
    Engine rng = child_engine(3, 0);
    const auto x = generate_covariates(cfg, rng);
    double expected = 0.0;
    for (const auto& r : x) expected += selection_probability(r, cfg.effective_beta());
    // 2000 * E[expit(0.4 x1 + 0.4 x1^2 + x2)] = 1123.1 by numerical integration; the
    // squared term lifts the eligible share above one half.
    EXPECT_NEAR(expected, 1123.1, 75.0);
    const auto z = select_sample(x, cfg, rng);
    EXPECT_EQ(std::count(z.begin(), z.end(), true), 100);
}

TEST(Selection, InsufficientEligible) {
    SimConfig cfg;
    cfg.beta = std::array<double, 3>{0.0, -50.0, 0.0};  // expit(-50 x^2): almost nobody eligible
    cfg.N = 200;
    Engine rng = child_engine(4, 0);
    std::vector<CovariateRow> x(200, CovariateRow{3.0, 0.0, 0.0, 0.0});
    try {
        select_sample(x, cfg, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientEligible);
    }
}

TEST(Treatment, HalfTreated) {
    Engine rng = child_engine(5, 0);
    std::vector<bool> z(2000, false);
    for (std::size_t i = 0; i < 100; ++i) z[i * 20] = true;
    const auto w = assign_treatment(z, rng);
    int t = 0, c = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!z[i]) {
            EXPECT_FALSE(w[i].has_value());
            continue;
        }
        (*w[i] ? t : c)++;
    }
    EXPECT_EQ(t, 50);
    EXPECT_EQ(c, 50);

    std::vector<bool> two{true, false, true};
    const auto w2 = assign_treatment(two, rng);
    EXPECT_NE(*w2[0], *w2[2]);
}

TEST(Treatment, OddSample) {
    Engine rng = child_engine(6, 0);
    try {
        assign_treatment({true, true, true, false}, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OddSampleSize);
    }
}

// Arm mean differences have SD about sqrt(2/50) = 0.2, so +-0.5 is a 2.5 SD band.
TEST(Treatment, CovariateBalance) {
    SimConfig cfg;
    int within = 0, total = 0;
    double sum = 0.0;
    for (std::size_t r = 0; r < 40; ++r) {
        const auto rep = generate_replicate(cfg, r);
        for (std::size_t j = 0; j < 4; ++j) {
            double st = 0, sc = 0;
            for (const auto& u : rep.units)
                if (u.record.z) (*u.record.w ? st : sc) += u.record.x[j];
            const double diff = st / 50.0 - sc / 50.0;
            within += std::abs(diff) <= 0.5;
            sum += diff;
            ++total;
        }
    }
    EXPECT_GE(within, static_cast<int>(0.95 * total));
    EXPECT_NEAR(sum / total, 0.0, 0.1);
}

TEST(Outcomes, FormulaAndClip) {
    const auto po = outcome_model(1.0, 1.0, {0.1, 1.0});
    EXPECT_NEAR(po.y1, 3.2, 1e-12);
    EXPECT_NEAR(po.y0, 1.1, 1e-12);
    SimConfig cfg;
    Engine rng = child_engine(7, 0);
    const std::vector<CovariateRow> x{{1.0, 1.0, 0.0, 0.0}, {1.0, 1.0, 0.0, 0.0}};
    const auto units = generate_outcomes(x, {true, false}, {true, std::nullopt}, cfg, rng);
    EXPECT_EQ(units[0].record.truth->y1, 2.0);
    EXPECT_NEAR(units[0].record.truth->y0, 1.1, 1e-12);
    EXPECT_EQ(*units[0].record.y, 2.0);
    EXPECT_EQ(units[1].record.truth->y1, 1.0);  // study 1 population clip
    EXPECT_EQ(units[1].record.truth->y0, 1.0);
}

TEST(Outcomes, DeltaEndpoints) {
    for (double delta : {0.0, 1.0}) {
        SimConfig cfg;
        cfg.delta = delta;
        const auto rep = generate_replicate(cfg, 0);
        std::size_t flagged = 0;
        for (const auto& u : rep.units) {
            if (u.record.z) {
                EXPECT_FALSE(u.ignorability_violated);
            }
            flagged += u.ignorability_violated;
        }
        EXPECT_EQ(flagged, delta == 0.0 ? 0u : 1900u);
        EXPECT_EQ(rep.violated_fraction(), delta);
    }
}

TEST(Outcomes, ClipRangesByStudy) {
    for (int study : {1, 2}) {
        SimConfig cfg;
        cfg.study = study;
        cfg.delta = 0.6;
        const auto rep = generate_replicate(cfg, 3);
        const double pc = study == 1 ? 1.0 : 2.0;
        bool population_hits_two = false;
        for (const auto& u : rep.units) {
            const double c = u.record.z ? 2.0 : pc;
            EXPECT_LE(std::abs(u.record.truth->y1), c);
            EXPECT_LE(std::abs(u.record.truth->y0), c);
            if (!u.record.z && u.record.truth->y1 > 1.0) population_hits_two = true;
        }
        EXPECT_EQ(population_hits_two, study == 2);
    }
}

TEST(Outcomes, SateInvariantAcrossDelta) {
    for (std::size_t r = 0; r < 5; ++r) {
        std::vector<double> sates;
        for (double delta : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            SimConfig cfg;
            cfg.study = 2;
            cfg.delta = delta;
            sates.push_back(estimate_sate(generate_replicate(cfg, r).study_data({-2.0, 2.0})).estimate);
        }
        for (double s : sates) EXPECT_EQ(s, sates.front());
    }
}

TEST(Outcomes, MssMostlyFailsInStudyTwo) {
    SimConfig cfg;
    cfg.study = 2;
    cfg.delta = 1.0;
    const auto rep = generate_replicate(cfg, 0);
    EXPECT_GE(rep.mss_hold_fraction(), 0.0);
    EXPECT_LE(rep.mss_hold_fraction(), 1.0);
}

TEST(Replicate, Deterministic) {
    SimConfig cfg;
    cfg.delta = 0.4;
    const auto a = generate_replicate(cfg, 9);
    const auto b = generate_replicate(cfg, 9);
    ASSERT_EQ(a.units.size(), b.units.size());
    for (std::size_t i = 0; i < a.units.size(); ++i) {
        EXPECT_EQ(a.units[i].record.x, b.units[i].record.x);
        EXPECT_EQ(a.units[i].record.truth->y1, b.units[i].record.truth->y1);
        EXPECT_EQ(a.units[i].record.z, b.units[i].record.z);
    }
}

TEST(Replicate, RedefinedTruthIsMeanOverRetainedUnits) {
    SimConfig cfg;
    const auto rep = generate_replicate(cfg, 1);
    const auto data = rep.study_data({-2.0, 2.0});
    const auto sub = redefine_by_sd(data, 2.0);
    double s = 0.0;
    for (const auto& u : sub.units()) s += u.truth->y1 - u.truth->y0;
    EXPECT_NEAR(true_pate(sub), s / static_cast<double>(sub.population_size()), 1e-12);
    EXPECT_LT(sub.population_size(), data.population_size());
}

TEST(CoverageRate, Examples) {
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<BoundInterval> whole{{-inf, inf}};
    const std::vector<double> t0{3.0};
    EXPECT_EQ(coverage_rate(whole, t0), 1.0);
    const std::vector<BoundInterval> point{{3.0, 3.0}};
    EXPECT_EQ(coverage_rate(point, t0), 1.0);
    const std::vector<BoundInterval> two{{0.0, 1.0}, {0.0, 1.0}};
    const std::vector<double> t2{0.5, 2.0};
    EXPECT_EQ(coverage_rate(two, t2), 0.5);
}

TEST(RunCell, DeterministicAndThreadIndependent) {
    SimConfig cfg;
    cfg.reps = 12;
    cfg.delta = 0.4;
    const auto a = run_cell(cfg);
    cfg.threads = 3;
    const auto b = run_cell(cfg);
    ASSERT_EQ(a.populations.size(), 4u);
    for (std::size_t p = 0; p < 4; ++p) {
        EXPECT_EQ(a.populations[p].population, b.populations[p].population);
        EXPECT_EQ(a.populations[p].sate.mean, b.populations[p].sate.mean);
        EXPECT_EQ(a.populations[p].wcs_width.mean, b.populations[p].wcs_width.mean);
        EXPECT_EQ(a.populations[p].mss_coverage, b.populations[p].mss_coverage);
    }
    EXPECT_EQ(a.populations[0].population, "P");
    EXPECT_EQ(a.populations[3].population, "P1");
}

TEST(RunCell, PopulationSizesShrinkWithTighterRules) {
    SimConfig cfg;
    cfg.reps = 10;
    const auto r = run_cell(cfg);
    EXPECT_EQ(r.populations[0].N.mean, 2000.0);
    for (std::size_t p = 1; p < r.populations.size(); ++p)
        EXPECT_LT(r.populations[p].N.mean, r.populations[p - 1].N.mean + 1e-9);
    // P3 excludes under 3% of the population
    EXPECT_GT(r.populations[1].N.mean, 0.97 * 2000.0);
}

TEST(SimConfig, Validation) {
    SimConfig cfg;
    cfg.study = 3;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SimConfig{};
    cfg.delta = 1.5;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = SimConfig{};
    cfg.covariate_combo = {4};
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_NO_THROW(SimConfig{}.validate());
}

}  // namespace
}  // namespace genbound::sim
