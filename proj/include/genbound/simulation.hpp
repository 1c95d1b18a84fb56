#pragma once
// Monte Carlo evaluation of the bounds on synthetic school populations.
//
// Replicate r of a cell draws from two child streams of the cell seed:
//   stream 0: covariates, eligibility, sample selection, treatment assignment
//   stream 1: which non-sampled units violate sampling ignorability, and their X5/X6
// Everything that touches the sample comes from stream 0, so the SATE of a replicate
// does not depend on delta or on the study.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genbound/analysis.hpp"
#include "genbound/bounds.hpp"
#include "genbound/core.hpp"
#include "genbound/error.hpp"
#include "genbound/rng.hpp"
#include "genbound/stats.hpp"

namespace genbound::sim {

inline constexpr std::size_t kCovariates = 4;
using CovariateRow = std::array<double, kCovariates>;

enum class Alignment { Positive, Negative };

constexpr std::string_view to_string(Alignment a) noexcept {
    return a == Alignment::Positive ? "positive" : "negative";
}

struct SimConfig {
    int study = 1;
    std::size_t N = 2000;
    std::size_t n = 100;
    double rho = 0.25;
    double delta = 0.0;
    Alignment alignment = Alignment::Positive;
    std::optional<std::array<double, 3>> beta;   // selection model; default by alignment
    std::optional<std::array<double, 2>> gamma;  // outcome model
    int k = 5;
    std::vector<std::size_t> covariate_combo{0, 1};  // 0-based, into X1..X4
    std::size_t reps = 100;
    std::uint64_t seed = 20190601;

    RangeSource range_source = RangeSource::Declared;
    OutcomeRange declared_range{-2.0, 2.0};
    bool add_squares = false;
    std::vector<double> sd_levels{3.0, 2.0, 1.0};  // redefined populations besides P
    bool independent_covariates = false;           // test hook: identity correlation
    std::size_t threads = 1;

    std::array<double, 3> effective_beta() const {
        if (beta) return *beta;
        return alignment == Alignment::Positive ? std::array<double, 3>{0.4, 0.4, 1.0}
                                                : std::array<double, 3>{1.0, 0.5, 0.4};
    }
    std::array<double, 2> effective_gamma() const { return gamma.value_or(std::array<double, 2>{0.1, 1.0}); }

    double sample_clip() const noexcept { return 2.0; }
    double population_clip() const noexcept { return study == 1 ? 1.0 : 2.0; }

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
        if (study != 1 && study != 2) fail("study must be 1 or 2");
        if (n == 0 || n >= N) fail("require 0 < n < N");
        if (!(delta >= 0.0 && delta <= 1.0)) fail("delta must lie in [0, 1]");
        if (!(rho > -1.0 && rho < 1.0)) fail("rho must lie in (-1, 1)");
        if (k < 1) fail("k must be >= 1");
        if (reps < 1) fail("reps must be >= 1");
        if (covariate_combo.empty()) fail("covariate_combo must not be empty");
        for (std::size_t c : covariate_combo)
            if (c >= kCovariates) fail("covariate_combo entries must be in 1..4");
        if (!(declared_range.lo < declared_range.hi)) fail("declared range requires lo < hi");
        for (double s : sd_levels)
            if (!(s > 0.0)) fail("sd_levels must be positive");
    }
};

// Unit correlations: rho(X1,X2) = 0.5, rho(X1,X3) = rho(X2,X4) = rho, all others 0.05.
inline Eigen::Matrix4d correlation_matrix(double rho, bool independent = false) {
    Eigen::Matrix4d c = Eigen::Matrix4d::Identity();
    if (independent) return c;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) c(i, j) = 0.05;
    c(0, 1) = c(1, 0) = 0.5;
    c(0, 2) = c(2, 0) = rho;
    c(1, 3) = c(3, 1) = rho;
    return c;
}

inline Eigen::Matrix4d cholesky_factor(const Eigen::Matrix4d& c) {
    Eigen::LLT<Eigen::Matrix4d> llt(c);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotPositiveDefinite, "covariate correlation matrix is not positive definite");
    return llt.matrixL();
}

inline std::vector<CovariateRow> generate_covariates(const SimConfig& cfg, Engine& rng) {
    const Eigen::Matrix4d l = cholesky_factor(correlation_matrix(cfg.rho, cfg.independent_covariates));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<CovariateRow> x(cfg.N);
    for (auto& row : x) {
        Eigen::Vector4d e;
        for (int j = 0; j < 4; ++j) e(j) = normal(rng);
        const Eigen::Vector4d v = l * e;
        for (int j = 0; j < 4; ++j) row[static_cast<std::size_t>(j)] = v(j);
    }
    return x;
}

inline double selection_probability(const CovariateRow& x, const std::array<double, 3>& beta) {
    return stats::expit(beta[0] * x[0] + beta[1] * x[0] * x[0] + beta[2] * x[1]);
}

namespace detail {

// First m entries of a uniform random permutation of `pool`.
inline std::vector<std::size_t> choose_without_replacement(std::vector<std::size_t> pool, std::size_t m,
                                                           Engine& rng) {
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(m);
    return pool;
}

}  // namespace detail

// Bernoulli eligibility from the selection model, then n eligible units chosen uniformly.
// Eligibility is redrawn once when fewer than n units qualify.
inline std::vector<bool> select_sample(std::span<const CovariateRow> x, const SimConfig& cfg, Engine& rng) {
    const auto beta = cfg.effective_beta();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (unif(rng) < selection_probability(x[i], beta)) eligible.push_back(i);
        if (eligible.size() < cfg.n) continue;
        std::vector<bool> z(x.size(), false);
        for (std::size_t i : detail::choose_without_replacement(std::move(eligible), cfg.n, rng)) z[i] = true;
        return z;
    }
    throw Error(ErrorCode::InsufficientEligible, "fewer than n eligible units after one redraw");
}

// Exactly half of the sampled units are treated.
inline std::vector<std::optional<bool>> assign_treatment(const std::vector<bool>& z, Engine& rng) {
    std::vector<std::size_t> sampled;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (z[i]) sampled.push_back(i);
    if (sampled.size() % 2 != 0) throw Error(ErrorCode::OddSampleSize, "sample size must be even");
    std::vector<std::optional<bool>> w(z.size());
    for (std::size_t i : sampled) w[i] = false;
    for (std::size_t i : detail::choose_without_replacement(sampled, sampled.size() / 2, rng)) w[i] = true;
    return w;
}

struct SimUnit {
    UnitRecord record;  // truth holds the clipped potential outcomes
    bool ignorability_violated = false;
    double x5 = 0.0;
    double x6 = 0.0;
};

// Potential outcomes (before clipping) from two covariates a, b.
inline PotentialOutcomes outcome_model(double a, double b, const std::array<double, 2>& gamma) {
    const double y0 = gamma[0] * a + gamma[1] * b;
    return {y0 + gamma[0] * a * a + gamma[1] * b * b + 1.0, y0};
}

// A uniformly chosen round(delta * (N - n)) of the non-sampled units get outcomes from
// X5 ~ t(9), X6 ~ t(3); the rest from X1, X2. Sampled units are clipped to [-2, 2];
// non-sampled units to [-1, 1] in study 1 and [-2, 2] in study 2.
inline std::vector<SimUnit> generate_outcomes(std::span<const CovariateRow> x, const std::vector<bool>& z,
                                              const std::vector<std::optional<bool>>& w, const SimConfig& cfg,
                                              Engine& rng) {
    const auto gamma = cfg.effective_gamma();
    std::vector<std::size_t> nonsampled;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (!z[i]) nonsampled.push_back(i);
    const auto m = static_cast<std::size_t>(std::llround(cfg.delta * static_cast<double>(nonsampled.size())));
    auto violated = detail::choose_without_replacement(nonsampled, m, rng);
    std::sort(violated.begin(), violated.end());

    std::vector<SimUnit> units(x.size());
    std::student_t_distribution<double> t9(9.0), t3(3.0);
    std::size_t next_violated = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& su = units[i];
        auto& u = su.record;
        u.id = std::to_string(i + 1);
        u.z = z[i];
        u.x.assign(x[i].begin(), x[i].end());
        PotentialOutcomes po;
        if (next_violated < violated.size() && violated[next_violated] == i) {
            ++next_violated;
            su.ignorability_violated = true;
            su.x5 = t9(rng);
            su.x6 = t3(rng);
            po = outcome_model(su.x5, su.x6, gamma);
        } else {
            po = outcome_model(x[i][0], x[i][1], gamma);
        }
        const double c = u.z ? cfg.sample_clip() : cfg.population_clip();
        po.y1 = std::clamp(po.y1, -c, c);
        po.y0 = std::clamp(po.y0, -c, c);
        u.truth = po;
        if (u.z) {
            u.w = *w[i];
            u.y = *u.w ? po.y1 : po.y0;
        }
    }
    return units;
}

struct SimReplicate {
    std::vector<SimUnit> units;

    StudyData study_data(const OutcomeRange& range) const {
        std::vector<UnitRecord> recs;
        recs.reserve(units.size());
        for (const auto& u : units) recs.push_back(u.record);
        return StudyData(std::move(recs), range);
    }

    // Share of non-sampled units whose effect is at most the true sample mean effect,
    // i.e. units for which monotone sample selection holds pointwise.
    double mss_hold_fraction() const {
        double sample_effect = 0.0;
        std::size_t n = 0;
        for (const auto& u : units)
            if (u.record.z) sample_effect += u.record.truth->effect(), ++n;
        sample_effect /= static_cast<double>(n);
        std::size_t hold = 0, pop = 0;
        for (const auto& u : units) {
            if (u.record.z) continue;
            ++pop;
            if (u.record.truth->effect() <= sample_effect) ++hold;
        }
        return pop ? static_cast<double>(hold) / static_cast<double>(pop) : 0.0;
    }

    double violated_fraction() const {
        std::size_t v = 0, pop = 0;
        for (const auto& u : units) {
            if (u.record.z) continue;
            ++pop;
            v += u.ignorability_violated ? 1 : 0;
        }
        return pop ? static_cast<double>(v) / static_cast<double>(pop) : 0.0;
    }
};

inline SimReplicate generate_replicate(const SimConfig& cfg, std::size_t replicate) {
    Engine design = child_engine(cfg.seed, replicate, 0);
    Engine outcomes = child_engine(cfg.seed, replicate, 1);
    const auto x = generate_covariates(cfg, design);
    const auto z = select_sample(x, cfg, design);
    const auto w = assign_treatment(z, design);
    return {generate_outcomes(x, z, w, cfg, outcomes)};
}

inline double coverage_rate(std::span<const BoundInterval> intervals, std::span<const double> truths) {
    if (intervals.size() != truths.size()) throw Error(ErrorCode::InvalidData, "intervals and truths differ in length");
    if (intervals.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t hit = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i)
        if (intervals[i].lo <= truths[i] && truths[i] <= intervals[i].hi) ++hit;
    return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

struct MetricSummary {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double mcse = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;

    static MetricSummary of(std::span<const double> v) {
        MetricSummary s;
        s.count = v.size();
        if (v.empty()) return s;
        s.mean = stats::mean(v);
        s.mcse = stats::mcse(v);
        return s;
    }
};

// Metrics for one population definition, aggregated over the successful replicates.
struct PopulationMetrics {
    std::string population;
    bool ok = false;
    std::size_t replicates_ok = 0;
    std::size_t replicates_failed = 0;
    std::string first_error;

    MetricSummary N, p_sel, pate, sate, se, ci_lo, ci_hi, bias;
    MetricSummary wc_lo, wc_hi, wc_width, mss_lo, mss_hi, mss_width;
    MetricSummary wcs_lo, wcs_hi, wcs_width, msss_lo, msss_hi, msss_width, strata;
    MetricSummary strat_sate, strat_bias;
    double ci_coverage = std::numeric_limits<double>::quiet_NaN();
    double wc_coverage = std::numeric_limits<double>::quiet_NaN();
    double mss_coverage = std::numeric_limits<double>::quiet_NaN();
    double wcs_coverage = std::numeric_limits<double>::quiet_NaN();
    double msss_coverage = std::numeric_limits<double>::quiet_NaN();
    // Percent width reductions, averaged over replicates.
    MetricSummary gain_mss_vs_wc;     // MSS vs worst case
    MetricSummary gain_wcs_vs_wc;     // stratified worst case vs worst case
    MetricSummary gain_msss_vs_mss;   // stratified MSS vs MSS
    MetricSummary gain_msss_vs_wc;    // stratified MSS vs worst case
    MetricSummary gain_wc_vs_p;       // this population's worst case vs P's worst case
    MetricSummary gain_mss_vs_p_wc;   // this population's MSS vs P's worst case
};

struct CellDiagnostics {
    MetricSummary mss_hold_fraction;
    MetricSummary violated_fraction;
};

struct ExperimentResult {
    SimConfig config;
    std::vector<PopulationMetrics> populations;  // P first, then one per sd level
    CellDiagnostics diagnostics;
};

inline std::vector<Redefinition> population_definitions(const SimConfig& cfg) {
    std::vector<Redefinition> defs{Redefinition::none()};
    for (double s : cfg.sd_levels) defs.push_back(Redefinition::sd(s));
    return defs;
}

inline AnalysisSpec analysis_spec(const SimConfig& cfg, const Redefinition& def) {
    AnalysisSpec spec;
    spec.strata = cfg.k;
    spec.covariates = cfg.covariate_combo;
    spec.add_squares = cfg.add_squares;
    spec.range_source = cfg.range_source;
    spec.redefinition = def;
    spec.trim_covariates = {0, 1, 2, 3};
    return spec;
}

// Per-replicate outcome for every population definition; nullopt marks a failure.
struct ReplicateOutcome {
    std::vector<std::optional<Analysis>> analyses;
    std::vector<std::string> errors;
    double mss_hold_fraction = 0.0;
    double violated_fraction = 0.0;
};

inline ReplicateOutcome run_replicate(const SimConfig& cfg, std::size_t replicate) {
    const auto rep = generate_replicate(cfg, replicate);
    const auto range = cfg.range_source == RangeSource::Declared
                           ? cfg.declared_range
                           : OutcomeRange{-cfg.sample_clip(), cfg.sample_clip()};
    const StudyData data = rep.study_data(range);
    ReplicateOutcome out;
    out.mss_hold_fraction = rep.mss_hold_fraction();
    out.violated_fraction = rep.violated_fraction();
    for (const auto& def : population_definitions(cfg)) {
        try {
            out.analyses.emplace_back(analyze(data, analysis_spec(cfg, def)));
            out.errors.emplace_back();
        } catch (const Error& e) {
            out.analyses.emplace_back(std::nullopt);
            out.errors.emplace_back(e.what());
        }
    }
    return out;
}

// Largest share of failed replicates a population may have and still be reported.
inline constexpr double kMaxFailureShare = 0.10;

inline ExperimentResult run_cell(const SimConfig& cfg) {
    cfg.validate();
    std::vector<ReplicateOutcome> reps(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) { reps[r] = run_replicate(cfg, r); });

    ExperimentResult result;
    result.config = cfg;
    const auto defs = population_definitions(cfg);

    std::vector<double> hold, violated;
    for (const auto& r : reps) hold.push_back(r.mss_hold_fraction), violated.push_back(r.violated_fraction);
    result.diagnostics = {MetricSummary::of(hold), MetricSummary::of(violated)};

    for (std::size_t p = 0; p < defs.size(); ++p) {
        PopulationMetrics m;
        m.population = defs[p].label();
        std::vector<double> N, psel, pate, sate, se, cilo, cihi, bias;
        std::vector<double> wcl, wch, wcw, msl, msh, msw, wsl, wsh, wsw, mssl, mssh, mssw, k, ssate, sbias;
        std::vector<double> g_mss, g_wcs, g_msss, g_msss_wc, g_wc_p, g_mss_p;
        std::vector<BoundInterval> ci_iv, wc_iv, mss_iv, wcs_iv, msss_iv;
        std::vector<double> truth, ci_truth;
        for (const auto& r : reps) {
            const auto& a = r.analyses[p];
            if (!a) {
                ++m.replicates_failed;
                if (m.first_error.empty()) m.first_error = r.errors[p];
                continue;
            }
            ++m.replicates_ok;
            const double t = *a->true_pate;
            N.push_back(static_cast<double>(a->population_size));
            psel.push_back(a->p_sel);
            pate.push_back(t);
            sate.push_back(a->sate);
            bias.push_back(a->sate - t);
            if (a->inference) {
                se.push_back(a->inference->se);
                cilo.push_back(a->inference->ci_lo);
                cihi.push_back(a->inference->ci_hi);
                ci_iv.push_back({a->inference->ci_lo, a->inference->ci_hi});
                ci_truth.push_back(t);
            }
            wcl.push_back(a->worst_case.lo), wch.push_back(a->worst_case.hi), wcw.push_back(a->worst_case.width());
            msl.push_back(a->mss.lo), msh.push_back(a->mss.hi), msw.push_back(a->mss.width());
            wc_iv.push_back(a->worst_case);
            mss_iv.push_back(a->mss);
            truth.push_back(t);
            if (a->worst_case.width() > 0.0) g_mss.push_back(precision_gain(a->worst_case, a->mss));
            if (a->worst_case_stratified) {
                const auto& ws = *a->worst_case_stratified;
                const auto& ms = *a->mss_stratified;
                wsl.push_back(ws.lo), wsh.push_back(ws.hi), wsw.push_back(ws.width());
                mssl.push_back(ms.lo), mssh.push_back(ms.hi), mssw.push_back(ms.width());
                k.push_back(a->strata_used);
                ssate.push_back(*a->stratified_sate);
                sbias.push_back(*a->stratified_sate - t);
                wcs_iv.push_back(ws);
                msss_iv.push_back(ms);
                if (a->worst_case.width() > 0.0) {
                    g_wcs.push_back(precision_gain(a->worst_case, ws));
                    g_msss_wc.push_back(precision_gain(a->worst_case, ms));
                }
                if (a->mss.width() > 0.0) g_msss.push_back(precision_gain(a->mss, ms));
            }
            const auto& base = r.analyses[0];
            if (base && base->worst_case.width() > 0.0) {
                g_wc_p.push_back(precision_gain(base->worst_case, a->worst_case));
                g_mss_p.push_back(precision_gain(base->worst_case, a->mss));
            }
        }
        const double failed_share = static_cast<double>(m.replicates_failed) / static_cast<double>(cfg.reps);
        m.ok = failed_share <= kMaxFailureShare;
        m.N = MetricSummary::of(N);
        m.p_sel = MetricSummary::of(psel);
        m.pate = MetricSummary::of(pate);
        m.sate = MetricSummary::of(sate);
        m.se = MetricSummary::of(se);
        m.ci_lo = MetricSummary::of(cilo);
        m.ci_hi = MetricSummary::of(cihi);
        m.bias = MetricSummary::of(bias);
        m.wc_lo = MetricSummary::of(wcl);
        m.wc_hi = MetricSummary::of(wch);
        m.wc_width = MetricSummary::of(wcw);
        m.mss_lo = MetricSummary::of(msl);
        m.mss_hi = MetricSummary::of(msh);
        m.mss_width = MetricSummary::of(msw);
        m.wcs_lo = MetricSummary::of(wsl);
        m.wcs_hi = MetricSummary::of(wsh);
        m.wcs_width = MetricSummary::of(wsw);
        m.msss_lo = MetricSummary::of(mssl);
        m.msss_hi = MetricSummary::of(mssh);
        m.msss_width = MetricSummary::of(mssw);
        m.strata = MetricSummary::of(k);
        m.strat_sate = MetricSummary::of(ssate);
        m.strat_bias = MetricSummary::of(sbias);
        m.ci_coverage = coverage_rate(ci_iv, ci_truth);
        m.wc_coverage = coverage_rate(wc_iv, truth);
        m.mss_coverage = coverage_rate(mss_iv, truth);
        std::vector<double> strat_truth;
        for (const auto& r : reps)
            if (r.analyses[p] && r.analyses[p]->worst_case_stratified) strat_truth.push_back(*r.analyses[p]->true_pate);
        m.wcs_coverage = coverage_rate(wcs_iv, strat_truth);
        m.msss_coverage = coverage_rate(msss_iv, strat_truth);
        m.gain_mss_vs_wc = MetricSummary::of(g_mss);
        m.gain_wcs_vs_wc = MetricSummary::of(g_wcs);
        m.gain_msss_vs_mss = MetricSummary::of(g_msss);
        m.gain_msss_vs_wc = MetricSummary::of(g_msss_wc);
        m.gain_wc_vs_p = MetricSummary::of(g_wc_p);
        m.gain_mss_vs_p_wc = MetricSummary::of(g_mss_p);
        result.populations.push_back(std::move(m));
    }
    return result;
}

// A grid of cells: every combination of the listed parameter values.
struct SimGrid {
    SimConfig base;
    std::vector<int> studies{1};
    std::vector<double> deltas{0.0};
    std::vector<double> rhos{0.25};
    std::vector<Alignment> alignments{Alignment::Positive};
    std::vector<std::vector<std::size_t>> combos{{0, 1}};

    std::vector<SimConfig> cells() const {
        std::vector<SimConfig> out;
        for (int s : studies)
            for (Alignment a : alignments)
                for (double r : rhos)
                    for (const auto& c : combos)
                        for (double d : deltas) {
                            SimConfig cfg = base;
                            cfg.study = s;
                            cfg.alignment = a;
                            cfg.rho = r;
                            cfg.covariate_combo = c;
                            cfg.delta = d;
                            out.push_back(std::move(cfg));
                        }
        return out;
    }
};

}  // namespace genbound::sim
