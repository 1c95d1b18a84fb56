#pragma once
// Percentile bootstrap for the bound frameworks: resample the n sampled units with
// replacement (population units fixed), recompute the bounds end to end, and report
// the 0.05 quantile of the lower bounds and the 0.95 quantile of the upper bounds.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "genbound/analysis.hpp"
#include "genbound/core.hpp"
#include "genbound/error.hpp"
#include "genbound/rng.hpp"
#include "genbound/stats.hpp"

namespace genbound {

struct BootstrapOptions {
    std::size_t reps = 1000;
    std::uint64_t seed = 0;
    std::size_t max_redraws = 100;  // per replicate
    double lower_quantile = 0.05;
    double upper_quantile = 0.95;
    std::size_t threads = 1;
};

struct BootstrapBounds {
    Framework framework = Framework::WorstCase;
    double lb_q05 = 0.0;
    double ub_q95 = 0.0;
    std::size_t replicates = 0;
    std::size_t failures = 0;  // redrawn resamples across all replicates
    std::vector<BoundInterval> per_replicate;
};

// Resampled copy of `data`: non-sampled units in their original order, followed by
// the drawn sampled units in draw order.
inline StudyData resample_sample(const StudyData& data, std::span<const std::size_t> sampled,
                                 std::span<const std::size_t> draws) {
    std::vector<UnitRecord> units;
    units.reserve(data.population_size());
    for (const auto& u : data.units())
        if (!u.z) units.push_back(u);
    for (std::size_t d : draws) units.push_back(data[sampled[d]]);
    return StudyData(std::move(units), data.range());
}

// Draws n indices into the sampled-unit list. Shared by the bootstrap and its tests.
inline std::vector<std::size_t> draw_resample(Engine& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> draws(n);
    for (auto& d : draws) d = pick(rng);
    return draws;
}

inline std::vector<BootstrapBounds> bootstrap_bounds(const StudyData& data, const AnalysisSpec& spec,
                                                     std::span<const Framework> frameworks,
                                                     const BootstrapOptions& opts) {
    if (opts.reps < 1) throw Error(ErrorCode::InvalidData, "bootstrap needs at least one replicate");
    for (Framework f : frameworks)
        if (is_stratified(f) && spec.strata < 1)
            throw Error(ErrorCode::InvalidData, "stratified framework requested without strata");

    const auto sampled = data.sampled_indices();
    const std::size_t n = sampled.size();

    std::vector<Analysis> results(opts.reps);
    std::vector<std::size_t> failures(opts.reps, 0);
    parallel_for(opts.reps, opts.threads, [&](std::size_t r) {
        Engine rng = child_engine(opts.seed, r);
        std::string last_error;
        for (std::size_t attempt = 0; attempt <= opts.max_redraws; ++attempt) {
            const auto draws = draw_resample(rng, n);
            bool t = false, c = false;
            for (std::size_t d : draws) (*data[sampled[d]].w ? t : c) = true;
            if (!(t && c)) {
                ++failures[r];
                last_error = "resample lacks a treatment arm";
                continue;
            }
            try {
                results[r] = analyze(resample_sample(data, sampled, draws), spec);
                return;
            } catch (const Error& e) {
                ++failures[r];
                last_error = e.what();
            }
        }
        throw Error(ErrorCode::ReplicateFailure, "replicate " + std::to_string(r) + " failed after " +
                                                     std::to_string(opts.max_redraws + 1) + " draws: " + last_error);
    });

    std::size_t total_failures = 0;
    for (std::size_t f : failures) total_failures += f;

    std::vector<BootstrapBounds> out;
    for (Framework f : frameworks) {
        BootstrapBounds b;
        b.framework = f;
        b.replicates = opts.reps;
        b.failures = total_failures;
        std::vector<double> lows, highs;
        lows.reserve(opts.reps);
        highs.reserve(opts.reps);
        for (const auto& a : results) {
            const auto& bi = a.bound(f);
            b.per_replicate.push_back(bi);
            lows.push_back(bi.lo);
            highs.push_back(bi.hi);
        }
        b.lb_q05 = stats::quantile_type7(std::move(lows), opts.lower_quantile);
        b.ub_q95 = stats::quantile_type7(std::move(highs), opts.upper_quantile);
        out.push_back(std::move(b));
    }
    return out;
}

inline BootstrapBounds bootstrap_bounds(const StudyData& data, const AnalysisSpec& spec, Framework framework,
                                        const BootstrapOptions& opts) {
    const Framework f[] = {framework};
    return bootstrap_bounds(data, spec, f, opts).front();
}

}  // namespace genbound
