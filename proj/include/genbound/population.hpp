#pragma once
// Population redefinition: covariate-SD trimming and propensity-range trimming.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "genbound/core.hpp"
#include "genbound/error.hpp"
#include "genbound/propensity.hpp"
#include "genbound/stats.hpp"

namespace genbound {

namespace detail {

inline std::vector<std::size_t> all_columns(const StudyData& data) {
    std::vector<std::size_t> c(data.covariate_count());
    std::iota(c.begin(), c.end(), std::size_t{0});
    return c;
}

inline StudyData keep_units(const StudyData& data, const std::vector<std::size_t>& keep) {
    std::size_t retained_pop = 0;
    for (std::size_t i : keep)
        if (!data[i].z) ++retained_pop;
    if (retained_pop < data.sample_size())
        throw Error(ErrorCode::SubpopulationTooSmall,
                    "redefined population keeps " + std::to_string(retained_pop) +
                        " non-sampled units, fewer than the " + std::to_string(data.sample_size()) + " sampled");
    return data.subset(keep);
}

}  // namespace detail

// Keeps every sampled unit and each non-sampled unit whose covariates all lie within
// s sample standard deviations of the sample means (per-covariate rule).
inline StudyData redefine_by_sd(const StudyData& data, double s, std::span<const std::size_t> covariates) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidData, "SD multiplier must be positive");
    const auto sampled = data.sampled_indices();
    if (sampled.size() < 2) throw Error(ErrorCode::ZeroVariance, "need two sampled units for a covariate SD");

    std::vector<double> centre, limit;
    std::vector<double> col(sampled.size());
    for (std::size_t j : covariates) {
        if (j >= data.covariate_count())
            throw Error(ErrorCode::InvalidData, "covariate index " + std::to_string(j + 1) + " out of range");
        for (std::size_t k = 0; k < sampled.size(); ++k) col[k] = data[sampled[k]].x[j];
        const double sd = stats::stddev(col);
        if (!(sd > 0.0))
            throw Error(ErrorCode::ZeroVariance, "sample covariate x" + std::to_string(j + 1) + " is constant");
        centre.push_back(stats::mean(col));
        limit.push_back(s * sd);
    }

    std::vector<std::size_t> keep;
    keep.reserve(data.population_size());
    for (std::size_t i = 0; i < data.population_size(); ++i) {
        const auto& u = data[i];
        bool inside = true;
        if (!u.z) {
            std::size_t c = 0;
            for (std::size_t j : covariates) {
                if (std::abs(u.x[j] - centre[c]) > limit[c]) {
                    inside = false;
                    break;
                }
                ++c;
            }
        }
        if (inside) keep.push_back(i);
    }
    return detail::keep_units(data, keep);
}

inline StudyData redefine_by_sd(const StudyData& data, double s) {
    return redefine_by_sd(data, s, detail::all_columns(data));
}

struct PscoreRedefinition {
    StudyData data;          // retained units
    PropensityModel model;   // refitted on the retained units; scores follow data order
    std::size_t dropped = 0;
};

// Fits the propensity model, drops non-sampled units scoring outside the sampled
// units' [min, max], then refits once on what is left.
inline PscoreRedefinition redefine_by_pscore_range(const StudyData& data, std::span<const std::size_t> covariates,
                                                  const PropensityOptions& opts = {}) {
    const auto first = fit_propensity(data, covariates, opts);
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < data.population_size(); ++i) {
        if (!data[i].z) continue;
        lo = std::min(lo, first.scores[i]);
        hi = std::max(hi, first.scores[i]);
    }
    std::vector<std::size_t> keep;
    keep.reserve(data.population_size());
    for (std::size_t i = 0; i < data.population_size(); ++i) {
        const double s = first.scores[i];
        if (data[i].z || (lo <= s && s <= hi)) keep.push_back(i);
    }
    auto retained = detail::keep_units(data, keep);
    auto refit = fit_propensity(retained, covariates, opts);
    const std::size_t dropped = data.population_size() - keep.size();
    return {std::move(retained), std::move(refit), dropped};
}

}  // namespace genbound
