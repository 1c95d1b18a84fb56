#pragma once
// Worst-case, monotone-sample-selection (MSS) and stratified bounds on the PATE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "genbound/core.hpp"
#include "genbound/error.hpp"
#include "genbound/propensity.hpp"

namespace genbound {

namespace detail {

inline void check_bound_inputs(double sate, double p_sel, const OutcomeRange& range) {
    if (!(p_sel > 0.0 && p_sel <= 1.0))
        throw Error(ErrorCode::InputInconsistent, "selection probability must lie in (0, 1]");
    if (!std::isfinite(sate) || std::abs(sate) > range.width() * (1.0 + 1e-12))
        throw Error(ErrorCode::InputInconsistent, "|SATE| exceeds the width of the outcome range");
}

}  // namespace detail

// Unobserved sample counterfactuals replaced by the range endpoints.
inline BoundInterval worst_case_bounds(double sate, double p_sel, const OutcomeRange& range) {
    detail::check_bound_inputs(sate, p_sel, range);
    const double p0 = 1.0 - p_sel;
    return {sate * p_sel + (range.lo - range.hi) * p0, sate * p_sel + (range.hi - range.lo) * p0,
            Framework::WorstCase};
}

// MSS tightens only the upper bound, to the SATE itself.
inline BoundInterval mss_bounds(double sate, double p_sel, const OutcomeRange& range) {
    auto b = worst_case_bounds(sate, p_sel, range);
    return {b.lo, sate, Framework::Mss};
}

inline double bound_width(const BoundInterval& b) noexcept { return b.hi - b.lo; }

// Percent reduction in width from `before` to `after`; negative when `after` is wider.
inline double precision_gain(const BoundInterval& before, const BoundInterval& after) {
    const double w0 = bound_width(before);
    if (!(w0 > 0.0)) throw Error(ErrorCode::ZeroWidthBaseline, "baseline bound has zero width");
    return 100.0 * (w0 - bound_width(after)) / w0;
}

struct StratumSummary {
    double weight = 0.0;  // N_j / N
    double sate = 0.0;
    double p_sel = 0.0;   // n_j / N_j
    OutcomeRange range;
    std::size_t population = 0;
    std::size_t sampled = 0;
};

// Population-weighted average of per-stratum bounds. `base` picks the per-stratum
// rule (worst case or MSS); the stratified variant of it is returned.
inline BoundInterval stratified_bounds(std::span<const StratumSummary> strata, Framework base) {
    if (strata.empty()) throw Error(ErrorCode::InvalidData, "no strata");
    const bool mss = is_mss(base);
    BoundInterval out{0.0, 0.0, mss ? Framework::MssStratified : Framework::WorstCaseStratified};
    for (const auto& s : strata) {
        const auto b = mss ? mss_bounds(s.sate, s.p_sel, s.range) : worst_case_bounds(s.sate, s.p_sel, s.range);
        out.lo += s.weight * b.lo;
        out.hi += s.weight * b.hi;
    }
    return out;
}

enum class StratumRangePolicy {
    Observed,  // min/max of sampled outcomes in the stratum; global range if < 2 outcomes
    Global,    // the range handed in by the caller for every stratum
};

// Per-stratum inputs for stratified_bounds. Every stratum needs both arms.
inline std::vector<StratumSummary> summarize_strata(const StudyData& data, const StratumAssignment& a,
                                                    const OutcomeRange& global,
                                                    StratumRangePolicy policy = StratumRangePolicy::Observed) {
    if (a.labels.size() != data.population_size())
        throw Error(ErrorCode::InvalidData, "stratum labels do not match the population");
    const auto members = a.members();
    const double total = static_cast<double>(data.population_size());
    std::vector<StratumSummary> out;
    out.reserve(members.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
        const auto arms = split_arms(data, members[j]);
        if (arms.treated.empty() || arms.control.empty())
            throw Error(ErrorCode::EmptyArmInStratum, "stratum " + std::to_string(j + 1) + " lacks a treatment arm");
        StratumSummary s;
        s.population = members[j].size();
        s.sampled = arms.treated.size() + arms.control.size();
        s.weight = static_cast<double>(s.population) / total;
        s.p_sel = static_cast<double>(s.sampled) / static_cast<double>(s.population);
        s.sate = difference_in_means(arms);
        s.range = global;
        if (policy == StratumRangePolicy::Observed && s.sampled >= 2) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (double y : arms.treated) lo = std::min(lo, y), hi = std::max(hi, y);
            for (double y : arms.control) lo = std::min(lo, y), hi = std::max(hi, y);
            s.range = {lo, hi};
        }
        out.push_back(s);
    }
    return out;
}

// Population-weighted average of the stratum SATEs.
inline double stratified_sate(std::span<const StratumSummary> strata) {
    double s = 0.0;
    for (const auto& st : strata) s += st.weight * st.sate;
    return s;
}

}  // namespace genbound
