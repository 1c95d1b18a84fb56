#pragma once
// End-to-end bound evaluation: optional population redefinition, SATE, the
// unstratified bounds, and (when requested) propensity-stratified bounds.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "genbound/bounds.hpp"
#include "genbound/core.hpp"
#include "genbound/population.hpp"
#include "genbound/propensity.hpp"

namespace genbound {

enum class RangeSource {
    Declared,        // the StudyData's declared [y_lo, y_hi]
    ObservedSample,  // min/max of the sampled units' observed outcomes
};

struct Redefinition {
    enum class Kind { None, Sd, PscoreRange };
    Kind kind = Kind::None;
    double sd_multiplier = 0.0;

    static Redefinition none() { return {}; }
    static Redefinition sd(double s) { return {Kind::Sd, s}; }
    static Redefinition pscore_range() { return {Kind::PscoreRange, 0.0}; }

    std::string label() const {
        switch (kind) {
            case Kind::None: return "P";
            case Kind::Sd: {
                std::string s = std::to_string(sd_multiplier);
                s.erase(s.find_last_not_of('0') + 1);
                if (!s.empty() && s.back() == '.') s.pop_back();
                return "P" + s;
            }
            case Kind::PscoreRange: return "P_sub";
        }
        return "?";
    }
};

struct AnalysisSpec {
    int strata = 0;                        // 0 disables the stratified frameworks
    std::vector<std::size_t> covariates;   // propensity covariates (0-based); empty = all
    bool add_squares = false;
    StratumRangePolicy stratum_range = StratumRangePolicy::Observed;
    RangeSource range_source = RangeSource::Declared;
    Redefinition redefinition;
    std::vector<std::size_t> trim_covariates;  // SD trimming columns; empty = all
};

struct Analysis {
    std::size_t population_size = 0;
    std::size_t sample_size = 0;
    double p_sel = 0.0;
    OutcomeRange range;
    double sate = 0.0;
    std::optional<SateEstimate> inference;  // absent when an arm has a single unit
    BoundInterval worst_case;
    BoundInterval mss;
    std::optional<BoundInterval> worst_case_stratified;
    std::optional<BoundInterval> mss_stratified;
    std::optional<double> stratified_sate;
    int strata_used = 0;
    std::optional<double> true_pate;        // simulated data only

    const BoundInterval& bound(Framework f) const {
        switch (f) {
            case Framework::WorstCase: return worst_case;
            case Framework::Mss: return mss;
            case Framework::WorstCaseStratified:
                if (worst_case_stratified) return *worst_case_stratified;
                break;
            case Framework::MssStratified:
                if (mss_stratified) return *mss_stratified;
                break;
        }
        throw Error(ErrorCode::InvalidData, std::string("framework not evaluated: ") + std::string(to_string(f)));
    }
};

inline OutcomeRange observed_sample_range(const StudyData& data) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& u : data.units()) {
        if (!u.z) continue;
        lo = std::min(lo, *u.y);
        hi = std::max(hi, *u.y);
    }
    return {lo, hi};
}

inline bool has_potential_outcomes(const StudyData& data) {
    for (const auto& u : data.units())
        if (!u.truth) return false;
    return true;
}

inline Analysis analyze(const StudyData& input, const AnalysisSpec& spec) {
    const auto covariates = spec.covariates.empty() ? detail::all_columns(input) : spec.covariates;
    const PropensityOptions popts{.add_squares = spec.add_squares};

    std::optional<StudyData> redefined;
    std::optional<PropensityModel> model;
    switch (spec.redefinition.kind) {
        case Redefinition::Kind::None: break;
        case Redefinition::Kind::Sd:
            redefined = spec.trim_covariates.empty()
                            ? redefine_by_sd(input, spec.redefinition.sd_multiplier)
                            : redefine_by_sd(input, spec.redefinition.sd_multiplier, spec.trim_covariates);
            break;
        case Redefinition::Kind::PscoreRange: {
            auto r = redefine_by_pscore_range(input, covariates, popts);
            redefined = std::move(r.data);
            model = std::move(r.model);
            break;
        }
    }
    const StudyData& data = redefined ? *redefined : input;

    Analysis a;
    a.population_size = data.population_size();
    a.sample_size = data.sample_size();
    a.p_sel = data.selection_probability();
    a.range = spec.range_source == RangeSource::Declared ? data.range() : observed_sample_range(data);

    const auto arms = split_arms(data);
    a.sate = difference_in_means(arms);
    if (arms.treated.size() >= 2 && arms.control.size() >= 2) a.inference = estimate_sate(arms);

    a.worst_case = worst_case_bounds(a.sate, a.p_sel, a.range);
    a.mss = mss_bounds(a.sate, a.p_sel, a.range);

    if (spec.strata > 0) {
        if (!model) model = fit_propensity(data, covariates, popts);
        const auto initial = assign_strata(*model, data, spec.strata);
        const auto strata = reduce_strata(initial, *model, data, StratumRequirement::BothArms);
        const auto summaries = summarize_strata(data, strata, a.range, spec.stratum_range);
        a.worst_case_stratified = stratified_bounds(summaries, Framework::WorstCase);
        a.mss_stratified = stratified_bounds(summaries, Framework::Mss);
        a.stratified_sate = stratified_sate(summaries);
        a.strata_used = strata.k;
    }

    if (has_potential_outcomes(data)) a.true_pate = true_pate(data);
    return a;
}

}  // namespace genbound
