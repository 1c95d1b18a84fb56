#pragma once
// Data model shared by the estimators, and the sample-level estimands.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genbound/error.hpp"
#include "genbound/stats.hpp"

namespace genbound {

// Both potential outcomes; only simulated data carries them.
struct PotentialOutcomes {
    double y1 = 0.0;
    double y0 = 0.0;
    double effect() const noexcept { return y1 - y0; }
};

struct UnitRecord {
    std::string id;
    bool z = false;                 // selected into the experiment
    std::optional<bool> w;          // treated; present iff z
    std::optional<double> y;        // observed outcome; present iff z
    std::vector<double> x;          // covariates
    std::optional<PotentialOutcomes> truth;

    bool treated() const noexcept { return z && w.value_or(false); }
    bool control() const noexcept { return z && w.has_value() && !*w; }
};

struct OutcomeRange {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool contains(double y) const noexcept { return lo <= y && y <= hi; }
};

// A population P (sampled units included) with its declared outcome range.
class StudyData {
public:
    StudyData(std::vector<UnitRecord> units, OutcomeRange range)
        : units_(std::move(units)), range_(range) {
        validate();
    }

    std::span<const UnitRecord> units() const noexcept { return units_; }
    const UnitRecord& operator[](std::size_t i) const { return units_[i]; }
    const OutcomeRange& range() const noexcept { return range_; }

    std::size_t population_size() const noexcept { return units_.size(); }
    std::size_t sample_size() const noexcept { return n_; }
    std::size_t covariate_count() const noexcept { return p_; }
    double selection_probability() const noexcept {
        return static_cast<double>(n_) / static_cast<double>(units_.size());
    }

    std::vector<std::size_t> sampled_indices() const {
        std::vector<std::size_t> idx;
        idx.reserve(n_);
        for (std::size_t i = 0; i < units_.size(); ++i)
            if (units_[i].z) idx.push_back(i);
        return idx;
    }

    StudyData with_range(OutcomeRange range) const { return StudyData(units_, range); }

    // Keeps units whose index is listed, in the given order.
    StudyData subset(std::span<const std::size_t> keep) const {
        std::vector<UnitRecord> out;
        out.reserve(keep.size());
        for (std::size_t i : keep) out.push_back(units_.at(i));
        return StudyData(std::move(out), range_);
    }

private:
    void validate() {
        if (!(range_.lo < range_.hi))
            throw Error(ErrorCode::InvalidData, "outcome range requires lo < hi");
        if (units_.empty()) throw Error(ErrorCode::InvalidData, "empty population");
        p_ = units_.front().x.size();
        n_ = 0;
        for (const auto& u : units_) {
            if (u.x.size() != p_)
                throw Error(ErrorCode::InvalidData, "unit " + u.id + " has a covariate vector of different length");
            if (u.z != u.w.has_value() || u.z != u.y.has_value())
                throw Error(ErrorCode::InvalidData, "unit " + u.id + ": w and y must be present iff z = 1");
            if (u.z) {
                ++n_;
                if (!std::isfinite(*u.y) || !range_.contains(*u.y))
                    throw Error(ErrorCode::InvalidData, "unit " + u.id + ": outcome outside the declared range");
            }
        }
        if (n_ == 0) throw Error(ErrorCode::InvalidData, "no sampled units (z = 1)");
    }

    std::vector<UnitRecord> units_;
    OutcomeRange range_;
    std::size_t n_ = 0;
    std::size_t p_ = 0;
};

struct SateEstimate {
    double estimate = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
};

enum class Framework { WorstCase, Mss, WorstCaseStratified, MssStratified };

constexpr std::string_view to_string(Framework f) noexcept {
    switch (f) {
        case Framework::WorstCase: return "worst_case";
        case Framework::Mss: return "mss";
        case Framework::WorstCaseStratified: return "worst_case_stratified";
        case Framework::MssStratified: return "mss_stratified";
    }
    return "unknown";
}

constexpr bool is_stratified(Framework f) noexcept {
    return f == Framework::WorstCaseStratified || f == Framework::MssStratified;
}

constexpr bool is_mss(Framework f) noexcept { return f == Framework::Mss || f == Framework::MssStratified; }

struct BoundInterval {
    double lo = 0.0;
    double hi = 0.0;
    Framework framework = Framework::WorstCase;

    double width() const noexcept { return hi - lo; }
    bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

// Observed outcomes of the sampled units listed in `indices`, split by arm.
struct ArmOutcomes {
    std::vector<double> treated;
    std::vector<double> control;
};

inline ArmOutcomes split_arms(const StudyData& data, std::span<const std::size_t> indices) {
    ArmOutcomes arms;
    for (std::size_t i : indices) {
        const auto& u = data[i];
        if (!u.z) continue;
        (*u.w ? arms.treated : arms.control).push_back(*u.y);
    }
    return arms;
}

inline ArmOutcomes split_arms(const StudyData& data) {
    ArmOutcomes arms;
    for (const auto& u : data.units()) {
        if (!u.z) continue;
        (*u.w ? arms.treated : arms.control).push_back(*u.y);
    }
    return arms;
}

// Difference in arm means; needs one unit per arm, no variance.
inline double difference_in_means(const ArmOutcomes& arms) {
    if (arms.treated.empty() || arms.control.empty())
        throw Error(ErrorCode::MissingArm, "a treatment arm has no sampled units");
    return stats::mean(arms.treated) - stats::mean(arms.control);
}

inline SateEstimate estimate_sate(const ArmOutcomes& arms) {
    const double est = difference_in_means(arms);
    if (arms.treated.size() < 2 || arms.control.size() < 2)
        throw Error(ErrorCode::DegenerateArm, "standard error needs two units per arm");
    const double n1 = static_cast<double>(arms.treated.size());
    const double n0 = static_cast<double>(arms.control.size());
    const double se = std::sqrt(stats::variance(arms.treated) / n1 + stats::variance(arms.control) / n0);
    return {est, se, est - stats::z975 * se, est + stats::z975 * se, arms.treated.size(), arms.control.size()};
}

// Difference in means over the sampled units with unpooled two-sample SE.
inline SateEstimate estimate_sate(const StudyData& data) { return estimate_sate(split_arms(data)); }

// Finite-population mean of Y(1) - Y(0) over all units.
inline double true_pate(const StudyData& data) {
    double s = 0.0;
    for (const auto& u : data.units()) {
        if (!u.truth) throw Error(ErrorCode::NotSimulated, "unit " + u.id + " has no potential outcomes");
        s += u.truth->effect();
    }
    return s / static_cast<double>(data.population_size());
}

// Mean Y(1) - Y(0) over sampled units only (the true SATE on simulated data).
inline double true_sate(const StudyData& data) {
    double s = 0.0;
    for (const auto& u : data.units()) {
        if (!u.z) continue;
        if (!u.truth) throw Error(ErrorCode::NotSimulated, "unit " + u.id + " has no potential outcomes");
        s += u.truth->effect();
    }
    return s / static_cast<double>(data.sample_size());
}

}  // namespace genbound
