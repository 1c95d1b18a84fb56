#pragma once
// Small numeric helpers shared across modules.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace genbound::stats {

// Two-sided 95% normal critical value.
inline constexpr double z975 = 1.959964;

inline double expit(double a) noexcept {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

inline double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

// Left-to-right accumulation; callers rely on the order for bit-exact reproducibility.
inline double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean of empty range");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Unbiased (n - 1) variance.
inline double variance(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("variance needs at least two values");
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(v.size() - 1);
}

inline double stddev(std::span<const double> v) { return std::sqrt(variance(v)); }

// Order-statistic quantile with linear interpolation (Hyndman-Fan type 7) on sorted input.
inline double quantile_type7_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty range");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile_type7(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_type7_sorted(values, p);
}

// Monte Carlo standard error of a mean: sd across replicates / sqrt(replicates).
inline double mcse(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    return stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace genbound::stats
