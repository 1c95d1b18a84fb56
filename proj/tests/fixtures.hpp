#pragma once
// Small hand-built datasets shared by the unit tests.

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "genbound/core.hpp"

namespace genbound::testing {

inline UnitRecord sampled(std::string id, bool treated, double y, std::vector<double> x = {}) {
    UnitRecord u;
    u.id = std::move(id);
    u.z = true;
    u.w = treated;
    u.y = y;
    u.x = std::move(x);
    return u;
}

inline UnitRecord population(std::string id, std::vector<double> x = {}) {
    UnitRecord u;
    u.id = std::move(id);
    u.x = std::move(x);
    return u;
}

// Random population with `n` sampled units (half treated) among `N`, p covariates.
inline StudyData random_study(std::mt19937_64& rng, std::size_t N, std::size_t n, std::size_t p,
                              OutcomeRange range = {-2.0, 2.0}) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> y(range.lo, range.hi);
    std::vector<UnitRecord> units;
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> x(p);
        for (auto& v : x) v = normal(rng);
        if (i < n)
            units.push_back(sampled("s" + std::to_string(i), i % 2 == 0, y(rng), x));
        else
            units.push_back(population("p" + std::to_string(i), x));
    }
    return StudyData(std::move(units), range);
}

// 20 units, 2 covariates, selection overlapping in both covariates.
struct LogitFixture {
    std::vector<std::vector<double>> x;
    std::vector<int> z;

    StudyData data() const {
        std::vector<UnitRecord> units;
        bool arm = true;
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (z[i]) {
                units.push_back(sampled("u" + std::to_string(i), arm, 0.0, x[i]));
                arm = !arm;
            } else {
                units.push_back(population("u" + std::to_string(i), x[i]));
            }
        }
        return StudyData(std::move(units), {-1.0, 1.0});
    }
};

inline LogitFixture logit_fixture() {
    LogitFixture f;
    const double x1[] = {-1.9, -1.5, -1.2, -1.0, -0.8, -0.5, -0.3, -0.1, 0.0, 0.2,
                         0.3,  0.5,  0.7,  0.9,  1.0,  1.2,  1.4,  1.7,  2.0, 2.3};
    const double x2[] = {0.4, -0.3, 1.1, -0.9, 0.2, 0.8, -1.4, 0.5, -0.2, 1.3,
                         -0.7, 0.1, 0.9, -1.1, 0.6, -0.4, 1.5, -0.8, 0.3, -0.1};
    const int z[] = {0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 1};
    for (int i = 0; i < 20; ++i) {
        f.x.push_back({x1[i], x2[i]});
        f.z.push_back(z[i]);
    }
    return f;
}

// 10 sampled units (5 per arm) inside a population of 30, as (z, w, y) triples.
struct BootUnit {
    bool z;
    bool w;
    double y;
};

inline std::vector<BootUnit> bootstrap_fixture() {
    const double y[] = {0.3, -1.2, 1.7, 0.0, 0.9, -0.4, 1.1, -1.9, 0.6, 0.25};
    std::vector<BootUnit> u;
    for (int i = 0; i < 10; ++i) u.push_back({true, i % 2 == 0, y[i]});
    for (int i = 0; i < 20; ++i) u.push_back({false, false, 0.0});
    return u;
}

inline StudyData to_study(const std::vector<BootUnit>& units, OutcomeRange range) {
    std::vector<UnitRecord> recs;
    for (std::size_t i = 0; i < units.size(); ++i)
        recs.push_back(units[i].z ? sampled("u" + std::to_string(i), units[i].w, units[i].y)
                                  : population("u" + std::to_string(i)));
    return StudyData(std::move(recs), range);
}

}  // namespace genbound::testing
