#pragma once
// Sampling propensity s(X) = Pr(Z = 1 | X) by logistic regression (IRLS), and
// quantile stratification of the population on the fitted scores.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "genbound/core.hpp"
#include "genbound/error.hpp"
#include "genbound/stats.hpp"

namespace genbound {

struct PropensityOptions {
    double tolerance = 1e-8;  // max |coefficient change|
    int max_iterations = 100;
    bool add_squares = false;  // append x_j^2 for every selected covariate
};

enum class FitStatus { Converged, MaxIterations, Separation };

inline constexpr double kScoreFloor = 1e-10;

struct PropensityModel {
    std::vector<std::size_t> covariates;  // 0-based columns of x
    bool squares = false;
    std::vector<double> coefficients;     // intercept first
    std::vector<double> scores;           // one per unit, in data order
    FitStatus status = FitStatus::Converged;
    int iterations = 0;

    bool converged() const noexcept { return status == FitStatus::Converged; }

    double linear_predictor(std::span<const double> x) const {
        double eta = coefficients[0];
        std::size_t c = 1;
        for (std::size_t j : covariates) eta += coefficients[c++] * x[j];
        if (squares)
            for (std::size_t j : covariates) eta += coefficients[c++] * x[j] * x[j];
        return eta;
    }

    double score(std::span<const double> x) const {
        return std::clamp(stats::expit(linear_predictor(x)), kScoreFloor, 1.0 - kScoreFloor);
    }
};

namespace detail {

inline Eigen::MatrixXd design_matrix(const StudyData& data, std::span<const std::size_t> cov, bool squares) {
    const auto n = static_cast<Eigen::Index>(data.population_size());
    const auto q = static_cast<Eigen::Index>(1 + cov.size() * (squares ? 2 : 1));
    Eigen::MatrixXd d(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& x = data[static_cast<std::size_t>(i)].x;
        Eigen::Index c = 0;
        d(i, c++) = 1.0;
        for (std::size_t j : cov) d(i, c++) = x[j];
        if (squares)
            for (std::size_t j : cov) d(i, c++) = x[j] * x[j];
    }
    return d;
}

}  // namespace detail

// Maximum-likelihood logit of z on an intercept plus the listed covariates.
// Throws RankDeficient when the design (or a weighted normal matrix) is singular;
// quasi-separation is reported through status, with scores clamped to [1e-10, 1 - 1e-10].
inline PropensityModel fit_propensity(const StudyData& data, std::span<const std::size_t> covariates,
                                      const PropensityOptions& opts = {}) {
    for (std::size_t j : covariates)
        if (j >= data.covariate_count())
            throw Error(ErrorCode::InvalidData, "covariate index " + std::to_string(j + 1) + " out of range");

    const Eigen::MatrixXd d = detail::design_matrix(data, covariates, opts.add_squares);
    const auto n = d.rows();
    const auto q = d.cols();
    if (n < q) throw Error(ErrorCode::RankDeficient, "fewer units than model coefficients");
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
        if (qr.rank() < q) throw Error(ErrorCode::RankDeficient, "design matrix is not of full column rank");
    }

    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = data[static_cast<std::size_t>(i)].z ? 1.0 : 0.0;

    PropensityModel model;
    model.covariates.assign(covariates.begin(), covariates.end());
    model.squares = opts.add_squares;
    model.status = FitStatus::MaxIterations;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
    beta(0) = stats::logit(data.selection_probability() == 1.0 ? 1.0 - kScoreFloor : data.selection_probability());

    Eigen::VectorXd mu(n), w(n);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        model.iterations = it;
        const Eigen::VectorXd eta = d * beta;
        bool separated = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double m = stats::expit(eta(i));
            if (m < kScoreFloor || m > 1.0 - kScoreFloor) {
                separated = true;
                m = std::clamp(m, kScoreFloor, 1.0 - kScoreFloor);
            }
            mu(i) = m;
            w(i) = m * (1.0 - m);
        }
        if (separated) {
            model.status = FitStatus::Separation;
            break;
        }
        const Eigen::MatrixXd info = d.transpose() * w.asDiagonal() * d;
        const Eigen::VectorXd grad = d.transpose() * (z - mu);
        Eigen::LLT<Eigen::MatrixXd> llt(info);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::RankDeficient, "weighted normal equations are singular");
        const Eigen::VectorXd step = llt.solve(grad);
        beta += step;
        if (step.cwiseAbs().maxCoeff() < opts.tolerance) {
            model.status = FitStatus::Converged;
            break;
        }
    }

    model.coefficients.assign(beta.data(), beta.data() + q);
    model.scores.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < data.population_size(); ++i) model.scores[i] = model.score(data[i].x);
    return model;
}

inline PropensityModel fit_propensity(const StudyData& data, std::initializer_list<std::size_t> covariates,
                                      const PropensityOptions& opts = {}) {
    const std::vector<std::size_t> cov(covariates);
    return fit_propensity(data, std::span<const std::size_t>(cov), opts);
}

struct StratumAssignment {
    int k = 1;
    std::vector<double> edges;  // k - 1 ascending cut points on the score scale
    std::vector<int> labels;    // 1..k per unit, ascending in score

    std::vector<std::size_t> population_counts() const {
        std::vector<std::size_t> c(static_cast<std::size_t>(k), 0);
        for (int l : labels) ++c[static_cast<std::size_t>(l - 1)];
        return c;
    }

    std::vector<std::vector<std::size_t>> members() const {
        std::vector<std::vector<std::size_t>> m(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < labels.size(); ++i) m[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
        return m;
    }
};

// Stratum edges are the j/k type-7 quantiles of the population scores; a score equal
// to an edge belongs to the lower stratum.
inline StratumAssignment assign_strata(std::span<const double> scores, int k) {
    if (k < 1) throw Error(ErrorCode::InvalidData, "stratum count must be >= 1");
    StratumAssignment out;
    out.k = k;
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    for (int j = 1; j < k; ++j)
        out.edges.push_back(stats::quantile_type7_sorted(sorted, static_cast<double>(j) / k));
    out.labels.reserve(scores.size());
    for (double s : scores) {
        const auto below = std::lower_bound(out.edges.begin(), out.edges.end(), s) - out.edges.begin();
        out.labels.push_back(static_cast<int>(below) + 1);
    }
    return out;
}

inline StratumAssignment assign_strata(const PropensityModel& model, const StudyData& data, int k) {
    if (model.scores.size() != data.population_size())
        throw Error(ErrorCode::InvalidData, "propensity scores do not match the population");
    return assign_strata(model.scores, k);
}

// What every stratum must contain for the assignment to be usable.
enum class StratumRequirement {
    SampledUnit,  // n_j >= 1
    BothArms,     // at least one treated and one control sampled unit
};

inline bool strata_satisfy(const StratumAssignment& a, const StudyData& data, StratumRequirement req) {
    std::vector<int> treated(static_cast<std::size_t>(a.k), 0), control(static_cast<std::size_t>(a.k), 0);
    for (std::size_t i = 0; i < data.population_size(); ++i) {
        const auto& u = data[i];
        if (!u.z) continue;
        auto j = static_cast<std::size_t>(a.labels[i] - 1);
        (*u.w ? treated : control)[j]++;
    }
    for (std::size_t j = 0; j < treated.size(); ++j) {
        if (treated[j] + control[j] == 0) return false;
        if (req == StratumRequirement::BothArms && (treated[j] == 0 || control[j] == 0)) return false;
    }
    return true;
}

// Decrements k until every stratum meets the requirement; k = 1 always terminates.
inline StratumAssignment reduce_strata(const StratumAssignment& assignment, std::span<const double> scores,
                                       const StudyData& data,
                                       StratumRequirement req = StratumRequirement::SampledUnit) {
    if (strata_satisfy(assignment, data, req)) return assignment;
    for (int k = assignment.k - 1; k >= 1; --k) {
        auto a = assign_strata(scores, k);
        if (k == 1 || strata_satisfy(a, data, req)) return a;
    }
    return assign_strata(scores, 1);
}

inline StratumAssignment reduce_strata(const StratumAssignment& assignment, const PropensityModel& model,
                                       const StudyData& data,
                                       StratumRequirement req = StratumRequirement::SampledUnit) {
    return reduce_strata(assignment, model.scores, data, req);
}

}  // namespace genbound
