#ifndef DIFFCORR_ESTIMATORS_HPP
#define DIFFCORR_ESTIMATORS_HPP

#include "moments.hpp"
#include "thresholding.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

/**
 * @file estimators.hpp
 * @brief Entrywise thresholding estimators of differential correlation, single
 * correlation, differential covariance and differential cross-correlation
 * matrices, plus the comparison baselines and support ranking.
 */

namespace diffcorr {

/**
 * @brief A thresholded matrix with the thresholds that produced it.
 *
 * For the direct estimators, every entry is zero where the raw statistic is
 * within its threshold and differs from the raw statistic by at most the threshold.
 */
struct DifferentialEstimate {
    Matrix estimate;
    ThresholdMatrix thresholds;
    double tau = 0.0;
    ThresholdRule rule;
    /// Nonzero entries per row; diagonal excluded for square estimates.
    std::vector<std::size_t> support_count;
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;

    std::size_t nonzero_count() const {
        return std::accumulate(support_count.begin(), support_count.end(), std::size_t{0});
    }
};

namespace detail {

inline std::vector<std::size_t> count_support(const Matrix& m, bool skip_diagonal) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(m.rows()), 0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (skip_diagonal && i == j) {
                continue;
            }
            if (m(i, j) != 0.0) {
                ++counts[static_cast<std::size_t>(i)];
            }
        }
    }
    return counts;
}

inline DifferentialEstimate make_square_estimate(Matrix estimate, ThresholdMatrix thresholds, double tau,
                                                 const ThresholdRule& rule,
                                                 const std::vector<std::string>& names) {
    DifferentialEstimate out;
    out.support_count = count_support(estimate, true);
    out.estimate = std::move(estimate);
    out.thresholds = std::move(thresholds);
    out.tau = tau;
    out.rule = rule;
    out.row_names = names;
    out.col_names = names;
    return out;
}

// Thresholded covariance with an untouched diagonal, normalized to unit diagonal.
inline Matrix thresholded_covariance_to_correlation(const MomentSet& m, const ThresholdMatrix& t,
                                                    const ThresholdRule& rule) {
    const Matrix& s = m.sigma_hat.values();
    Matrix st = apply_threshold(s, t, rule);
    st.diagonal() = s.diagonal();
    for (Eigen::Index i = 0; i < st.rows(); ++i) {
        if (!(st(i, i) > 0.0)) {
            throw DegenerateVariable(static_cast<std::size_t>(i));
        }
    }
    return sample_correlation(SquareSymMatrix(std::move(st))).values();
}

inline Matrix thresholded_single_correlation(const MomentSet& m, const ThresholdMatrix& t,
                                             const ThresholdRule& rule) {
    Matrix r = apply_threshold(m.r_hat.values(), t, rule);
    r.diagonal().setOnes();
    return r;
}

} // namespace detail

/// Threshold R1 - R2 at the differential correlation levels. The diagonal is exactly zero.
inline DifferentialEstimate estimate_diff_corr(const MomentSet& m1, const MomentSet& m2, double tau,
                                               const ThresholdRule& rule, const std::vector<std::string>& names) {
    const Matrix raw = m1.r_hat.values() - m2.r_hat.values();
    auto t = diff_corr_threshold(m1, m2, tau);
    Matrix est = apply_threshold(raw, t, rule);
    return detail::make_square_estimate(std::move(est), std::move(t), tau, rule, names);
}

inline DifferentialEstimate estimate_diff_corr(const TwoGroupDataset& ds, double tau, const ThresholdRule& rule) {
    return estimate_diff_corr(compute_moments(ds.group1()), compute_moments(ds.group2()), tau, rule, ds.names());
}

/// Threshold the sample correlation of a single group. The diagonal is kept at 1.
inline DifferentialEstimate estimate_single_corr(const SampleMatrix& x, double tau, const ThresholdRule& rule) {
    const auto m = compute_moments(x);
    auto t = single_corr_threshold(m, tau);
    Matrix est = detail::thresholded_single_correlation(m, t, rule);
    return detail::make_square_estimate(std::move(est), std::move(t), tau, rule, x.names());
}

inline DifferentialEstimate estimate_diff_cov(const TwoGroupDataset& ds, double tau, const ThresholdRule& rule) {
    const auto m1 = compute_moments(ds.group1());
    const auto m2 = compute_moments(ds.group2());
    const Matrix raw = m1.sigma_hat.values() - m2.sigma_hat.values();
    auto t = diff_cov_threshold(m1, m2, tau);
    Matrix est = apply_threshold(raw, t, rule);
    return detail::make_square_estimate(std::move(est), std::move(t), tau, rule, ds.names());
}

/**
 * The cross block between variables [0, split) and [split, p) of the
 * differential correlation estimate. Threshold levels use the full dimension p.
 */
inline DifferentialEstimate estimate_cross_corr(const TwoGroupDataset& ds, std::size_t split, double tau,
                                                const ThresholdRule& rule) {
    const std::size_t p = ds.p();
    if (split < 1 || split >= p) {
        throw ValidationError("cross-correlation split must satisfy 1 <= split < p (p = " + std::to_string(p) +
                              ", split = " + std::to_string(split) + ")");
    }
    auto full = estimate_diff_corr(ds, tau, rule);
    const auto p1 = static_cast<Eigen::Index>(split);
    const auto p2 = static_cast<Eigen::Index>(p - split);
    DifferentialEstimate out;
    out.estimate = full.estimate.block(0, p1, p1, p2);
    out.thresholds = ThresholdMatrix{full.thresholds.values.block(0, p1, p1, p2), tau};
    out.tau = tau;
    out.rule = rule;
    out.support_count = detail::count_support(out.estimate, false);
    out.row_names.assign(ds.names().begin(), ds.names().begin() + p1);
    out.col_names.assign(ds.names().begin() + p1, ds.names().end());
    return out;
}

/**
 * Baseline: threshold each group's covariance at tau_t * sqrt(theta_ij log p / n)
 * (diagonal exempt), normalize each to a correlation matrix and subtract.
 */
inline DifferentialEstimate baseline_cov_then_normalize(const TwoGroupDataset& ds, double tau1, double tau2,
                                                        const ThresholdRule& rule) {
    const auto m1 = compute_moments(ds.group1());
    const auto m2 = compute_moments(ds.group2());
    auto t1 = single_cov_threshold(m1, tau1);
    auto t2 = single_cov_threshold(m2, tau2);
    Matrix est = detail::thresholded_covariance_to_correlation(m1, t1, rule) -
                 detail::thresholded_covariance_to_correlation(m2, t2, rule);
    est.diagonal().setZero();
    return detail::make_square_estimate(std::move(est), ThresholdMatrix{t1.values + t2.values, tau1}, tau1, rule,
                                        ds.names());
}

inline DifferentialEstimate baseline_cov_then_normalize(const TwoGroupDataset& ds, double tau,
                                                        const ThresholdRule& rule) {
    return baseline_cov_then_normalize(ds, tau, tau, rule);
}

/// Baseline: difference of two separately thresholded single correlation estimates.
inline DifferentialEstimate baseline_separate_corr(const TwoGroupDataset& ds, double tau1, double tau2,
                                                   const ThresholdRule& rule) {
    auto e1 = estimate_single_corr(ds.group1(), tau1, rule);
    auto e2 = estimate_single_corr(ds.group2(), tau2, rule);
    Matrix est = e1.estimate - e2.estimate;
    return detail::make_square_estimate(std::move(est),
                                        ThresholdMatrix{e1.thresholds.values + e2.thresholds.values, tau1}, tau1,
                                        rule, ds.names());
}

inline DifferentialEstimate baseline_separate_corr(const TwoGroupDataset& ds, double tau, const ThresholdRule& rule) {
    return baseline_separate_corr(ds, tau, tau, rule);
}

/// Baseline: the raw difference of sample correlations, zero thresholds.
inline DifferentialEstimate baseline_sample_difference(const TwoGroupDataset& ds) {
    const auto m1 = compute_moments(ds.group1());
    const auto m2 = compute_moments(ds.group2());
    Matrix est = m1.r_hat.values() - m2.r_hat.values();
    const auto p = est.rows();
    return detail::make_square_estimate(std::move(est), ThresholdMatrix{Matrix::Zero(p, p), 0.0}, 0.0,
                                        ThresholdRule::soft(), ds.names());
}

struct SupportEntry {
    std::string label;
    std::size_t count = 0;

    bool operator==(const SupportEntry&) const = default;
};

/// Rows ranked by their number of nonzero off-diagonal entries; ties keep the original variable order.
inline std::vector<SupportEntry> support_ranking(const DifferentialEstimate& est) {
    if (est.estimate.rows() != est.estimate.cols()) {
        throw ValidationError("support_ranking needs a square estimate");
    }
    const auto counts = detail::count_support(est.estimate, true);
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    std::vector<SupportEntry> out;
    out.reserve(order.size());
    for (auto i : order) {
        std::string label = i < est.row_names.size() ? est.row_names[i] : "V" + std::to_string(i + 1);
        out.push_back({std::move(label), counts[i]});
    }
    return out;
}

} // namespace diffcorr

#endif
