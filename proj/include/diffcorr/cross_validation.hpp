#ifndef DIFFCORR_CROSS_VALIDATION_HPP
#define DIFFCORR_CROSS_VALIDATION_HPP

#include "estimators.hpp"
#include "parallel.hpp"
#include "random.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

/**
 * @file cross_validation.hpp
 * @brief Random-split selection of the thresholding constant tau over an
 * equi-spaced grid on [0, 5].
 *
 * Each of the H repetitions splits every group once into a training part of
 * about (K-1)/K of the observations and a held-out part of about 1/K. The
 * estimator is fitted on the training parts for each grid value and scored in
 * squared Frobenius norm against the same statistic computed on the held-out
 * parts. Losses are averaged over repetitions and the smallest minimizing tau wins.
 */

namespace diffcorr {

/// Two-group estimators whose tau can be selected by cv_select_tau.
enum class EstimatorKind { diff_corr, diff_cov, cross_corr };

/// Single-group fits used by the separate-estimation baselines.
enum class SingleKind { covariance, correlation };

struct CvConfig {
    std::size_t k_folds = 5;
    std::size_t h_repeats = 5;
    /// Grid is {0, 1/N, ..., 5N/N}.
    std::size_t grid_n = 50;
    std::uint64_t seed = 0;
    ThresholdRule rule;
    /// Size of the X block, used only by EstimatorKind::cross_corr.
    std::size_t cross_split = 0;
    /// Repetitions evaluated concurrently. Results do not depend on this.
    std::size_t threads = 1;
};

struct CvResult {
    double tau_hat = 0.0;
    std::vector<double> grid;
    /// Average held-out loss L(tau) at each grid point.
    std::vector<double> losses;
    std::size_t splits_used = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct CvSplit {
    SplitIndices group1;
    SplitIndices group2;
};

inline std::vector<double> tau_grid(std::size_t grid_n) {
    if (grid_n < 1) {
        throw ValidationError("cross-validation grid resolution must be >= 1");
    }
    std::vector<double> grid(5 * grid_n + 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = static_cast<double>(i) / static_cast<double>(grid_n);
    }
    return grid;
}

namespace detail {

inline void check_cv_config(const CvConfig& cfg) {
    if (cfg.k_folds < 2) {
        throw ValidationError("cross-validation needs at least 2 folds");
    }
    if (cfg.h_repeats < 1) {
        throw ValidationError("cross-validation needs at least 1 repetition");
    }
    tau_grid(cfg.grid_n);
}

inline bool has_constant_column(const Matrix& x, const std::vector<std::size_t>& rows) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double first = x(static_cast<Eigen::Index>(rows.front()), j);
        bool constant = true;
        for (auto r : rows) {
            if (x(static_cast<Eigen::Index>(r), j) != first) {
                constant = false;
                break;
            }
        }
        if (constant) {
            return true;
        }
    }
    return false;
}

// A shuffled K-fold partition with fold sizes differing by at most one; fold 0 is held out.
inline SplitIndices draw_partition(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    SplitIndices out;
    for (std::size_t q = 0; q < n; ++q) {
        (q % k == 0 ? out.test : out.train).push_back(perm[q]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline SplitIndices draw_valid_partition(const SampleMatrix& x, std::size_t k, Rng& rng, const char* group) {
    if (x.n() < 2 * k) {
        throw ValidationError(std::string("cross-validation: ") + group + " has " + std::to_string(x.n()) +
                              " observations, need at least " + std::to_string(2 * k) + " for " +
                              std::to_string(k) + " folds");
    }
    constexpr int max_redraws = 10;
    for (int attempt = 0; attempt <= max_redraws; ++attempt) {
        auto split = draw_partition(x.n(), k, rng);
        if (!has_constant_column(x.data(), split.train) && !has_constant_column(x.data(), split.test)) {
            return split;
        }
    }
    throw DegenerateSplit(std::string("cross-validation: every split of ") + group +
                          " left a variable with zero variance");
}

inline std::size_t argmin_first(const std::vector<double>& losses) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) {
        if (losses[i] < losses[best]) {
            best = i;
        }
    }
    return best;
}

// Averages per-repetition loss curves in repetition order and picks the smallest minimizer.
inline CvResult reduce_losses(const std::vector<std::vector<double>>& per_split, std::vector<double> grid) {
    CvResult out;
    out.grid = std::move(grid);
    out.losses.assign(out.grid.size(), 0.0);
    for (const auto& curve : per_split) {
        for (std::size_t g = 0; g < curve.size(); ++g) {
            out.losses[g] += curve[g];
        }
    }
    for (auto& l : out.losses) {
        l /= static_cast<double>(per_split.size());
    }
    out.splits_used = per_split.size();
    out.tau_hat = out.grid[argmin_first(out.losses)];
    return out;
}

} // namespace detail

/// The H random train/held-out divisions for both groups, determined by (seed, repetition).
inline std::vector<CvSplit> cv_splits(const TwoGroupDataset& ds, const CvConfig& cfg) {
    detail::check_cv_config(cfg);
    std::vector<CvSplit> out;
    out.reserve(cfg.h_repeats);
    for (std::size_t h = 0; h < cfg.h_repeats; ++h) {
        auto rng = make_rng(cfg.seed, {h});
        CvSplit s;
        s.group1 = detail::draw_valid_partition(ds.group1(), cfg.k_folds, rng, "group 1");
        s.group2 = detail::draw_valid_partition(ds.group2(), cfg.k_folds, rng, "group 2");
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<SplitIndices> cv_splits(const SampleMatrix& x, const CvConfig& cfg) {
    detail::check_cv_config(cfg);
    std::vector<SplitIndices> out;
    out.reserve(cfg.h_repeats);
    for (std::size_t h = 0; h < cfg.h_repeats; ++h) {
        auto rng = make_rng(cfg.seed, {h});
        out.push_back(detail::draw_valid_partition(x, cfg.k_folds, rng, "sample"));
    }
    return out;
}

inline CvResult cv_select_tau(const TwoGroupDataset& ds, const CvConfig& cfg, EstimatorKind kind) {
    const auto splits = cv_splits(ds, cfg);
    const auto grid = tau_grid(cfg.grid_n);
    if (kind == EstimatorKind::cross_corr && (cfg.cross_split < 1 || cfg.cross_split >= ds.p())) {
        throw ValidationError("cross-validation: invalid cross-correlation split " + std::to_string(cfg.cross_split));
    }
    std::vector<std::vector<double>> per_split(splits.size());

    parallel_for(
        splits.size(),
        [&](std::size_t h) {
            const auto& s = splits[h];
            const auto train1 = compute_moments(ds.group1().subset_rows(s.group1.train));
            const auto train2 = compute_moments(ds.group2().subset_rows(s.group2.train));
            const auto test1 = compute_moments(ds.group1().subset_rows(s.group1.test));
            const auto test2 = compute_moments(ds.group2().subset_rows(s.group2.test));

            Matrix raw, target;
            if (kind == EstimatorKind::diff_cov) {
                raw = train1.sigma_hat.values() - train2.sigma_hat.values();
                target = test1.sigma_hat.values() - test2.sigma_hat.values();
            } else {
                raw = train1.r_hat.values() - train2.r_hat.values();
                target = test1.r_hat.values() - test2.r_hat.values();
            }

            auto& curve = per_split[h];
            curve.resize(grid.size());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const auto t = kind == EstimatorKind::diff_cov ? diff_cov_threshold(train1, train2, grid[g])
                                                               : diff_corr_threshold(train1, train2, grid[g]);
                const Matrix err = apply_threshold(raw, t, cfg.rule) - target;
                if (kind == EstimatorKind::cross_corr) {
                    const auto p1 = static_cast<Eigen::Index>(cfg.cross_split);
                    curve[g] = err.block(0, p1, p1, err.cols() - p1).squaredNorm();
                } else {
                    curve[g] = err.squaredNorm();
                }
            }
        },
        cfg.threads);

    return detail::reduce_losses(per_split, grid);
}

/**
 * Tau selection for one group's own thresholded covariance (diagonal exempt)
 * or thresholded correlation (unit diagonal), scored against the held-out
 * sample covariance or correlation respectively.
 */
inline CvResult cv_select_tau(const SampleMatrix& x, const CvConfig& cfg, SingleKind kind) {
    const auto splits = cv_splits(x, cfg);
    const auto grid = tau_grid(cfg.grid_n);
    std::vector<std::vector<double>> per_split(splits.size());

    parallel_for(
        splits.size(),
        [&](std::size_t h) {
            const auto train = compute_moments(x.subset_rows(splits[h].train));
            const auto test = compute_moments(x.subset_rows(splits[h].test));
            auto& curve = per_split[h];
            curve.resize(grid.size());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                Matrix err;
                if (kind == SingleKind::covariance) {
                    err = apply_threshold(train.sigma_hat.values(), single_cov_threshold(train, grid[g]), cfg.rule);
                    err.diagonal() = train.sigma_hat.values().diagonal();
                    err -= test.sigma_hat.values();
                } else {
                    err = detail::thresholded_single_correlation(train, single_corr_threshold(train, grid[g]),
                                                                 cfg.rule) -
                          test.r_hat.values();
                }
                curve[g] = err.squaredNorm();
            }
        },
        cfg.threads);

    return detail::reduce_losses(per_split, grid);
}

/// An estimate refitted on the full data at the cross-validated tau.
struct CvEstimate {
    DifferentialEstimate estimate;
    CvResult cv;
};

inline CvEstimate estimate_with_cv(const TwoGroupDataset& ds, const CvConfig& cfg, EstimatorKind kind) {
    auto cv = cv_select_tau(ds, cfg, kind);
    switch (kind) {
    case EstimatorKind::diff_corr: return {estimate_diff_corr(ds, cv.tau_hat, cfg.rule), std::move(cv)};
    case EstimatorKind::diff_cov: return {estimate_diff_cov(ds, cv.tau_hat, cfg.rule), std::move(cv)};
    case EstimatorKind::cross_corr:
        return {estimate_cross_corr(ds, cfg.cross_split, cv.tau_hat, cfg.rule), std::move(cv)};
    }
    throw ValidationError("unknown estimator kind");
}

} // namespace diffcorr

#endif
