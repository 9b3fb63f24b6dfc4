#ifndef DIFFCORR_SIMULATION_HPP
#define DIFFCORR_SIMULATION_HPP

#include "cross_validation.hpp"
#include "estimators.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

/**
 * @file simulation.hpp
 * @brief Paired correlation models with sparse differences, Gaussian sampling,
 * and a Monte-Carlo runner that summarizes estimator losses.
 */

namespace diffcorr {

enum class ModelKind { model1, model2 };

inline std::string to_string(ModelKind k) { return k == ModelKind::model1 ? "model1" : "model2"; }

struct ModelSpec {
    ModelKind kind = ModelKind::model2;
    std::size_t p = 100;
    std::uint64_t seed = 0;
};

struct CorrelationPair {
    SquareSymMatrix r1;
    SquareSymMatrix r2;
    /// Magnitude of the perturbation in Model 1; zero for Model 2.
    double lambda = 0.0;
};

inline double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCategory::internal, "eigenvalue solver did not converge");
    }
    return solver.eigenvalues()(0);
}

/// Minimum eigenvalue required of both Model 1 matrices.
inline constexpr double model1_min_eigenvalue = 1e-3;

/**
 * Model 1 for a given sign pattern D0 (p/2 x p/2, symmetric, zero diagonal):
 * R1 = diag(B1, I), R2 = diag(B1 + lambda D0, I) with B1 unit diagonal and 0.2
 * off the diagonal. lambda is the largest value in (0, 0.2] keeping the minimum
 * eigenvalue of B1 + lambda D0 at or above 1e-3. Returns nothing if even
 * lambda = 1e-4 fails.
 */
inline std::optional<CorrelationPair> model1_from_pattern(std::size_t p, const Matrix& d0) {
    if (p < 4 || p % 2 != 0) {
        throw ValidationError("Model 1 needs an even dimension p >= 4");
    }
    const auto h = static_cast<Eigen::Index>(p / 2);
    if (d0.rows() != h || d0.cols() != h) {
        throw ValidationError("Model 1 pattern must be p/2 x p/2");
    }
    const Matrix b1 = Matrix::Constant(h, h, 0.2) + 0.8 * Matrix::Identity(h, h);
    const auto pp = static_cast<Eigen::Index>(p);
    Matrix r1 = Matrix::Identity(pp, pp);
    r1.topLeftCorner(h, h) = b1;
    // Feasibility is judged on the assembled matrix so the returned R2 meets the bound exactly.
    auto assemble = [&](double lambda) {
        Matrix r2 = r1;
        r2.topLeftCorner(h, h) += lambda * d0;
        return r2;
    };
    auto feasible = [&](double lambda) { return min_eigenvalue(assemble(lambda)) >= model1_min_eigenvalue; };

    double lambda = 0.2;
    if (!feasible(lambda)) {
        if (!feasible(1e-4)) {
            return std::nullopt;
        }
        // The minimum eigenvalue is concave in lambda, so the feasible set is an interval from 0.
        double lo = 1e-4, hi = 0.2;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        lambda = lo;
    }
    Matrix r2 = assemble(lambda);
    return CorrelationPair{SquareSymMatrix(std::move(r1)), SquareSymMatrix(std::move(r2)), lambda};
}

/// Random symmetric sign pattern: +1 and -1 each with probability 0.05 above the diagonal, zero diagonal.
inline Matrix draw_model1_pattern(std::size_t half, Rng& rng) {
    const auto h = static_cast<Eigen::Index>(half);
    Matrix d0 = Matrix::Zero(h, h);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < h; ++i) {
        for (Eigen::Index j = i + 1; j < h; ++j) {
            const double u = unif(rng);
            const double v = u < 0.05 ? 1.0 : (u >= 0.95 ? -1.0 : 0.0);
            d0(i, j) = v;
            d0(j, i) = v;
        }
    }
    return d0;
}

inline CorrelationPair generate_model1(std::size_t p, std::uint64_t seed) {
    if (p < 4 || p % 2 != 0) {
        throw ValidationError("Model 1 needs an even dimension p >= 4");
    }
    auto rng = make_rng(seed, {1});
    constexpr int max_redraws = 20;
    for (int attempt = 0; attempt <= max_redraws; ++attempt) {
        const Matrix d0 = draw_model1_pattern(p / 2, rng);
        if (auto pair = model1_from_pattern(p, d0)) {
            return std::move(*pair);
        }
    }
    throw GenerationFailed("Model 1: no positive definite perturbation found after " + std::to_string(max_redraws) +
                           " redraws");
}

/**
 * Model 2: r1_ij = 0.2 [i = j] + 0.8 (-1)^|i-j| max(1 - |i-j| / 10, 0) and
 * r2_ij = r1_ij + 0.2 [i != j] max(1 - |i-j| / 3, 0).
 */
inline CorrelationPair generate_model2(std::size_t p) {
    if (p < 1) {
        throw ValidationError("Model 2 needs p >= 1");
    }
    const auto pp = static_cast<Eigen::Index>(p);
    Matrix r1(pp, pp), r2(pp, pp);
    for (Eigen::Index i = 0; i < pp; ++i) {
        for (Eigen::Index j = 0; j < pp; ++j) {
            const auto d = std::abs(i - j);
            const double sign = d % 2 == 0 ? 1.0 : -1.0;
            const double v = (i == j ? 0.2 : 0.0) + 0.8 * sign * std::max(1.0 - static_cast<double>(d) / 10.0, 0.0);
            r1(i, j) = v;
            r2(i, j) = v + (i != j ? 0.2 * std::max(1.0 - static_cast<double>(d) / 3.0, 0.0) : 0.0);
        }
    }
    for (const Matrix* m : {&r1, &r2}) {
        const double ev = min_eigenvalue(*m);
        if (ev < -1e-10) {
            throw GenerationFailed("Model 2 is indefinite at p = " + std::to_string(p) + " (min eigenvalue " +
                                   std::to_string(ev) + ")");
        }
    }
    return CorrelationPair{SquareSymMatrix(std::move(r1)), SquareSymMatrix(std::move(r2)), 0.0};
}

inline CorrelationPair generate_model(const ModelSpec& spec) {
    return spec.kind == ModelKind::model1 ? generate_model1(spec.p, spec.seed) : generate_model2(spec.p);
}

/// sigma_ij = |omega_i|^{1/2} |omega_j|^{1/2} r_ij for a given omega.
inline SquareSymMatrix scale_to_covariance(const SquareSymMatrix& r, const Vector& omega) {
    if (static_cast<std::size_t>(omega.size()) != r.p()) {
        throw ValidationError("scale vector length does not match the matrix dimension");
    }
    const Vector s = omega.cwiseAbs().cwiseSqrt();
    Matrix sigma = s.asDiagonal() * r.values() * s.asDiagonal();
    detail::mirror_lower(sigma);
    return SquareSymMatrix(std::move(sigma));
}

/// Standard normal scale vector; entries with |omega_i| < 1e-6 are redrawn.
inline Vector draw_omega(std::size_t p, std::uint64_t seed) {
    auto rng = make_rng(seed, {2});
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector omega(static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < omega.size(); ++i) {
        double w = normal(rng);
        while (std::abs(w) < 1e-6) {
            w = normal(rng);
        }
        omega(i) = w;
    }
    return omega;
}

inline SquareSymMatrix scale_to_covariance(const SquareSymMatrix& r, std::uint64_t seed) {
    return scale_to_covariance(r, draw_omega(r.p(), seed));
}

/**
 * n draws from N(0, sigma) as rows: X = Z L^T with L a Cholesky factor, or
 * V diag(sqrt(max(ev, 0))) from the eigendecomposition when the Cholesky
 * factorization fails.
 */
inline SampleMatrix mvn_sample(const SquareSymMatrix& sigma, std::size_t n, std::uint64_t seed) {
    const Matrix& s = sigma.values();
    const auto p = s.rows();
    Matrix factor;
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() == Eigen::Success) {
        factor = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
        if (solver.info() != Eigen::Success) {
            throw Error(ErrorCategory::internal, "mvn_sample: eigendecomposition did not converge");
        }
        if (solver.eigenvalues()(0) < -1e-8) {
            throw NotPSD(solver.eigenvalues()(0));
        }
        const Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factor = solver.eigenvectors() * root.asDiagonal();
    }
    auto rng = make_rng(seed, {3});
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
        for (Eigen::Index j = 0; j < p; ++j) {
            z(k, j) = normal(rng);
        }
    }
    return SampleMatrix(z * factor.transpose());
}

// ---------------------------------------------------------------------------
// Monte-Carlo benchmark

enum class BenchmarkEstimator { diff_corr, cov_then_normalize, separate_corr, sample_difference };

inline std::string to_string(BenchmarkEstimator e) {
    switch (e) {
    case BenchmarkEstimator::diff_corr: return "diff-corr";
    case BenchmarkEstimator::cov_then_normalize: return "cov-then-normalize";
    case BenchmarkEstimator::separate_corr: return "separate-corr";
    case BenchmarkEstimator::sample_difference: return "sample-difference";
    }
    return "unknown";
}

inline BenchmarkEstimator parse_benchmark_estimator(const std::string& name) {
    for (auto e : {BenchmarkEstimator::diff_corr, BenchmarkEstimator::cov_then_normalize,
                   BenchmarkEstimator::separate_corr, BenchmarkEstimator::sample_difference}) {
        if (to_string(e) == name) {
            return e;
        }
    }
    throw ValidationError("unknown benchmark estimator '" + name + "'");
}

enum class LossNorm { spectral, l1, frobenius };

inline std::string to_string(LossNorm n) {
    switch (n) {
    case LossNorm::spectral: return "spectral";
    case LossNorm::l1: return "l1";
    case LossNorm::frobenius: return "frobenius";
    }
    return "unknown";
}

inline constexpr std::array<LossNorm, 3> all_norms{LossNorm::spectral, LossNorm::l1, LossNorm::frobenius};

struct SampleSize {
    std::size_t p = 100;
    std::size_t n1 = 50;
    std::size_t n2 = 50;
};

struct BenchmarkConfig {
    ModelKind model = ModelKind::model2;
    std::vector<SampleSize> sizes{{100, 50, 50}};
    std::size_t reps = 20;
    std::vector<ThresholdRule> rules{ThresholdRule::hard(), ThresholdRule::adaptive_lasso()};
    std::vector<BenchmarkEstimator> estimators{BenchmarkEstimator::diff_corr, BenchmarkEstimator::cov_then_normalize,
                                               BenchmarkEstimator::separate_corr,
                                               BenchmarkEstimator::sample_difference};
    std::uint64_t seed = 1;
    std::size_t cv_folds = 5;
    std::size_t cv_repeats = 5;
    std::size_t cv_grid = 50;
    std::size_t threads = worker_count();
};

struct BenchmarkCell {
    ModelKind model = ModelKind::model2;
    SampleSize size;
    BenchmarkEstimator estimator = BenchmarkEstimator::diff_corr;
    ThresholdRule rule;
    LossNorm norm = LossNorm::spectral;
    double mean = 0.0;
    double sd = 0.0;
    /// Successful replications behind mean and sd.
    std::size_t reps = 0;
};

struct BenchmarkReport {
    std::vector<BenchmarkCell> cells;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    /// Cells left out because fewer than 80% of their replications succeeded.
    std::vector<std::string> dropped;

    /// The cell for (estimator, rule, norm) at a sample size, or nullptr when absent.
    const BenchmarkCell* find(BenchmarkEstimator e, RuleKind rule, LossNorm norm, const SampleSize& size) const {
        for (const auto& c : cells) {
            if (c.estimator == e && c.rule.kind == rule && c.norm == norm && c.size.p == size.p &&
                c.size.n1 == size.n1 && c.size.n2 == size.n2) {
                return &c;
            }
        }
        return nullptr;
    }
};

/// Loss of an estimate against the truth in each of the three norms.
inline std::array<double, 3> estimation_losses(const Matrix& estimate, const Matrix& truth) {
    const Matrix err = estimate - truth;
    return {spectral_norm(err), matrix_l1_norm(err), frobenius_norm(err)};
}

/// One replication's data: the true pair and a sample from each group.
struct Replicate {
    CorrelationPair truth;
    TwoGroupDataset data;
};

inline Replicate draw_replicate(ModelKind model, const SampleSize& size, std::uint64_t seed) {
    auto truth = model == ModelKind::model1 ? generate_model1(size.p, derive_seed(seed, {10}))
                                            : generate_model2(size.p);
    const auto sigma1 = scale_to_covariance(truth.r1, derive_seed(seed, {11}));
    const auto sigma2 = scale_to_covariance(truth.r2, derive_seed(seed, {12}));
    auto x1 = mvn_sample(sigma1, size.n1, derive_seed(seed, {13}));
    auto x2 = mvn_sample(sigma2, size.n2, derive_seed(seed, {14}));
    return Replicate{std::move(truth), TwoGroupDataset(std::move(x1), std::move(x2))};
}

/// Fit one benchmark estimator with its tau chosen by cross-validation.
inline Matrix fit_benchmark_estimator(const TwoGroupDataset& ds, BenchmarkEstimator e, const ThresholdRule& rule,
                                      const CvConfig& base) {
    CvConfig cfg = base;
    cfg.rule = rule;
    switch (e) {
    case BenchmarkEstimator::diff_corr: return estimate_with_cv(ds, cfg, EstimatorKind::diff_corr).estimate.estimate;
    case BenchmarkEstimator::cov_then_normalize: {
        const double t1 = cv_select_tau(ds.group1(), cfg, SingleKind::covariance).tau_hat;
        cfg.seed = derive_seed(base.seed, {2});
        const double t2 = cv_select_tau(ds.group2(), cfg, SingleKind::covariance).tau_hat;
        return baseline_cov_then_normalize(ds, t1, t2, rule).estimate;
    }
    case BenchmarkEstimator::separate_corr: {
        const double t1 = cv_select_tau(ds.group1(), cfg, SingleKind::correlation).tau_hat;
        cfg.seed = derive_seed(base.seed, {2});
        const double t2 = cv_select_tau(ds.group2(), cfg, SingleKind::correlation).tau_hat;
        return baseline_separate_corr(ds, t1, t2, rule).estimate;
    }
    case BenchmarkEstimator::sample_difference: return baseline_sample_difference(ds).estimate;
    }
    throw ValidationError("unknown benchmark estimator");
}

inline BenchmarkReport run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.reps < 2) {
        throw ValidationError("benchmark needs at least 2 replications");
    }
    if (cfg.rules.empty() || cfg.estimators.empty() || cfg.sizes.empty()) {
        throw ValidationError("benchmark needs at least one size, rule and estimator");
    }
    BenchmarkReport report;
    report.replications = cfg.reps;
    report.seed = cfg.seed;

    const std::size_t n_est = cfg.estimators.size();
    const std::size_t n_rule = cfg.rules.size();

    for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
        const auto& size = cfg.sizes[s];
        // losses[rep][est * n_rule + rule] holds three norms, or nothing on failure
        std::vector<std::vector<std::optional<std::array<double, 3>>>> losses(
            cfg.reps, std::vector<std::optional<std::array<double, 3>>>(n_est * n_rule));

        parallel_for(
            cfg.reps,
            [&](std::size_t rep) {
                const std::uint64_t rep_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(s), rep});
                std::optional<Replicate> sample;
                try {
                    sample.emplace(draw_replicate(cfg.model, size, rep_seed));
                } catch (const Error&) {
                    return;
                }
                const Matrix truth = sample->truth.r1.values() - sample->truth.r2.values();
                CvConfig cv;
                cv.k_folds = cfg.cv_folds;
                cv.h_repeats = cfg.cv_repeats;
                cv.grid_n = cfg.cv_grid;
                cv.seed = derive_seed(rep_seed, {20});
                for (std::size_t e = 0; e < n_est; ++e) {
                    std::optional<std::array<double, 3>> shared;
                    for (std::size_t r = 0; r < n_rule; ++r) {
                        try {
                            if (cfg.estimators[e] == BenchmarkEstimator::sample_difference && shared) {
                                losses[rep][e * n_rule + r] = shared;
                                continue;
                            }
                            const Matrix est = fit_benchmark_estimator(sample->data, cfg.estimators[e],
                                                                       cfg.rules[r], cv);
                            losses[rep][e * n_rule + r] = estimation_losses(est, truth);
                            shared = losses[rep][e * n_rule + r];
                        } catch (const Error&) {
                            // recorded as a failed replication for this cell
                        }
                    }
                }
            },
            cfg.threads);

        for (std::size_t e = 0; e < n_est; ++e) {
            for (std::size_t r = 0; r < n_rule; ++r) {
                std::vector<std::array<double, 3>> ok;
                for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
                    if (losses[rep][e * n_rule + r]) {
                        ok.push_back(*losses[rep][e * n_rule + r]);
                    }
                }
                if (static_cast<double>(ok.size()) < 0.8 * static_cast<double>(cfg.reps) || ok.size() < 2) {
                    report.dropped.push_back(to_string(cfg.estimators[e]) + "/" + to_string(cfg.rules[r]) + " at p=" +
                                             std::to_string(size.p) + ", n1=" + std::to_string(size.n1) +
                                             ", n2=" + std::to_string(size.n2));
                    continue;
                }
                for (std::size_t k = 0; k < all_norms.size(); ++k) {
                    double mean = 0.0;
                    for (const auto& l : ok) {
                        mean += l[k];
                    }
                    mean /= static_cast<double>(ok.size());
                    double ss = 0.0;
                    for (const auto& l : ok) {
                        ss += (l[k] - mean) * (l[k] - mean);
                    }
                    const double sd = std::sqrt(ss / static_cast<double>(ok.size() - 1));
                    report.cells.push_back(
                        BenchmarkCell{cfg.model, size, cfg.estimators[e], cfg.rules[r], all_norms[k], mean, sd, ok.size()});
                }
            }
        }
    }
    return report;
}

/// One row per cell: model,p,n1,n2,estimator,rule,norm,mean,sd,reps.
inline void write_report_csv(std::ostream& out, const BenchmarkReport& report) {
    out << "model,p,n1,n2,estimator,rule,norm,mean,sd,reps\n";
    std::ostringstream row;
    for (const auto& c : report.cells) {
        row.str("");
        row << std::setprecision(17) << to_string(c.model) << ',' << c.size.p << ',' << c.size.n1 << ',' << c.size.n2
            << ',' << to_string(c.estimator) << ',' << to_string(c.rule) << ',' << to_string(c.norm) << ',' << c.mean
            << ',' << c.sd << ',' << c.reps << '\n';
        out << row.str();
    }
}

/// Mean (sd) per cell, grouped by norm and size, with estimators and rules as columns.
inline void write_report_table(std::ostream& out, const BenchmarkReport& report) {
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::fixed << std::setprecision(2);
    for (auto norm : all_norms) {
        out << "== " << to_string(norm) << " norm ==\n";
        std::optional<std::array<std::size_t, 3>> current;
        for (const auto& c : report.cells) {
            if (c.norm != norm) {
                continue;
            }
            const std::array<std::size_t, 3> key{c.size.p, c.size.n1, c.size.n2};
            if (!current || *current != key) {
                if (current) {
                    out << '\n';
                }
                out << "p=" << c.size.p << " n1=" << c.size.n1 << " n2=" << c.size.n2 << ":";
                current = key;
            }
            out << "  " << to_string(c.estimator) << '/' << to_string(c.rule) << ' ' << c.mean << '(' << c.sd << ')';
        }
        out << "\n";
    }
    out.flags(flags);
    out.precision(precision);
}

} // namespace diffcorr

#endif
