#ifndef DIFFCORR_THRESHOLDING_HPP
#define DIFFCORR_THRESHOLDING_HPP

#include "moments.hpp"

#include <cmath>
#include <string>
#include <string_view>

/**
 * @file thresholding.hpp
 * @brief Scalar thresholding rules and the data-driven, entry-specific threshold levels.
 */

namespace diffcorr {

enum class RuleKind { hard, soft, adaptive_lasso };

/**
 * A thresholding function s_lambda(z). Every rule returns 0 when |z| <= lambda
 * and moves z by at most lambda. Soft and adaptive lasso are in addition
 * bounded by |y| for any y within lambda of z; hard is not.
 */
struct ThresholdRule {
    RuleKind kind = RuleKind::adaptive_lasso;
    /// Exponent of the adaptive lasso rule, >= 1. Ignored by the other rules.
    double eta = 4.0;

    static ThresholdRule hard() { return {RuleKind::hard, 4.0}; }
    static ThresholdRule soft() { return {RuleKind::soft, 4.0}; }
    static ThresholdRule adaptive_lasso(double eta = 4.0) {
        if (!(eta >= 1.0)) {
            throw ValidationError("adaptive lasso exponent must be >= 1");
        }
        return {RuleKind::adaptive_lasso, eta};
    }

    bool operator==(const ThresholdRule&) const = default;
};

inline std::string to_string(const ThresholdRule& rule) {
    switch (rule.kind) {
    case RuleKind::hard: return "hard";
    case RuleKind::soft: return "soft";
    case RuleKind::adaptive_lasso: return "adaptive-lasso";
    }
    return "unknown";
}

inline ThresholdRule parse_rule(std::string_view name, double eta = 4.0) {
    if (name == "hard") {
        return ThresholdRule::hard();
    }
    if (name == "soft") {
        return ThresholdRule::soft();
    }
    if (name == "adaptive-lasso" || name == "adaptive_lasso") {
        return ThresholdRule::adaptive_lasso(eta);
    }
    throw ValidationError("unknown thresholding rule '" + std::string(name) +
                          "' (expected hard, soft or adaptive-lasso)");
}

inline double apply_rule(const ThresholdRule& rule, double z, double lambda) {
    if (!(lambda >= 0.0)) {
        throw ValidationError("threshold level must be non-negative");
    }
    const double az = std::abs(z);
    if (az <= lambda) {
        return 0.0;
    }
    switch (rule.kind) {
    case RuleKind::hard:
        return z;
    case RuleKind::soft:
        return std::copysign(az - lambda, z);
    case RuleKind::adaptive_lasso:
        return z * (1.0 - std::pow(lambda / az, rule.eta));
    }
    return 0.0;
}

/// Entry-specific threshold levels and the constant tau that scaled them.
struct ThresholdMatrix {
    Matrix values;
    double tau = 0.0;
};

namespace detail {

inline void check_tau(double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw ValidationError("thresholding constant tau must be a finite non-negative number");
    }
}

// sqrt(xi_ij) + |r_ij| / 2 * (sqrt(xi_ii) + sqrt(xi_jj)): the noise scale of one correlation entry.
inline Matrix correlation_noise_scale(const MomentSet& m) {
    const Matrix& xi = m.xi_hat.values();
    const Matrix& r = m.r_hat.values();
    const Vector sd_diag = xi.diagonal().cwiseSqrt();
    const auto p = xi.rows();
    Matrix out(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            out(i, j) = std::sqrt(xi(i, j)) + 0.5 * std::abs(r(i, j)) * (sd_diag(i) + sd_diag(j));
        }
    }
    return out;
}

inline double log_p_over_n(std::size_t p, std::size_t n) {
    return std::log(static_cast<double>(p)) / static_cast<double>(n);
}

} // namespace detail

/// lambda_ij = lambda_ij1 + lambda_ij2, each tau * sqrt(log p / n_t) times the correlation noise scale of group t.
inline ThresholdMatrix diff_corr_threshold(const MomentSet& m1, const MomentSet& m2, double tau) {
    detail::check_tau(tau);
    if (m1.p != m2.p) {
        throw ValidationError("diff_corr_threshold: groups have different dimensions");
    }
    const std::size_t p = m1.p;
    Matrix t = tau * std::sqrt(detail::log_p_over_n(p, m1.n)) * detail::correlation_noise_scale(m1) +
               tau * std::sqrt(detail::log_p_over_n(p, m2.n)) * detail::correlation_noise_scale(m2);
    return {std::move(t), tau};
}

inline ThresholdMatrix single_corr_threshold(const MomentSet& m, double tau) {
    detail::check_tau(tau);
    Matrix t = tau * std::sqrt(detail::log_p_over_n(m.p, m.n)) * detail::correlation_noise_scale(m);
    return {std::move(t), tau};
}

/// gamma_ij = tau * (sqrt(log p / n1 * theta_ij1) + sqrt(log p / n2 * theta_ij2)).
inline ThresholdMatrix diff_cov_threshold(const MomentSet& m1, const MomentSet& m2, double tau) {
    detail::check_tau(tau);
    if (m1.p != m2.p) {
        throw ValidationError("diff_cov_threshold: groups have different dimensions");
    }
    const std::size_t p = m1.p;
    Matrix t = tau * ((detail::log_p_over_n(p, m1.n) * m1.theta_hat.values()).cwiseSqrt() +
                      (detail::log_p_over_n(p, m2.n) * m2.theta_hat.values()).cwiseSqrt());
    return {std::move(t), tau};
}

/// Single-sample covariance threshold tau * sqrt(theta_ij log p / n).
inline ThresholdMatrix single_cov_threshold(const MomentSet& m, double tau) {
    detail::check_tau(tau);
    Matrix t = tau * (detail::log_p_over_n(m.p, m.n) * m.theta_hat.values()).cwiseSqrt();
    return {std::move(t), tau};
}

template <class Derived>
Matrix apply_threshold(const Eigen::MatrixBase<Derived>& m, const Matrix& thresholds, const ThresholdRule& rule) {
    if (m.rows() != thresholds.rows() || m.cols() != thresholds.cols()) {
        throw ValidationError("apply_threshold: matrix and threshold shapes differ");
    }
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            out(i, j) = apply_rule(rule, m(i, j), thresholds(i, j));
        }
    }
    return out;
}

template <class Derived>
Matrix apply_threshold(const Eigen::MatrixBase<Derived>& m, const ThresholdMatrix& t, const ThresholdRule& rule) {
    return apply_threshold(m, t.values, rule);
}

} // namespace diffcorr

#endif
