#ifndef DIFFCORR_MOMENTS_HPP
#define DIFFCORR_MOMENTS_HPP

#include "core.hpp"

#include <algorithm>
#include <cmath>

/**
 * @file moments.hpp
 * @brief Entrywise sample statistics of one group.
 *
 * All statistics use the 1/n divisor and are computed from centered data
 * (means first, then centered products).
 */

namespace diffcorr {

/// Sample statistics of one group that the threshold levels are built from.
struct MomentSet {
    SquareSymMatrix sigma_hat; ///< covariance, 1/n divisor
    SquareSymMatrix r_hat;     ///< correlation, unit diagonal, entries in [-1, 1]
    SquareSymMatrix theta_hat; ///< variance of the centered cross-products
    SquareSymMatrix xi_hat;    ///< theta_hat normalized by the variance product
    std::size_t n;
    std::size_t p;
};

namespace detail {

// Constant columns center to exact zeros regardless of rounding in the mean.
inline Matrix centered(const Matrix& x) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    Matrix c = x.rowwise() - mean;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (x.col(j).minCoeff() == x.col(j).maxCoeff()) {
            c.col(j).setZero();
        }
    }
    return c;
}

inline void check_positive_diagonal(const Matrix& sigma) {
    for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
        if (!(sigma(i, i) > 0.0)) {
            throw DegenerateVariable(static_cast<std::size_t>(i));
        }
    }
}

inline void mirror_lower(Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
            m(j, i) = m(i, j);
        }
    }
}

} // namespace detail

inline SquareSymMatrix sample_covariance(const SampleMatrix& x) {
    if (x.n() < 2) {
        throw InsufficientSamples(x.n());
    }
    const Matrix c = detail::centered(x.data());
    const auto p = c.cols();
    Matrix sigma = Matrix::Zero(p, p);
    sigma.selfadjointView<Eigen::Lower>().rankUpdate(c.transpose(), 1.0 / static_cast<double>(c.rows()));
    detail::mirror_lower(sigma);
    return SquareSymMatrix(std::move(sigma));
}

inline SquareSymMatrix sample_correlation(const SquareSymMatrix& sigma_hat) {
    const Matrix& s = sigma_hat.values();
    detail::check_positive_diagonal(s);
    Matrix r(s.rows(), s.cols());
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < r.rows(); ++i) {
            // One division by sqrt(s_ii s_jj) keeps r exactly 1 for duplicated columns.
            const double v = std::clamp(s(i, j) / std::sqrt(s(i, i) * s(j, j)), -1.0, 1.0);
            r(i, j) = v;
            r(j, i) = v;
        }
        r(j, j) = 1.0;
    }
    return SquareSymMatrix(std::move(r));
}

inline SquareSymMatrix theta_hat(const SampleMatrix& x, const SquareSymMatrix& sigma_hat) {
    if (x.n() < 2) {
        throw InsufficientSamples(x.n());
    }
    if (sigma_hat.p() != x.p()) {
        throw ValidationError("theta_hat: covariance dimension does not match the sample");
    }
    const Matrix c = detail::centered(x.data());
    const auto n = c.rows();
    const auto p = c.cols();
    Matrix theta(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = j; i < p; ++i) {
            const double s = sigma_hat(i, j);
            double acc = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double d = c(k, i) * c(k, j) - s;
                acc += d * d;
            }
            theta(i, j) = acc / static_cast<double>(n);
        }
    }
    detail::mirror_lower(theta);
    return SquareSymMatrix(std::move(theta));
}

inline SquareSymMatrix xi_hat(const SquareSymMatrix& theta, const SquareSymMatrix& sigma_hat) {
    const Matrix& s = sigma_hat.values();
    if (theta.p() != sigma_hat.p()) {
        throw ValidationError("xi_hat: dimension mismatch");
    }
    detail::check_positive_diagonal(s);
    const Vector inv_var = s.diagonal().cwiseInverse();
    Matrix xi = inv_var.asDiagonal() * theta.values() * inv_var.asDiagonal();
    detail::mirror_lower(xi);
    return SquareSymMatrix(std::move(xi));
}

/// All four statistics of one sample.
inline MomentSet compute_moments(const SampleMatrix& x) {
    auto sigma = sample_covariance(x);
    auto r = sample_correlation(sigma);
    auto theta = theta_hat(x, sigma);
    auto xi = xi_hat(theta, sigma);
    return MomentSet{std::move(sigma), std::move(r), std::move(theta), std::move(xi), x.n(), x.p()};
}

/**
 * Estimated asymptotic variance of each sample correlation entry:
 * the mean over observations of
 * { u_i u_j - (r_ij / 2)(u_i^2 + u_j^2) }^2 with u the standardized centered data.
 * The diagonal is identically zero.
 */
inline SquareSymMatrix eta_hat(const SampleMatrix& x, const MomentSet& m) {
    if (m.p != x.p()) {
        throw ValidationError("eta_hat: moment set dimension does not match the sample");
    }
    const Matrix& s = m.sigma_hat.values();
    detail::check_positive_diagonal(s);
    const Vector inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
    const Matrix u = detail::centered(x.data()) * inv_sd.asDiagonal();
    const auto n = u.rows();
    const auto p = u.cols();
    Matrix eta(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        eta(j, j) = 0.0;
        for (Eigen::Index i = j + 1; i < p; ++i) {
            const double half_r = 0.5 * m.r_hat(i, j);
            double acc = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double ui = u(k, i);
                const double uj = u(k, j);
                const double d = ui * uj - half_r * (ui * ui + uj * uj);
                acc += d * d;
            }
            eta(i, j) = acc / static_cast<double>(n);
        }
    }
    detail::mirror_lower(eta);
    return SquareSymMatrix(std::move(eta));
}

} // namespace diffcorr

#endif
