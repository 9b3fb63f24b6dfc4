#ifndef DIFFCORR_NORMS_HPP
#define DIFFCORR_NORMS_HPP

#include "core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

/**
 * @file norms.hpp
 * @brief Spectral, matrix l1 and Frobenius norms.
 */

namespace diffcorr {

/**
 * Largest singular value. Symmetric inputs go through a self-adjoint
 * eigendecomposition (largest absolute eigenvalue), everything else through an SVD.
 */
template <class Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& m) {
    if (!detail::all_finite(m)) {
        throw ValidationError("spectral_norm: matrix has non-finite entries");
    }
    if (m.size() == 0) {
        return 0.0;
    }
    const Matrix dense = m;
    if (is_symmetric(dense)) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(dense, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) {
            throw Error(ErrorCategory::internal, "spectral_norm: eigendecomposition did not converge");
        }
        return solver.eigenvalues().cwiseAbs().maxCoeff();
    }
    Eigen::JacobiSVD<Matrix> svd(dense);
    return svd.singularValues()(0);
}

/// Maximum absolute row sum.
template <class Derived>
double matrix_l1_norm(const Eigen::MatrixBase<Derived>& m) {
    if (!detail::all_finite(m)) {
        throw ValidationError("matrix_l1_norm: matrix has non-finite entries");
    }
    if (m.size() == 0) {
        return 0.0;
    }
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

template <class Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& m) {
    if (!detail::all_finite(m)) {
        throw ValidationError("frobenius_norm: matrix has non-finite entries");
    }
    return m.norm();
}

} // namespace diffcorr

#endif
