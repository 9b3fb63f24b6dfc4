#ifndef DIFFCORR_CORE_HPP
#define DIFFCORR_CORE_HPP

#include "errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

/**
 * @file core.hpp
 * @brief Validated containers for sample data and for the matrices produced from it.
 */

namespace diffcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (!std::isfinite(m(i, j))) {
                return false;
            }
        }
    }
    return true;
}

inline std::vector<std::string> default_names(std::size_t p) {
    std::vector<std::string> out;
    out.reserve(p);
    for (std::size_t i = 0; i < p; ++i) {
        out.push_back("V" + std::to_string(i + 1));
    }
    return out;
}

} // namespace detail

/// Relative tolerance used to accept a matrix as symmetric.
inline constexpr double symmetry_tolerance = 1e-12;

template <class Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double rel_tol = symmetry_tolerance) {
    if (m.rows() != m.cols()) {
        return false;
    }
    if (m.size() == 0) {
        return true;
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
            if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) {
                return false;
            }
        }
    }
    return true;
}

/**
 * @brief Observations of p variables: rows are observations, columns are variables.
 *
 * Requires n >= 2, p >= 1, finite entries and unique variable labels.
 */
class SampleMatrix {
public:
    SampleMatrix(Matrix data, std::vector<std::string> names) : data_(std::move(data)), names_(std::move(names)) {
        validate();
    }

    explicit SampleMatrix(Matrix data) : data_(std::move(data)) {
        names_ = detail::default_names(static_cast<std::size_t>(data_.cols()));
        validate();
    }

    const Matrix& data() const { return data_; }
    const std::vector<std::string>& names() const { return names_; }
    std::size_t n() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t p() const { return static_cast<std::size_t>(data_.cols()); }

    /// Rows selected by index, in the given order.
    SampleMatrix subset_rows(const std::vector<std::size_t>& rows) const {
        Matrix out(static_cast<Eigen::Index>(rows.size()), data_.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out.row(static_cast<Eigen::Index>(r)) = data_.row(static_cast<Eigen::Index>(rows[r]));
        }
        return SampleMatrix(std::move(out), names_);
    }

private:
    void validate() const {
        if (data_.rows() < 2) {
            throw InsufficientSamples(static_cast<std::size_t>(data_.rows()));
        }
        if (data_.cols() < 1) {
            throw ValidationError("sample matrix needs at least one variable");
        }
        if (names_.size() != static_cast<std::size_t>(data_.cols())) {
            throw ValidationError("expected " + std::to_string(data_.cols()) + " variable names, got " +
                                  std::to_string(names_.size()));
        }
        std::unordered_set<std::string> seen;
        for (const auto& name : names_) {
            if (!seen.insert(name).second) {
                throw ValidationError("duplicate variable name '" + name + "'");
            }
        }
        for (Eigen::Index j = 0; j < data_.cols(); ++j) {
            for (Eigen::Index i = 0; i < data_.rows(); ++i) {
                if (!std::isfinite(data_(i, j))) {
                    throw ValidationError("non-finite value at observation " + std::to_string(i) + ", variable " +
                                          std::to_string(j));
                }
            }
        }
    }

    Matrix data_;
    std::vector<std::string> names_;
};

/// Two independent samples over the same variables, in the same order.
class TwoGroupDataset {
public:
    TwoGroupDataset(SampleMatrix group1, SampleMatrix group2) : group1_(std::move(group1)), group2_(std::move(group2)) {
        if (group1_.p() != group2_.p()) {
            throw ValidationError("groups have different numbers of variables (" + std::to_string(group1_.p()) +
                                  " vs " + std::to_string(group2_.p()) + ")");
        }
        for (std::size_t i = 0; i < group1_.p(); ++i) {
            if (group1_.names()[i] != group2_.names()[i]) {
                throw ValidationError("variable labels differ at column " + std::to_string(i + 1) + ": '" +
                                      group1_.names()[i] + "' vs '" + group2_.names()[i] + "'");
            }
        }
    }

    const SampleMatrix& group1() const { return group1_; }
    const SampleMatrix& group2() const { return group2_; }
    std::size_t p() const { return group1_.p(); }
    const std::vector<std::string>& names() const { return group1_.names(); }

private:
    SampleMatrix group1_;
    SampleMatrix group2_;
};

/// A finite p x p matrix symmetric to within the relative tolerance.
class SquareSymMatrix {
public:
    explicit SquareSymMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() != values_.cols()) {
            throw ValidationError("matrix is not square");
        }
        if (!detail::all_finite(values_)) {
            throw ValidationError("matrix has non-finite entries");
        }
        if (!is_symmetric(values_)) {
            throw ValidationError("matrix is not symmetric");
        }
    }

    const Matrix& values() const { return values_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
    std::size_t p() const { return static_cast<std::size_t>(values_.rows()); }

private:
    Matrix values_;
};

/// A finite p1 x p2 matrix.
class RectMatrix {
public:
    explicit RectMatrix(Matrix values) : values_(std::move(values)) {
        if (!detail::all_finite(values_)) {
            throw ValidationError("matrix has non-finite entries");
        }
    }

    const Matrix& values() const { return values_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

private:
    Matrix values_;
};

} // namespace diffcorr

#endif
