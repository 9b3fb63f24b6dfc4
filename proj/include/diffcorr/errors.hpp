#ifndef DIFFCORR_ERRORS_HPP
#define DIFFCORR_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

/**
 * @file errors.hpp
 * @brief Exception types raised by the library.
 *
 * Every error carries a category so that front ends can map failures onto
 * exit codes: USER for bad input or configuration, DATA for degenerate
 * statistics computed from otherwise valid input, INTERNAL for solver failures.
 */

namespace diffcorr {

enum class ErrorCategory { user, data, internal };

inline const char* to_string(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::user: return "USER";
    case ErrorCategory::data: return "DATA";
    case ErrorCategory::internal: return "INTERNAL";
    }
    return "INTERNAL";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what) : std::runtime_error(what), category_(category) {}
    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

/// Malformed arguments: shape mismatch, negative thresholds, out-of-range levels.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorCategory::user, what) {}
};

/// CSV content that cannot be parsed. Row and column are 1-based positions in the file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(ErrorCategory::user, what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row_(row), column_(column) {}
    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_, column_;
};

class InsufficientSamples : public Error {
public:
    explicit InsufficientSamples(std::size_t n)
        : Error(ErrorCategory::user, "at least 2 observations are required, got " + std::to_string(n)) {}
};

/// A variable whose sample variance is not strictly positive.
class DegenerateVariable : public Error {
public:
    explicit DegenerateVariable(std::size_t index)
        : Error(ErrorCategory::data, "variable " + std::to_string(index) + " has non-positive sample variance"),
          index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// A zero denominator in the pairwise test statistic.
class DegenerateVariance : public Error {
public:
    DegenerateVariance(std::size_t i, std::size_t j)
        : Error(ErrorCategory::data, "zero variance estimate for the correlation difference of pair (" +
                                         std::to_string(i) + ", " + std::to_string(j) + ")") {}
};

class DegenerateSplit : public Error {
public:
    explicit DegenerateSplit(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class UnsupportedDimension : public Error {
public:
    explicit UnsupportedDimension(std::size_t p)
        : Error(ErrorCategory::user, "the extreme-value calibration needs p >= 3, got p = " + std::to_string(p)) {}
};

class GenerationFailed : public Error {
public:
    explicit GenerationFailed(const std::string& what) : Error(ErrorCategory::internal, what) {}
};

class NotPSD : public Error {
public:
    explicit NotPSD(double min_eigenvalue)
        : Error(ErrorCategory::user,
                "matrix is not positive semidefinite (min eigenvalue " + std::to_string(min_eigenvalue) + ")") {}
};

} // namespace diffcorr

#endif
