#pragma once

#include <stdexcept>
#include <string>

namespace rjdcov {

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct SizeMismatch : std::invalid_argument {
    explicit SizeMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct SingularCovariance : std::runtime_error {
    explicit SingularCovariance(const std::string& what) : std::runtime_error(what) {}
};

struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

struct SingularMatrix : std::runtime_error {
    explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct CacheMiss : std::runtime_error {
    explicit CacheMiss(const std::string& what) : std::runtime_error(what) {}
};

struct ChecksumMismatch : std::runtime_error {
    explicit ChecksumMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateVariance : std::runtime_error {
    explicit DegenerateVariance(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rjdcov
