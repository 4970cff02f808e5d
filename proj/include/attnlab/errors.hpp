#pragma once

#include <stdexcept>
#include <string>

namespace attnlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonSquareError : Error {
    using Error::Error;
};

struct NumericalFailureError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct SizeMismatchError : Error {
    using Error::Error;
};

struct TooLargeError : Error {
    using Error::Error;
};

struct NonFiniteError : Error {
    using Error::Error;
};

struct ModeMismatchError : Error {
    using Error::Error;
};

struct EmptyCentersError : Error {
    using Error::Error;
};

struct NoDualBasisError : Error {
    using Error::Error;
};

struct ZeroVectorError : Error {
    using Error::Error;
};

struct FullRankError : Error {
    using Error::Error;
};

struct PredicateUnsatisfiableError : Error {
    using Error::Error;
};

struct NonPositiveEigenvalueError : Error {
    using Error::Error;
};

struct InvalidLogError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace attnlab
