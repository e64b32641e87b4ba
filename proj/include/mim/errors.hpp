#ifndef MIM_ERRORS_HPP
#define MIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mim {

// Base for every failure raised by the toolkit. The CLI maps subclasses of
// NumericError to exit code 3 and ConfigError to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class SingularSystemError : public NumericError {
public:
    using NumericError::NumericError;
};

class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

class NoPeakError : public NumericError {
public:
    using NumericError::NumericError;
};

class OverlapError : public NumericError {
public:
    using NumericError::NumericError;
};

class ConvergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateDataError : public NumericError {
public:
    using NumericError::NumericError;
};

class BranchDiscontinuityError : public NumericError {
public:
    using NumericError::NumericError;
};

class InsufficientDecayError : public NumericError {
public:
    using NumericError::NumericError;
};

class AliasingError : public NumericError {
public:
    using NumericError::NumericError;
};

class NegativeDensityError : public NumericError {
public:
    using NumericError::NumericError;
};

class GridResolutionError : public NumericError {
public:
    using NumericError::NumericError;
};

class GridMismatchError : public NumericError {
public:
    using NumericError::NumericError;
};

class TruncationError : public NumericError {
public:
    using NumericError::NumericError;
};

class EventCapError : public NumericError {
public:
    using NumericError::NumericError;
};

class SamplingRateError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace mim

#endif
