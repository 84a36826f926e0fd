#pragma once

#include <stdexcept>
#include <string>

namespace qhall {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid input: bad parameters, out-of-range sites, mismatched dimensions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A computation was well-formed but the numerics cannot deliver a meaningful answer.
class NumericError : public Error {
public:
    using Error::Error;
};

class GapClosure : public NumericError {
public:
    GapClosure(int gap_index, double min_gap)
        : NumericError("gap " + std::to_string(gap_index) + " closes on the (k, phi) torus (min gap " +
                       std::to_string(min_gap) + " MHz)"),
          gap_index_(gap_index),
          min_gap_(min_gap) {}

    int gap_index() const noexcept { return gap_index_; }
    double min_gap() const noexcept { return min_gap_; }

private:
    int gap_index_;
    double min_gap_;
};

class SymmetryBroken : public NumericError {
public:
    using NumericError::NumericError;
};

class NonQuantizedParity : public NumericError {
public:
    using NumericError::NumericError;
};

class LocalizationTooWeak : public NumericError {
public:
    using NumericError::NumericError;
};

class SingularConfusion : public NumericError {
public:
    using NumericError::NumericError;
};

class SingularMatrix : public NumericError {
public:
    using NumericError::NumericError;
};

class UnstableFilter : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace qhall
