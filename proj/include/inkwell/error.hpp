#pragma once

#include <stdexcept>
#include <string>

namespace inkwell {

/// Malformed bytes in a PGM, model file or corpus metadata.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument did not hold (sizes, ranges, empty inputs).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tensor shapes are incompatible with the requested operation.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A stitched output pixel had no contributing patch.
class CoverageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training hit a non-finite loss or gradient.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace inkwell
