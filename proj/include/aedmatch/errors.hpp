#pragma once

#include <stdexcept>
#include <string>

namespace aedmatch {

/// Malformed input data: unparsable files, broken invariants on read,
/// graphs that cannot satisfy a request.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values or impossible numeric requests (all-masked softmax rows,
/// shape mismatches inside the tensor program).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values (bad hyperparameters, inconsistent options).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace aedmatch
