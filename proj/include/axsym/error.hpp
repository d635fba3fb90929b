#pragma once

#include <stdexcept>
#include <string>

namespace axsym {

// Exception hierarchy. The CLI maps each family onto an exit code:
// UsageError -> 1, DataError -> 2, NumericalError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Malformed files, dimension mismatches, out-of-domain parameters.
class DataError : public Error {
public:
    using Error::Error;
};

// Non-PD covariance blocks, failed factorizations, non-convergence
// without a usable fallback.
class NumericalError : public Error {
public:
    using Error::Error;
};

[[noreturn]] void throw_data(const std::string& msg);
[[noreturn]] void throw_numerical(const std::string& msg);

} // namespace axsym
