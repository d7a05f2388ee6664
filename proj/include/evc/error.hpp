#pragma once

#include <stdexcept>
#include <string>

namespace evc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File content does not match its format (bad magic, truncation, parse errors).
class FormatError : public IoError {
public:
    using IoError::IoError;
};

/// Arguments or data violate a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace evc
