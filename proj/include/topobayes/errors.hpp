#pragma once

#include <stdexcept>
#include <string>

namespace topobayes {

/// Input violates a documented precondition (bad band, malformed file
/// content, non-finite sample, ...). Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A file could not be opened, read or written. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace topobayes
