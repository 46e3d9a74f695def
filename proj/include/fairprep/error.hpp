#pragma once

#include <stdexcept>
#include <string>

namespace fairprep {

/// Library-wide error type. Message text is part of the interface:
/// callers and tests match on it.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fairprep
