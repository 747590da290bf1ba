#pragma once

#include <stdexcept>
#include <string>

namespace mobkit {

/// Base class for all library errors. Messages carry enough context
/// (file, line number, offending value) to act on without a debugger.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mobkit
