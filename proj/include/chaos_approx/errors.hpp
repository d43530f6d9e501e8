#pragma once

#include <stdexcept>
#include <string>

namespace chaos {

// Error taxonomy shared by the library and the CLI exit-code contract:
// validation -> 2, capability -> 3, resource -> 4.

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Requested combination is outside what the implemented methods can produce
// (e.g. no reference law is available for the given integrand).
struct CapabilityError : std::runtime_error {
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// A configured budget would be exceeded; raised before allocating.
struct ResourceError : std::runtime_error {
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chaos
