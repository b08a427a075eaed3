#pragma once

#include <stdexcept>
#include <string>

namespace twinsim {

/// Invalid user-supplied configuration: bad parameter values, malformed
/// config files, inconsistent geometry. Maps to CLI exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Malformed or inconsistent data: unreadable stack files, incompatible
/// dimensions, degenerate inputs (empty illumination). Maps to CLI exit code 3.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace twinsim
