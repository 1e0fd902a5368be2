#ifndef DHRL_COMMON_HPP
#define DHRL_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dhrl {

// Base class for all library errors surfaced through the C API as status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or type invariant (bad symbol index, malformed table, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Bad or unknown configuration input. `key` names the offending entry when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : Error(message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// A history whose likelihood is zero under the environment tables.
class ImpossibleHistoryError : public Error {
 public:
  using Error::Error;
};

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& text);
std::string to_hex(std::uint64_t value);

// Locale-independent float formatting for CSV/JSON-adjacent text output.
std::string format_double(double value);

}  // namespace dhrl

#endif
