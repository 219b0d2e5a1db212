#pragma once

#include <stdexcept>
#include <string>

namespace osn {

// Single exception type for the whole library. The kind tells callers whether
// a failure is a misconfiguration, a numerical breakdown, a model domain
// violation, or an I/O problem; the CLI maps kinds to exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind { kConfig, kNumeric, kDomain, kIo };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline Error config_error(const std::string& what) { return Error(Error::Kind::kConfig, what); }
inline Error numeric_error(const std::string& what) { return Error(Error::Kind::kNumeric, what); }
inline Error domain_error(const std::string& what) { return Error(Error::Kind::kDomain, what); }
inline Error io_error(const std::string& what) { return Error(Error::Kind::kIo, what); }

}  // namespace osn
