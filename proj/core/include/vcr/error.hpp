#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace vcr {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero dimensions, mismatched shapes, out-of-bounds regions.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed VCR file. Carries the byte offset where parsing failed and,
/// for size mismatches, the expected and actual byte counts.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset, std::size_t expected = 0,
              std::size_t actual = 0)
      : Error(what), offset_(offset), expected_(expected), actual_(actual) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t expected_bytes() const noexcept { return expected_; }
  std::size_t actual_bytes() const noexcept { return actual_; }

 private:
  std::size_t offset_;
  std::size_t expected_;
  std::size_t actual_;
};

class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain (negative speckle input, x <= 0 in a log).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid solver/prior/task configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operator handed to CG failed the symmetry probe.
class OperatorError : public Error {
 public:
  using Error::Error;
};

class SubspaceError : public Error {
 public:
  SubspaceError(const std::string& what, std::size_t achievable_rank)
      : Error(what), rank_(achievable_rank) {}
  std::size_t achievable_rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
};

/// External denoiser crashed, timed out or broke the PNP1 framing.
/// diagnostics() holds whatever the child wrote to its standard error.
class PluginError : public Error {
 public:
  PluginError(const std::string& what, std::string diagnostics)
      : Error(what + (diagnostics.empty() ? "" : "\n--- plugin stderr ---\n" + diagnostics)),
        diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}

}  // namespace detail
}  // namespace vcr
