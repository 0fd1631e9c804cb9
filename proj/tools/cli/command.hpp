#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli/manifest.hpp"
#include "vcr/priors.hpp"

namespace vcr::cli {

/// Bad flag values or combinations detected after parsing; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Command {
 public:
  virtual ~Command() = default;
  virtual const char* name() const = 0;
  virtual const char* description() const = 0;
  virtual void define(CLI::App& app) = 0;
  virtual int run(std::ostream& out, std::ostream& err) = 0;
};

std::vector<std::unique_ptr<Command>> make_commands();

/// tv | median | nlm | laplacian | extern:<command line>
PriorHandle parse_prior(const std::string& spec, std::size_t timeout_ms);

template <typename T>
const T& need(const std::optional<T>& v, const char* flag) {
  if (!v) throw UsageError(std::string(flag) + " is required");
  return *v;
}

}  // namespace vcr::cli
