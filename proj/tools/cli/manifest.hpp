#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcr/solvers.hpp"

namespace vcr::cli {

using ordered_json = nlohmann::ordered_json;

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  ordered_json config = ordered_json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  /// null for commands that draw no random numbers.
  std::optional<std::uint64_t> seed;
  ordered_json report = nullptr;
  double wall_time = 0.0;
};

/// Digests are taken when this is called, so write it after every output.
/// wall_time is always the last key.
ordered_json to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

ordered_json summarize(const SolverReport& r);

/// "iteration,energy" then one row per recorded energy, 1-based.
void write_energy_csv(const SolverReport& r, const std::filesystem::path& path);

}  // namespace vcr::cli
