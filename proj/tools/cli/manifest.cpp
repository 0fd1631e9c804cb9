#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "vcr/error.hpp"
#include "vcr/raster.hpp"

namespace vcr::cli {

std::string sha256_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw IoError("sha-256 failed for " + path.string());
  }
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

namespace {

ordered_json files(const std::vector<std::filesystem::path>& paths) {
  ordered_json a = ordered_json::array();
  for (const auto& p : paths) a.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  return a;
}

ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

ordered_json to_json(const RunManifest& m) {
  ordered_json j;
  j["manifest_v"] = 1;
  j["command"] = m.command;
  j["config"] = m.config;
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  j["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
  j["report"] = m.report;
  j["wall_time"] = m.wall_time;
  return j;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write manifest " + path.string());
  f << to_json(m).dump(2) << '\n';
  if (!f) throw IoError("cannot write manifest " + path.string());
}

ordered_json summarize(const SolverReport& r) {
  ordered_json j;
  j["iterations"] = r.iterations;
  j["stop_reason"] = to_string(r.stop_reason);
  j["final_energy"] = r.energy.empty() ? ordered_json(nullptr) : number(r.energy.back());
  j["final_primal_residual"] = r.primal_residual.empty() ? ordered_json(nullptr) : number(r.primal_residual.back());
  return j;
}

void write_energy_csv(const SolverReport& r, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write report " + path.string());
  f << "iteration,energy\n";
  char buf[64];
  for (std::size_t i = 0; i < r.energy.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, r.energy[i]);
    f << buf;
  }
  if (!f) throw IoError("cannot write report " + path.string());
}

}  // namespace vcr::cli
