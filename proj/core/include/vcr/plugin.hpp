#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "vcr/raster.hpp"

namespace vcr {

/// One PNP1 frame: "PNP1" | u32 LE header length | JSON header | f32 LE payload (band-sequential).
struct PluginFrame {
  Geometry geometry;
  double sigma = 0.0;
  std::vector<float> payload;
};

std::vector<std::uint8_t> encode_frame(const PluginFrame& frame);
/// Parses exactly one frame occupying all of `bytes`. Throws FormatError.
PluginFrame decode_frame(std::span<const std::uint8_t> bytes);

/// Client side of the external denoiser protocol. The child is spawned through
/// /bin/sh on first use and kept alive between calls; a failed call kills it
/// and the next call starts a fresh one.
class ExternalDenoiser {
 public:
  ExternalDenoiser(std::string command, std::chrono::milliseconds timeout);
  ~ExternalDenoiser();
  ExternalDenoiser(const ExternalDenoiser&) = delete;
  ExternalDenoiser& operator=(const ExternalDenoiser&) = delete;

  /// Throws PluginError (with the child's recent stderr) on crash, timeout,
  /// malformed or mismatched response, or non-finite samples.
  RasterImage denoise(const RasterImage& img, double sigma);

  const std::string& command() const noexcept { return command_; }

 private:
  void spawn();
  void shutdown(bool force) noexcept;
  void reap(bool force) noexcept;
  [[noreturn]] void fail(const std::string& what);
  std::vector<std::uint8_t> transact(const std::vector<std::uint8_t>& request);
  void read_stderr() noexcept;

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  int pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  int err_fd_ = -1;
  std::string stderr_tail_;
};

}  // namespace vcr
