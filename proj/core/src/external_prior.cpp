#include "vcr/plugin.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "json.hpp"
#include "vcr/error.hpp"

namespace vcr {

namespace {

constexpr std::size_t kStderrKeep = 64 * 1024;

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

struct HeaderInfo {
  Geometry geometry;
  double sigma = 0.0;
};

HeaderInfo parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("frame shorter than its 8-byte preamble", bytes.size());
  if (std::memcmp(bytes.data(), "PNP1", 4) != 0) throw FormatError("frame magic is not \"PNP1\"", 0);
  const std::uint32_t len = get_u32le(bytes.data() + 4);
  if (bytes.size() < 8 + std::size_t{len}) throw FormatError("frame header truncated", bytes.size());
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(detail::concat("frame header is not valid JSON: ", e.what()), 8);
  }
  HeaderInfo info;
  try {
    info.geometry = Geometry{h.at("width").get<std::size_t>(), h.at("height").get<std::size_t>(),
                             h.at("bands").get<std::size_t>()};
    info.sigma = h.at("sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(detail::concat("frame header fields invalid: ", e.what()), 8);
  }
  return info;
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace

std::vector<std::uint8_t> encode_frame(const PluginFrame& frame) {
  if (frame.payload.size() != frame.geometry.sample_count()) {
    throw GeometryError(detail::concat("frame payload holds ", frame.payload.size(), " samples, geometry ",
                                       frame.geometry, " needs ", frame.geometry.sample_count()));
  }
  nlohmann::ordered_json h;
  h["width"] = frame.geometry.width;
  h["height"] = frame.geometry.height;
  h["bands"] = frame.geometry.bands;
  h["sigma"] = frame.sigma;
  const std::string header = h.dump();
  std::vector<std::uint8_t> out;
  out.reserve(8 + header.size() + 4 * frame.payload.size());
  for (char c : {'P', 'N', 'P', '1'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u32le(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  for (float f : frame.payload) put_u32le(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

PluginFrame decode_frame(std::span<const std::uint8_t> bytes) {
  const HeaderInfo info = parse_header(bytes);
  const std::size_t start = 8 + get_u32le(bytes.data() + 4);
  const std::size_t expected = 4 * info.geometry.sample_count();
  if (bytes.size() - start != expected) {
    throw FormatError(detail::concat("frame payload is ", bytes.size() - start, " bytes, expected ", expected), start,
                      expected, bytes.size() - start);
  }
  PluginFrame frame{info.geometry, info.sigma, std::vector<float>(info.geometry.sample_count())};
  for (std::size_t i = 0; i < frame.payload.size(); ++i) {
    frame.payload[i] = std::bit_cast<float>(get_u32le(bytes.data() + start + 4 * i));
  }
  return frame;
}

ExternalDenoiser::ExternalDenoiser(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw ConfigError("external prior needs a non-empty command");
}

ExternalDenoiser::~ExternalDenoiser() { shutdown(false); }

void ExternalDenoiser::spawn() {
  ignore_sigpipe();
  int in[2], out[2], err[2];
  if (::pipe2(in, O_CLOEXEC) != 0) throw PluginError(detail::concat("pipe: ", std::strerror(errno)), "");
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw PluginError(detail::concat("pipe: ", std::strerror(errno)), "");
  }
  if (::pipe2(err, O_CLOEXEC) != 0) {
    for (int fd : {in[0], in[1], out[0], out[1]}) ::close(fd);
    throw PluginError(detail::concat("pipe: ", std::strerror(errno)), "");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in[0], in[1], out[0], out[1], err[0], err[1]}) ::close(fd);
    throw PluginError(detail::concat("fork: ", std::strerror(errno)), "");
  }
  if (pid == 0) {
    ::dup2(in[0], 0);
    ::dup2(out[1], 1);
    ::dup2(err[1], 2);
    ::signal(SIGPIPE, SIG_DFL);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  ::close(err[1]);
  pid_ = pid;
  in_fd_ = in[1];
  out_fd_ = out[0];
  err_fd_ = err[0];
  set_nonblocking(in_fd_);
  set_nonblocking(out_fd_);
  set_nonblocking(err_fd_);
  stderr_tail_.clear();
}

void ExternalDenoiser::read_stderr() noexcept {
  if (err_fd_ < 0) return;
  char buf[4096];
  for (;;) {
    const ssize_t n = ::read(err_fd_, buf, sizeof buf);
    if (n <= 0) break;
    stderr_tail_.append(buf, static_cast<std::size_t>(n));
  }
  if (stderr_tail_.size() > kStderrKeep) stderr_tail_.erase(0, stderr_tail_.size() - kStderrKeep);
}

void ExternalDenoiser::shutdown(bool force) noexcept {
  if (in_fd_ >= 0) ::close(in_fd_);
  in_fd_ = -1;
  if (pid_ >= 0) reap(force);
  read_stderr();
  for (int* fd : {&out_fd_, &err_fd_}) {
    if (*fd >= 0) ::close(*fd);
    *fd = -1;
  }
}

void ExternalDenoiser::reap(bool force) noexcept {
  if (force) ::kill(pid_, SIGKILL);
  int status = 0;
  bool reaped = false;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(force ? 1000 : 2000);
  while (std::chrono::steady_clock::now() < deadline) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_ || r < 0) {
      reaped = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (!reaped) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
  pid_ = -1;
}

void ExternalDenoiser::fail(const std::string& what) {
  read_stderr();
  shutdown(true);
  throw PluginError(detail::concat("external denoiser `", command_, "`: ", what), stderr_tail_);
}

std::vector<std::uint8_t> ExternalDenoiser::transact(const std::vector<std::uint8_t>& request) {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::vector<std::uint8_t> response;
  std::size_t written = 0;
  std::size_t needed = 8;
  bool header_parsed = false;
  std::uint8_t buf[65536];

  while (response.size() < needed || !header_parsed) {
    if (!header_parsed && response.size() >= 8) {
      if (std::memcmp(response.data(), "PNP1", 4) != 0) fail("response does not start with \"PNP1\"");
      const std::size_t header_end = 8 + get_u32le(response.data() + 4);
      if (response.size() >= header_end) {
        HeaderInfo info;
        try {
          info = parse_header(std::span<const std::uint8_t>(response.data(), header_end));
        } catch (const FormatError& e) {
          fail(detail::concat("malformed response header: ", e.what()));
        }
        needed = header_end + 4 * info.geometry.sample_count();
        header_parsed = true;
        continue;
      }
      needed = header_end;
    }

    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) fail(detail::concat("no complete response within ", timeout_.count(), " ms"));
    const int wait_ms =
        static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;

    pollfd fds[3];
    nfds_t nfds = 0;
    fds[nfds++] = {out_fd_, POLLIN, 0};
    fds[nfds++] = {err_fd_, POLLIN, 0};
    if (written < request.size()) fds[nfds++] = {in_fd_, POLLOUT, 0};
    const int r = ::poll(fds, nfds, wait_ms);
    if (r < 0) {
      if (errno == EINTR) continue;
      fail(detail::concat("poll: ", std::strerror(errno)));
    }

    if (fds[1].revents) read_stderr();
    if (nfds == 3 && (fds[2].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::write(in_fd_, request.data() + written, request.size() - written);
      if (n < 0 && errno != EAGAIN && errno != EINTR) fail("child closed its input before reading the request");
      if (n > 0) written += static_cast<std::size_t>(n);
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(out_fd_, buf, sizeof buf);
      if (n == 0) {
        int status = 0;
        std::string how = "exited";
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          if (WIFEXITED(status)) how = detail::concat("exited with status ", WEXITSTATUS(status));
          if (WIFSIGNALED(status)) how = detail::concat("was killed by signal ", WTERMSIG(status));
        }
        fail(detail::concat("child ", how, " after ", response.size(), " of ", needed, " response bytes"));
      }
      if (n < 0 && errno != EAGAIN && errno != EINTR) fail(detail::concat("read: ", std::strerror(errno)));
      if (n > 0) response.insert(response.end(), buf, buf + n);
    }
  }
  if (written < request.size()) fail("child answered before consuming the whole request");
  if (response.size() > needed) fail("child wrote bytes beyond the response frame");
  return response;
}

RasterImage ExternalDenoiser::denoise(const RasterImage& img, double sigma) {
  std::lock_guard lock(mutex_);
  PluginFrame request{img.geometry(), sigma, {}};
  request.payload.reserve(img.sample_count());
  for (double v : img.samples()) {
    if (std::abs(v) > static_cast<double>(std::numeric_limits<float>::max())) {
      throw DomainError(detail::concat("sample ", v, " overflows the 32-bit plugin payload"));
    }
    request.payload.push_back(static_cast<float>(v));
  }
  const auto bytes = encode_frame(request);

  if (pid_ < 0) spawn();
  const auto raw = transact(bytes);
  PluginFrame reply;
  try {
    reply = decode_frame(raw);
  } catch (const FormatError& e) {
    fail(detail::concat("malformed response: ", e.what()));
  }
  if (!(reply.geometry == img.geometry())) {
    fail(detail::concat("response geometry ", reply.geometry, " differs from request ", img.geometry()));
  }
  std::vector<double> out(reply.payload.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(reply.payload[i])) fail(detail::concat("response sample ", i, " is not finite"));
    out[i] = reply.payload[i];
  }
  read_stderr();
  return img.with_samples(std::move(out));
}

}  // namespace vcr
