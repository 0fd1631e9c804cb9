#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "json.hpp"

#include "vcr/error.hpp"
#include "vcr/raster.hpp"

namespace vcr {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'V', 'C', 'R', '1'};

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32le(std::vector<std::uint8_t>& out, float f) { put_u32le(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32le(const std::uint8_t* p) { return std::bit_cast<float>(get_u32le(p)); }

std::size_t header_size_t(const nlohmann::json& h, const char* key, std::size_t offset) {
  if (!h.contains(key) || !h[key].is_number_unsigned() || h[key].get<std::uint64_t>() == 0) {
    throw FormatError(detail::concat("header key \"", key, "\" must be a positive integer"), offset);
  }
  return h[key].get<std::size_t>();
}

}  // namespace

std::vector<std::uint8_t> encode_raster(const RasterImage& img) {
  ordered_json header;
  header["width"] = img.width();
  header["height"] = img.height();
  header["bands"] = img.bands();
  header["dtype"] = "f32";
  header["layout"] = "bsq";
  header["mask"] = img.has_mask();
  if (img.wavelengths()) header["wavelengths"] = *img.wavelengths();
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + 4 * img.sample_count() + (img.has_mask() ? img.pixel_count() : 0));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (double v : img.samples()) {
    if (std::abs(v) > static_cast<double>(std::numeric_limits<float>::max())) {
      throw DomainError(detail::concat("sample ", v, " overflows 32-bit float storage"));
    }
    put_f32le(out, static_cast<float>(v));
  }
  if (img.has_mask()) out.insert(out.end(), img.mask().begin(), img.mask().end());
  return out;
}

RasterImage decode_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("truncated file: missing magic", bytes.size(), 4, bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected \"VCR1\"", 0);
  if (bytes.size() < 8) throw FormatError("truncated file: missing header length", bytes.size(), 8, bytes.size());
  const std::size_t header_len = get_u32le(bytes.data() + 4);
  if (bytes.size() < 8 + header_len) {
    throw FormatError(detail::concat("truncated header: expected ", header_len, " bytes, got ",
                                     bytes.size() - 8),
                      8, header_len, bytes.size() - 8);
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(detail::concat("header is not valid JSON: ", e.what()), 8 + e.byte);
  }
  if (!header.is_object()) throw FormatError("header must be a JSON object", 8);

  const Geometry g{header_size_t(header, "width", 8), header_size_t(header, "height", 8),
                   header_size_t(header, "bands", 8)};
  if (header.value("dtype", std::string{}) != "f32") throw FormatError("header dtype must be \"f32\"", 8);
  if (header.value("layout", std::string{}) != "bsq") throw FormatError("header layout must be \"bsq\"", 8);
  if (!header.contains("mask") || !header["mask"].is_boolean()) {
    throw FormatError("header key \"mask\" must be a boolean", 8);
  }
  const bool has_mask = header["mask"].get<bool>();
  std::optional<std::vector<double>> wavelengths;
  if (header.contains("wavelengths") && !header["wavelengths"].is_null()) {
    if (!header["wavelengths"].is_array()) throw FormatError("wavelengths must be an array", 8);
    wavelengths = header["wavelengths"].get<std::vector<double>>();
  }

  const std::size_t payload_at = 8 + header_len;
  const std::size_t expected = 4 * g.sample_count() + (has_mask ? g.pixel_count() : 0);
  const std::size_t actual = bytes.size() - payload_at;
  if (expected != actual) {
    throw FormatError(detail::concat("payload size mismatch: header declares ", g, (has_mask ? " with mask" : ""),
                                     ", expected ", expected, " bytes, got ", actual),
                      payload_at, expected, actual);
  }

  std::vector<double> samples(g.sample_count());
  const std::uint8_t* p = bytes.data() + payload_at;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const float f = get_f32le(p + 4 * i);
    if (!std::isfinite(f)) throw FormatError("non-finite sample in payload", payload_at + 4 * i);
    samples[i] = f;
  }
  std::optional<std::vector<std::uint8_t>> mask;
  if (has_mask) {
    const std::size_t mask_at = payload_at + 4 * g.sample_count();
    mask.emplace(bytes.begin() + static_cast<std::ptrdiff_t>(mask_at), bytes.end());
    for (std::size_t i = 0; i < mask->size(); ++i) {
      if ((*mask)[i] > 1) throw FormatError("mask bytes must be 0 or 1", mask_at + i);
    }
  }
  try {
    return RasterImage(g, std::move(samples), std::move(mask), std::move(wavelengths));
  } catch (const DomainError& e) {
    throw FormatError(e.what(), 8);
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(detail::concat("cannot open ", path.string()));
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_raster(const RasterImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_raster(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(detail::concat("cannot write ", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(detail::concat("write failed for ", path.string()));
}

RasterImage read_raster(const std::filesystem::path& path) { return decode_raster(read_file_bytes(path)); }

// ---- PGM ----------------------------------------------------------------------

namespace {

struct PgmCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::size_t read_uint() {
    skip_space_and_comments();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
    }
    if (pos == start) throw FormatError("PGM header: expected an integer", start);
    return v;
  }
};

}  // namespace

RasterImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw UnsupportedFormatError("not a PGM file");
  if (bytes[1] != '5') {
    throw UnsupportedFormatError(detail::concat("unsupported PGM variant P", static_cast<char>(bytes[1]),
                                                "; only binary P5 is accepted"));
  }
  PgmCursor cur{bytes, 2};
  const std::size_t width = cur.read_uint();
  const std::size_t height = cur.read_uint();
  const std::size_t maxval = cur.read_uint();
  if (maxval != 255 && maxval != 65535) {
    throw UnsupportedFormatError(detail::concat("unsupported PGM maxval ", maxval, "; expected 255 or 65535"));
  }
  if (cur.pos >= bytes.size()) throw FormatError("PGM header not terminated", cur.pos);
  ++cur.pos;  // single whitespace before raster data

  const std::size_t bytes_per = maxval == 255 ? 1 : 2;
  const std::size_t n = width * height;
  const std::size_t expected = n * bytes_per;
  const std::size_t actual = bytes.size() - cur.pos;
  if (actual < expected) {
    throw FormatError(detail::concat("PGM payload truncated: expected ", expected, " bytes, got ", actual),
                      cur.pos, expected, actual);
  }
  std::vector<double> samples(n);
  const std::uint8_t* p = bytes.data() + cur.pos;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bytes_per == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
    samples[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return RasterImage(Geometry{width, height, 1}, std::move(samples));
}

RasterImage import_pgm(const std::filesystem::path& path) { return decode_pgm(read_file_bytes(path)); }

// ---- band matrices --------------------------------------------------------------

BandMatrix parse_band_matrix(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(detail::concat("band matrix JSON: ", e.what()), e.byte);
  }
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries")) {
    throw FormatError("band matrix JSON needs \"rows\", \"cols\" and \"entries\"", 0);
  }
  try {
    return BandMatrix(j["rows"].get<std::size_t>(), j["cols"].get<std::size_t>(),
                      j["entries"].get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(detail::concat("band matrix JSON: ", e.what()), 0);
  }
}

BandMatrix read_band_matrix(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_band_matrix(std::string(bytes.begin(), bytes.end()));
}

std::string band_matrix_to_json(const BandMatrix& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["entries"] = std::vector<double>(m.entries().begin(), m.entries().end());
  return j.dump();
}

}  // namespace vcr
