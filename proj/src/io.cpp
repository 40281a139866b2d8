#include "hdrpoly/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace hdrpoly {

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\v' || c == '\f';
}

std::string_view as_chars(ByteView bytes) {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

// Whitespace-delimited token starting at or after pos. Leaves pos on the
// delimiter following the token.
std::string_view next_token(ByteView bytes, std::size_t& pos, const char* what) {
  while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
  const std::size_t begin = pos;
  while (pos < bytes.size() && !is_space(bytes[pos])) ++pos;
  if (begin == pos) throw ParseError(ParseErrorKind::MalformedHeader, std::string("missing ") + what);
  return as_chars(bytes).substr(begin, pos - begin);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

int parse_dimension(std::string_view token, const char* what, ParseErrorKind kind) {
  int value = 0;
  if (!parse_number(token, value) || value <= 0) {
    throw ParseError(kind, std::string("invalid ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

Eigen::Index sample_count_or_throw(int width, int height, ParseErrorKind kind) {
  try {
    return checked_sample_count(width, height);
  } catch (const ValidationError& e) {
    throw ParseError(kind, e.what());
  }
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

float load_float(const std::uint8_t* p, bool little_endian) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if (little_endian != (std::endian::native == std::endian::little)) bits = byteswap32(bits);
  return std::bit_cast<float>(bits);
}

void store_float_le(std::uint8_t* p, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native != std::endian::little) bits = byteswap32(bits);
  std::memcpy(p, &bits, 4);
}

void append(Bytes& out, std::string_view text) { out.insert(out.end(), text.begin(), text.end()); }

}  // namespace

// ---------------------------------------------------------------------------
// PFM

RadianceImage read_pfm(ByteView bytes) {
  std::size_t pos = 0;
  const auto kind = next_token(bytes, pos, "PFM type token");
  int stored_channels = 0;
  if (kind == "PF") {
    stored_channels = 3;
  } else if (kind == "Pf") {
    stored_channels = 1;
  } else {
    throw ParseError(ParseErrorKind::MalformedHeader, "PFM type token must be PF or Pf");
  }
  const int width = parse_dimension(next_token(bytes, pos, "width"), "width",
                                    ParseErrorKind::MalformedHeader);
  const int height = parse_dimension(next_token(bytes, pos, "height"), "height",
                                     ParseErrorKind::MalformedHeader);
  const auto scale_token = next_token(bytes, pos, "scale");
  double scale = 0.0;
  if (!parse_number(scale_token, scale) || !std::isfinite(scale) || scale == 0.0) {
    throw ParseError(ParseErrorKind::MalformedHeader,
                     "PFM scale must be a finite nonzero number, got '" + std::string(scale_token) +
                         "'");
  }
  if (pos >= bytes.size()) throw ParseError(ParseErrorKind::Truncated, "no payload after header");
  ++pos;  // single whitespace byte ends the header

  const auto n = sample_count_or_throw(width, height, ParseErrorKind::MalformedHeader);
  const auto stored = std::size_t(n / kChannels) * std::size_t(stored_channels);
  const std::size_t expected = stored * 4;
  const std::size_t actual = bytes.size() - pos;
  if (actual < expected) {
    throw ParseError(ParseErrorKind::Truncated, "expected " + std::to_string(expected) +
                                                    " payload bytes, got " +
                                                    std::to_string(actual));
  }

  const bool little = scale < 0.0;
  const float magnitude = static_cast<float>(std::abs(scale));
  SampleArray<float> data(n);
  const std::uint8_t* payload = bytes.data() + pos;
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        const int src_c = stored_channels == 3 ? c : 0;
        const std::size_t src =
            (std::size_t(row) * width + x) * std::size_t(stored_channels) + std::size_t(src_c);
        float v = load_float(payload + 4 * src, little);
        if (magnitude != 1.0f) v *= magnitude;
        const auto dst = (Eigen::Index(y) * width + x) * kChannels + c;
        if (std::isnan(v)) {
          throw ParseError(ParseErrorKind::NanSample, "NaN at sample " + std::to_string(dst));
        }
        if (!std::isfinite(v)) {
          throw ParseError(ParseErrorKind::NonFiniteSample,
                           "infinite value at sample " + std::to_string(dst));
        }
        if (v < 0.0f) {
          throw ParseError(ParseErrorKind::NegativeSample,
                           "negative value " + std::to_string(v) + " at sample " +
                               std::to_string(dst));
        }
        data[dst] = v;
      }
    }
  }
  return RadianceImage(width, height, std::move(data));
}

Bytes write_pfm(const ImageBuffer<float>& img) {
  Bytes out;
  append(out, "PF\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                  "\n-1.0\n");
  const std::size_t header = out.size();
  out.resize(header + std::size_t(img.size()) * 4);
  std::uint8_t* p = out.data() + header;
  for (int row = 0; row < img.height(); ++row) {
    const int y = img.height() - 1 - row;
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < kChannels; ++c) {
        store_float_le(p, img.at(x, y, c));
        p += 4;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// RGBE

std::array<std::uint8_t, 4> encode_rgbe_pixel(float r, float g, float b) {
  const double v = std::max({double(r), double(g), double(b)});
  if (!(v >= 1e-32)) return {0, 0, 0, 0};
  int exponent = 0;
  std::frexp(v, &exponent);
  double scale = std::ldexp(1.0, 8 - exponent);
  if (std::round(v * scale) > 255.0) {
    ++exponent;
    scale *= 0.5;
  }
  if (exponent + 128 > 255) {
    throw ValidationError("value " + std::to_string(v) + " exceeds the RGBE exponent range");
  }
  if (exponent + 128 < 1) return {0, 0, 0, 0};
  const auto mantissa = [scale](float c) {
    return static_cast<std::uint8_t>(std::round(double(c) * scale));
  };
  return {mantissa(r), mantissa(g), mantissa(b), static_cast<std::uint8_t>(exponent + 128)};
}

std::array<float, 3> decode_rgbe_pixel(std::span<const std::uint8_t, 4> rgbe) {
  if (rgbe[3] == 0) return {0.0f, 0.0f, 0.0f};
  const double f = std::ldexp(1.0, int(rgbe[3]) - (128 + 8));
  return {static_cast<float>(rgbe[0] * f), static_cast<float>(rgbe[1] * f),
          static_cast<float>(rgbe[2] * f)};
}

namespace {

class Cursor {
 public:
  explicit Cursor(ByteView bytes, std::size_t pos = 0) : bytes_(bytes), pos_(pos) {}

  std::uint8_t next() {
    if (pos_ >= bytes_.size()) {
      throw ParseError(ParseErrorKind::Truncated, "RGBE payload ends at byte " +
                                                      std::to_string(pos_));
    }
    return bytes_[pos_++];
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint8_t peek(std::size_t offset) const { return bytes_[pos_ + offset]; }

  std::string_view line() {
    const auto text = as_chars(bytes_);
    const auto end = text.find('\n', pos_);
    if (end == std::string_view::npos) {
      throw ParseError(ParseErrorKind::MalformedHeader, "unterminated RGBE header line");
    }
    auto out = text.substr(pos_, end - pos_);
    pos_ = end + 1;
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    return out;
  }

 private:
  ByteView bytes_;
  std::size_t pos_;
};

using Rgbe = std::array<std::uint8_t, 4>;

// Flat pixels, with the old-style (1,1,1,n) repeat convention.
void read_flat_scanline(Cursor& in, std::vector<Rgbe>& line) {
  const std::size_t width = line.size();
  std::size_t x = 0;
  int shift = 0;
  while (x < width) {
    Rgbe px{in.next(), in.next(), in.next(), in.next()};
    if (px[0] == 1 && px[1] == 1 && px[2] == 1) {
      if (x == 0) throw ParseError(ParseErrorKind::RleOverrun, "repeat code with no prior pixel");
      const std::size_t count = std::size_t(px[3]) << shift;
      if (count > width - x) throw ParseError(ParseErrorKind::RleOverrun, "repeat past scanline end");
      std::fill_n(line.begin() + std::ptrdiff_t(x), count, line[x - 1]);
      x += count;
      shift += 8;
      if (shift > 24) shift = 24;
    } else {
      line[x++] = px;
      shift = 0;
    }
  }
}

void read_rle_scanline(Cursor& in, std::vector<Rgbe>& line) {
  const std::size_t width = line.size();
  for (int c = 0; c < 4; ++c) {
    std::size_t x = 0;
    while (x < width) {
      std::size_t count = in.next();
      if (count > 128) {
        count -= 128;
        if (count > width - x) throw ParseError(ParseErrorKind::RleOverrun, "run past scanline end");
        const std::uint8_t value = in.next();
        for (std::size_t k = 0; k < count; ++k) line[x++][c] = value;
      } else {
        if (count == 0 || count > width - x) {
          throw ParseError(ParseErrorKind::RleOverrun, "literal span past scanline end");
        }
        for (std::size_t k = 0; k < count; ++k) line[x++][c] = in.next();
      }
    }
  }
}

void write_rle_component(Bytes& out, const std::vector<std::uint8_t>& data) {
  constexpr std::size_t kMinRun = 4;
  const std::size_t n = data.size();
  std::size_t cur = 0;
  while (cur < n) {
    std::size_t beg_run = cur;
    std::size_t run = 0;
    std::size_t old_run = 0;
    while (run < kMinRun && beg_run < n) {
      beg_run += run;
      old_run = run;
      run = 1;
      while (beg_run + run < n && run < 127 && data[beg_run] == data[beg_run + run]) ++run;
    }
    if (old_run > 1 && old_run == beg_run - cur) {
      out.push_back(static_cast<std::uint8_t>(128 + old_run));
      out.push_back(data[cur]);
      cur = beg_run;
    }
    while (cur < beg_run) {
      const std::size_t literal = std::min<std::size_t>(128, beg_run - cur);
      out.push_back(static_cast<std::uint8_t>(literal));
      out.insert(out.end(), data.begin() + std::ptrdiff_t(cur),
                 data.begin() + std::ptrdiff_t(cur + literal));
      cur += literal;
    }
    if (run >= kMinRun) {
      out.push_back(static_cast<std::uint8_t>(128 + run));
      out.push_back(data[beg_run]);
      cur += run;
    }
  }
}

}  // namespace

RadianceImage read_rgbe(ByteView bytes) {
  Cursor in(bytes);
  const auto magic = in.line();
  if (magic.substr(0, 2) != "#?") {
    throw ParseError(ParseErrorKind::MalformedHeader, "missing #? Radiance signature");
  }
  double exposure = 1.0;
  for (;;) {
    const auto line = in.line();
    if (line.empty()) break;
    if (line.substr(0, 7) == "FORMAT=") {
      if (line.substr(7) != "32-bit_rle_rgbe") {
        throw ParseError(ParseErrorKind::UnknownFormat, std::string(line.substr(7)));
      }
    } else if (line.substr(0, 9) == "EXPOSURE=") {
      auto value = line.substr(9);
      while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
      while (!value.empty() && value.back() == ' ') value.remove_suffix(1);
      double e = 0.0;
      if (!parse_number(value, e) || !std::isfinite(e) || e <= 0.0) {
        throw ParseError(ParseErrorKind::MalformedHeader, "bad EXPOSURE value");
      }
      exposure *= e;
    }
  }

  const std::string resolution(in.line());
  std::istringstream rs(resolution);
  std::string ysign, xsign, extra;
  std::string hs, ws;
  if (!(rs >> ysign >> hs >> xsign >> ws) || (rs >> extra) || ysign != "-Y" || xsign != "+X") {
    throw ParseError(ParseErrorKind::BadResolution, "expected '-Y h +X w', got '" + resolution + "'");
  }
  const int height = parse_dimension(hs, "height", ParseErrorKind::BadResolution);
  const int width = parse_dimension(ws, "width", ParseErrorKind::BadResolution);
  const auto n = sample_count_or_throw(width, height, ParseErrorKind::BadResolution);
  // Run-length coding packs at most ~16 pixels per byte in practice; anything
  // claiming far more than that is a corrupt header, so reject before allocating.
  if (std::size_t(height) > in.remaining() ||
      std::size_t(n / kChannels) > in.remaining() * 256) {
    throw ParseError(ParseErrorKind::Truncated, "payload too short for a " + std::to_string(width) +
                                                    "x" + std::to_string(height) + " image");
  }

  SampleArray<float> data(n);
  std::vector<Rgbe> line(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    if (width >= 8 && width <= 0x7fff && in.remaining() >= 4 && in.peek(0) == 2 &&
        in.peek(1) == 2 && (in.peek(2) & 0x80) == 0) {
      const Rgbe head{in.next(), in.next(), in.next(), in.next()};
      if (((int(head[2]) << 8) | head[3]) != width) {
        throw ParseError(ParseErrorKind::RleOverrun, "scanline length does not match width");
      }
      read_rle_scanline(in, line);
    } else {
      read_flat_scanline(in, line);
    }
    for (int x = 0; x < width; ++x) {
      const auto rgb = decode_rgbe_pixel(std::span<const std::uint8_t, 4>(line[std::size_t(x)]));
      for (int c = 0; c < kChannels; ++c) {
        float v = rgb[std::size_t(c)];
        if (exposure != 1.0) v = static_cast<float>(v / exposure);
        data[(Eigen::Index(y) * width + x) * kChannels + c] = v;
      }
    }
  }
  return RadianceImage(width, height, std::move(data));
}

Bytes write_rgbe(const RadianceImage& img) {
  Bytes out;
  append(out, "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(img.height()) +
                  " +X " + std::to_string(img.width()) + "\n");
  const int width = img.width();
  const bool rle = width >= 8 && width <= 0x7fff;
  std::vector<Rgbe> line(static_cast<std::size_t>(width));
  std::vector<std::uint8_t> component(static_cast<std::size_t>(width));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      line[std::size_t(x)] = encode_rgbe_pixel(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
    }
    if (!rle) {
      for (const auto& px : line) out.insert(out.end(), px.begin(), px.end());
      continue;
    }
    out.push_back(2);
    out.push_back(2);
    out.push_back(static_cast<std::uint8_t>(width >> 8));
    out.push_back(static_cast<std::uint8_t>(width & 0xff));
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t x = 0; x < line.size(); ++x) component[x] = line[x][c];
      write_rle_component(out, component);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mask sidecar

Bytes write_mask_pgm(const SaturationMask& mask) {
  Bytes out;
  append(out, "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) +
                  "\n255\n");
  for (Eigen::Index i = 0; i < mask.pixel_count(); ++i) out.push_back(mask[i] ? 255 : 0);
  return out;
}

SaturationMask read_mask_pgm(ByteView bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos, "PGM magic") != "P5") {
    throw ParseError(ParseErrorKind::MalformedHeader, "mask sidecar must be binary PGM (P5)");
  }
  const int width = parse_dimension(next_token(bytes, pos, "width"), "width",
                                    ParseErrorKind::MalformedHeader);
  const int height = parse_dimension(next_token(bytes, pos, "height"), "height",
                                     ParseErrorKind::MalformedHeader);
  const int maxval = parse_dimension(next_token(bytes, pos, "maxval"), "maxval",
                                     ParseErrorKind::MalformedHeader);
  if (maxval > 255) throw ParseError(ParseErrorKind::UnsupportedFormat, "16-bit PGM mask");
  if (pos >= bytes.size()) throw ParseError(ParseErrorKind::Truncated, "no mask payload");
  ++pos;
  const auto pixels =
      std::size_t(sample_count_or_throw(width, height, ParseErrorKind::MalformedHeader) / kChannels);
  if (bytes.size() - pos < pixels) {
    throw ParseError(ParseErrorKind::Truncated, "expected " + std::to_string(pixels) +
                                                    " mask bytes, got " +
                                                    std::to_string(bytes.size() - pos));
  }
  SaturationMask::Flags flags(static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < pixels; ++i) flags[Eigen::Index(i)] = bytes[pos + i] != 0;
  return SaturationMask(width, height, std::move(flags));
}

// ---------------------------------------------------------------------------
// Curve CSV

std::string format_curve_csv(const CurveSamples& samples) {
  if (samples.rows() == 0) throw ValidationError("no curve samples to write");
  std::string out = "x,y\n";
  char buf[64];
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", samples(i, 0), samples(i, 1));
    out += buf;
  }
  return out;
}

CurveSamples parse_curve_csv(std::string_view text) {
  std::vector<std::pair<double, double>> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != "x,y") throw ParseError(ParseErrorKind::MalformedText, "CSV header must be x,y");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    double xv = 0.0, yv = 0.0;
    if (comma == std::string_view::npos || !parse_number(line.substr(0, comma), xv) ||
        !parse_number(line.substr(comma + 1), yv)) {
      throw ParseError(ParseErrorKind::MalformedText, "bad CSV row '" + std::string(line) + "'");
    }
    rows.emplace_back(xv, yv);
  }
  if (header) throw ParseError(ParseErrorKind::MalformedText, "empty CSV");
  CurveSamples out(Eigen::Index(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(Eigen::Index(i), 0) = rows[i].first;
    out(Eigen::Index(i), 1) = rows[i].second;
  }
  return out;
}

void write_curve_csv(const CurveSamples& samples, const std::filesystem::path& path) {
  write_file_atomic(path, format_curve_csv(samples));
}

CurveSamples read_curve_csv(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_curve_csv(as_chars(bytes));
}

// ---------------------------------------------------------------------------
// Files

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path.string());
  return out;
}

void write_file_atomic(const std::filesystem::path& path, ByteView bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

bool starts_with(const Bytes& bytes, std::string_view prefix) {
  return bytes.size() >= prefix.size() &&
         std::equal(prefix.begin(), prefix.end(), bytes.begin(),
                    [](char a, std::uint8_t b) { return std::uint8_t(a) == b; });
}

constexpr std::string_view kPngSignature("\x89PNG\r\n\x1a\n", 8);

}  // namespace

RadianceImage load_hdr(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (starts_with(bytes, "PF") || starts_with(bytes, "Pf")) return read_pfm(bytes);
  if (starts_with(bytes, "#?")) return read_rgbe(bytes);
  throw ParseError(ParseErrorKind::UnknownFormat, path.string() + " is neither PFM nor RGBE");
}

void save_hdr(const std::filesystem::path& path, const RadianceImage& img) {
  const auto ext = lower_extension(path);
  if (ext == ".pfm") return write_file_atomic(path, write_pfm(img));
  if (ext == ".hdr" || ext == ".pic") return write_file_atomic(path, write_rgbe(img));
  throw ValidationError("unsupported HDR output extension '" + ext + "' (use .pfm or .hdr)");
}

DisplayImage load_ldr(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (starts_with(bytes, kPngSignature)) return read_png8(bytes);
  if (starts_with(bytes, "PF") || starts_with(bytes, "Pf")) return as_display(read_pfm(bytes));
  throw ParseError(ParseErrorKind::UnknownFormat, path.string() + " is neither PNG nor PFM");
}

void save_ldr(const std::filesystem::path& path, const DisplayImage& img) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return write_file_atomic(path, write_png8(img));
  if (ext == ".pfm") return write_file_atomic(path, write_pfm(img));
  throw ValidationError("unsupported LDR output extension '" + ext + "' (use .png or .pfm)");
}

}  // namespace hdrpoly
