#include <png.h>

#include <cmath>
#include <memory>

#include "hdrpoly/io.hpp"

namespace hdrpoly {

namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

DisplayImage read_png8(ByteView bytes) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw ParseError(ParseErrorKind::MalformedHeader, std::string("PNG: ") + png.image.message);
  }
  if (png.image.format != PNG_FORMAT_RGB) {
    throw ParseError(ParseErrorKind::UnsupportedFormat,
                     "only 8-bit RGB PNG without alpha or palette is supported");
  }
  const int width = int(png.image.width);
  const int height = int(png.image.height);
  Eigen::Index n = 0;
  try {
    n = checked_sample_count(width, height);
  } catch (const ValidationError& e) {
    throw ParseError(ParseErrorKind::MalformedHeader, e.what());
  }
  std::vector<png_byte> pixels(static_cast<std::size_t>(n));
  if (!png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr)) {
    throw ParseError(ParseErrorKind::Truncated, std::string("PNG: ") + png.image.message);
  }
  SampleArray<float> data(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data[i] = static_cast<float>(double(pixels[std::size_t(i)]) / 255.0);
  }
  return DisplayImage(width, height, std::move(data), 8);
}

Bytes write_png8(const DisplayImage& img) {
  if (img.bit_depth() != 8) {
    throw ValidationError("PNG output needs an 8-bit quantized image, got bit depth " +
                          std::to_string(img.bit_depth()));
  }
  std::vector<png_byte> pixels(static_cast<std::size_t>(img.size()));
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    pixels[std::size_t(i)] = static_cast<png_byte>(std::lround(double(img.samples()[i]) * 255.0));
  }
  PngImage png;
  png.image.width = png_uint_32(img.width());
  png.image.height = png_uint_32(img.height());
  png.image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode: ") + png.image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode: ") + png.image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace hdrpoly
