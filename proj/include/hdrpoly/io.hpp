#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdrpoly/curve_math.hpp"
#include "hdrpoly/image.hpp"

namespace hdrpoly {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Portable float map. "PF" is RGB, "Pf" grayscale (replicated to RGB on read).
// Scanlines run bottom to top; a negative scale marks little-endian floats and
// its magnitude multiplies every sample.
RadianceImage read_pfm(ByteView bytes);
// "PF", scale -1.0, little-endian.
Bytes write_pfm(const ImageBuffer<float>& img);

// Radiance RGBE with a "-Y h +X w" resolution line. Flat, old-style and
// adaptive run-length scanlines decode; encoding uses adaptive RLE whenever
// the width allows it (8..32767).
RadianceImage read_rgbe(ByteView bytes);
Bytes write_rgbe(const RadianceImage& img);

// Shared-exponent pixel encoding. Mantissas are rounded to nearest, so every
// channel decodes within max(r,g,b)/255 of its input.
std::array<std::uint8_t, 4> encode_rgbe_pixel(float r, float g, float b);
std::array<float, 3> decode_rgbe_pixel(std::span<const std::uint8_t, 4> rgbe);

// 8-bit RGB PNG. Other color types and bit depths are rejected.
DisplayImage read_png8(ByteView bytes);
Bytes write_png8(const DisplayImage& img);

// Binary PGM sidecar for saturation masks: 255 where saturated, 0 elsewhere.
Bytes write_mask_pgm(const SaturationMask& mask);
SaturationMask read_mask_pgm(ByteView bytes);

// "x,y" header, then one "%.9g,%.9g" row per sample, LF terminated.
std::string format_curve_csv(const CurveSamples& samples);
CurveSamples parse_curve_csv(std::string_view text);
void write_curve_csv(const CurveSamples& samples, const std::filesystem::path& path);
CurveSamples read_curve_csv(const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::filesystem::path& path, ByteView bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

// Format chosen from the leading magic bytes: PFM or RGBE.
RadianceImage load_hdr(const std::filesystem::path& path);
// Format from extension: .pfm or .hdr/.pic.
void save_hdr(const std::filesystem::path& path, const RadianceImage& img);

// PNG decodes as 8-bit; PFM decodes as continuous and must lie in [0,1].
DisplayImage load_ldr(const std::filesystem::path& path);
// .png requires bit depth 8; .pfm stores any depth losslessly.
void save_ldr(const std::filesystem::path& path, const DisplayImage& img);

}  // namespace hdrpoly
