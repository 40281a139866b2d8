#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "hdrpoly/error.hpp"

namespace hdrpoly {

inline constexpr int kChannels = 3;

// Flat sample storage: row-major, channel-interleaved (x fastest, then y).
template <typename Scalar>
using SampleArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// View of a sample array as one row per pixel, one column per channel.
template <typename Scalar>
using PixelRows = Eigen::Array<Scalar, Eigen::Dynamic, kChannels, Eigen::RowMajor>;

// Checks width/height and returns width*height*kChannels.
Eigen::Index checked_sample_count(int width, int height);

// An RGB image whose samples are finite. No range constraint; RadianceImage and
// DisplayImage add theirs on top.
template <typename Scalar>
class ImageBuffer {
 public:
  ImageBuffer(int width, int height, SampleArray<Scalar> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  static constexpr int channels() noexcept { return kChannels; }
  Eigen::Index pixel_count() const noexcept { return Eigen::Index(width_) * height_; }
  Eigen::Index size() const noexcept { return data_.size(); }

  const SampleArray<Scalar>& samples() const noexcept { return data_; }

  Eigen::Index index(int x, int y, int c) const noexcept {
    return (Eigen::Index(y) * width_ + x) * kChannels + c;
  }
  Scalar at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  Eigen::Map<const PixelRows<Scalar>> pixels() const {
    return Eigen::Map<const PixelRows<Scalar>>(data_.data(), pixel_count(), kChannels);
  }

 private:
  int width_;
  int height_;
  SampleArray<Scalar> data_;
};

extern template class ImageBuffer<float>;
extern template class ImageBuffer<double>;

// Linear, scene-referred radiance. Every sample finite and >= 0.
class RadianceImage : public ImageBuffer<float> {
 public:
  RadianceImage(int width, int height, SampleArray<float> data);
};

// Display-referred image with samples in [0,1]. A nonzero bit depth b means
// every sample sits exactly on the grid k/(2^b - 1).
class DisplayImage : public ImageBuffer<float> {
 public:
  DisplayImage(int width, int height, SampleArray<float> data, int bit_depth = 0);

  int bit_depth() const noexcept { return bit_depth_; }

 private:
  int bit_depth_;
};

// Largest code value for a quantization depth: 2^bits - 1.
double grid_max(int bits);

// True where at least one channel of the pixel was clipped at the high end.
class SaturationMask {
 public:
  using Flags = Eigen::Array<bool, Eigen::Dynamic, 1>;

  // All-clear mask.
  SaturationMask(int width, int height);
  SaturationMask(int width, int height, Flags flags);
  template <typename Scalar>
  explicit SaturationMask(const ImageBuffer<Scalar>& paired)
      : SaturationMask(paired.width(), paired.height()) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Eigen::Index pixel_count() const noexcept { return flags_.size(); }

  const Flags& flags() const noexcept { return flags_; }
  bool at(int x, int y) const { return flags_[Eigen::Index(y) * width_ + x]; }
  bool operator[](Eigen::Index pixel) const { return flags_[pixel]; }

  Eigen::Index count() const { return flags_.count(); }
  double fraction() const { return double(count()) / double(pixel_count()); }

  template <typename Scalar>
  bool matches(const ImageBuffer<Scalar>& img) const noexcept {
    return img.width() == width_ && img.height() == height_;
  }

 private:
  int width_;
  int height_;
  Flags flags_;
};

// The information-losing stage: clamp to [clip_low, clip_high], rescale to
// [0,1], then quantize to quant_bits (0 = keep continuous).
struct DegradationSpec {
  double clip_low = 0.0;
  double clip_high = 1.0;
  int quant_bits = 8;

  void validate() const;
};

RadianceImage new_radiance_image(int width, int height, double fill);

float max_value(const ImageBuffer<float>& img);

// Divides every sample by peak. Samples above peak stay above 1.
RadianceImage normalize_to_unit(const RadianceImage& img, double peak);

// A display image is always a valid radiance image (nonnegative, finite).
RadianceImage as_radiance(const DisplayImage& img);

// Reinterprets radiance samples as display values; they must lie in [0,1].
DisplayImage as_display(const RadianceImage& img, int bit_depth = 0);

}  // namespace hdrpoly
