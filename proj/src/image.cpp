#include "hdrpoly/image.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hdrpoly {

Eigen::Index checked_sample_count(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw ValidationError("image dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
  constexpr auto kMax = std::numeric_limits<Eigen::Index>::max() / kChannels;
  if (Eigen::Index(width) > kMax / height) {
    throw ValidationError("image dimensions overflow the sample index range");
  }
  return Eigen::Index(width) * height * kChannels;
}

template <typename Scalar>
ImageBuffer<Scalar>::ImageBuffer(int width, int height, SampleArray<Scalar> data)
    : width_(width), height_(height), data_(std::move(data)) {
  const auto expected = checked_sample_count(width, height);
  if (data_.size() != expected) {
    throw ValidationError("sample count " + std::to_string(data_.size()) + " does not match " +
                          std::to_string(width) + "x" + std::to_string(height) + "x3");
  }
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("non-finite sample at index " + std::to_string(i));
    }
  }
}

template class ImageBuffer<float>;
template class ImageBuffer<double>;

RadianceImage::RadianceImage(int width, int height, SampleArray<float> data)
    : ImageBuffer<float>(width, height, std::move(data)) {
  const auto& s = samples();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] < 0.0f) {
      throw ValidationError("negative radiance " + std::to_string(s[i]) + " at index " +
                            std::to_string(i));
    }
  }
}

double grid_max(int bits) {
  if (bits != 8 && bits != 16) {
    throw ValidationError("quantization depth must be 8 or 16, got " + std::to_string(bits));
  }
  return double((1u << bits) - 1u);
}

DisplayImage::DisplayImage(int width, int height, SampleArray<float> data, int bit_depth)
    : ImageBuffer<float>(width, height, std::move(data)), bit_depth_(bit_depth) {
  if (bit_depth != 0 && bit_depth != 8 && bit_depth != 16) {
    throw ValidationError("bit depth must be 0, 8 or 16, got " + std::to_string(bit_depth));
  }
  const auto& s = samples();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0f && s[i] <= 1.0f)) {
      throw ValidationError("display sample " + std::to_string(s[i]) + " outside [0,1] at index " +
                            std::to_string(i));
    }
  }
  if (bit_depth_ > 0) {
    const double top = grid_max(bit_depth_);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double k = std::round(double(s[i]) * top);
      if (static_cast<float>(k / top) != s[i]) {
        throw ValidationError("sample at index " + std::to_string(i) + " is off the " +
                              std::to_string(bit_depth_) + "-bit grid");
      }
    }
  }
}

SaturationMask::SaturationMask(int width, int height)
    : width_(width), height_(height),
      flags_(Flags::Constant(checked_sample_count(width, height) / kChannels, false)) {}

SaturationMask::SaturationMask(int width, int height, Flags flags)
    : width_(width), height_(height), flags_(std::move(flags)) {
  if (flags_.size() != checked_sample_count(width, height) / kChannels) {
    throw ValidationError("saturation mask has " + std::to_string(flags_.size()) +
                          " flags for a " + std::to_string(width) + "x" + std::to_string(height) +
                          " image");
  }
}

void DegradationSpec::validate() const {
  if (!std::isfinite(clip_low) || !std::isfinite(clip_high) || !(clip_low < clip_high)) {
    throw ValidationError("clip range requires finite clip_low < clip_high");
  }
  if (quant_bits != 0 && quant_bits != 8 && quant_bits != 16) {
    throw ValidationError("quant_bits must be 0, 8 or 16, got " + std::to_string(quant_bits));
  }
}

RadianceImage new_radiance_image(int width, int height, double fill) {
  if (!std::isfinite(fill) || fill < 0.0) {
    throw ValidationError("fill value must be finite and nonnegative");
  }
  const auto n = checked_sample_count(width, height);
  return RadianceImage(width, height, SampleArray<float>::Constant(n, static_cast<float>(fill)));
}

float max_value(const ImageBuffer<float>& img) {
  if (img.size() == 0) throw ValidationError("max_value of an empty image");
  return img.samples().maxCoeff();
}

RadianceImage normalize_to_unit(const RadianceImage& img, double peak) {
  if (!std::isfinite(peak) || peak <= 0.0) {
    throw ValidationError("normalization peak must be finite and positive");
  }
  SampleArray<float> out = (img.samples().cast<double>() / peak).cast<float>();
  return RadianceImage(img.width(), img.height(), std::move(out));
}

RadianceImage as_radiance(const DisplayImage& img) {
  return RadianceImage(img.width(), img.height(), img.samples());
}

DisplayImage as_display(const RadianceImage& img, int bit_depth) {
  return DisplayImage(img.width(), img.height(), img.samples(), bit_depth);
}

}  // namespace hdrpoly
