#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include "hdrpoly/image.hpp"

namespace hdrpoly::testing {

inline SampleArray<float> uniform_samples(Eigen::Index n, std::mt19937_64& rng, float lo = 0.0f,
                                          float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  SampleArray<float> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline RadianceImage random_radiance(int w, int h, std::mt19937_64& rng, float hi = 1.0f) {
  return RadianceImage(w, h, uniform_samples(Eigen::Index(w) * h * kChannels, rng, 0.0f, hi));
}

inline RadianceImage constant_radiance(int w, int h, float v) { return new_radiance_image(w, h, v); }

// Distance in units in the last place between two doubles of the same sign.
inline std::int64_t ulp_distance(double a, double b) {
  if (a == b) return 0;
  auto ia = std::bit_cast<std::int64_t>(a);
  auto ib = std::bit_cast<std::int64_t>(b);
  if ((ia < 0) != (ib < 0)) return std::numeric_limits<std::int64_t>::max();
  return ia > ib ? ia - ib : ib - ia;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hdrpoly-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace hdrpoly::testing
