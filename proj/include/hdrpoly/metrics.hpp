#pragma once

#include <string>

#include "hdrpoly/image.hpp"

namespace hdrpoly {

// PSNR reported for identical images (and the ceiling for all others).
inline constexpr double kPsnrCap = 99.0;
inline constexpr double kDefaultMu = 5000.0;

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// 10 log10(peak^2 / MSE) over all samples, capped at kPsnrCap. Instantiated
// for float and double buffers; accumulation is always double.
template <typename Scalar>
double psnr(const ImageBuffer<Scalar>& a, const ImageBuffer<Scalar>& b, double peak);

// Normalize by peak, clip to [0,1], apply the mu-law curve.
DisplayImage mu_tonemap(const ImageBuffer<float>& img, double peak, double mu);

double mu_psnr(const ImageBuffer<float>& a, const ImageBuffer<float>& b, double peak, double mu);

// Mean SSIM over the valid interior of an 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range 1, averaged over channels and
// positions. Both inputs must lie in [0,1].
template <typename Scalar>
double ssim(const ImageBuffer<Scalar>& a, const ImageBuffer<Scalar>& b);

extern template double psnr(const ImageBuffer<float>&, const ImageBuffer<float>&, double);
extern template double psnr(const ImageBuffer<double>&, const ImageBuffer<double>&, double);
extern template double ssim(const ImageBuffer<float>&, const ImageBuffer<float>&);
extern template double ssim(const ImageBuffer<double>&, const ImageBuffer<double>&);

// 0.7 psnr + 0.3 mu_psnr.
inline double avg_psnr(double psnr_db, double mu_psnr_db) {
  return 0.7 * psnr_db + 0.3 * mu_psnr_db;
}

// Which peak normalizes the HDR-domain metrics.
struct PeakPolicy {
  enum class Kind { GroundTruthMax, Fixed };
  Kind kind = Kind::GroundTruthMax;
  double value = 1.0;

  static PeakPolicy ground_truth_max() { return {Kind::GroundTruthMax, 0.0}; }
  static PeakPolicy fixed(double peak) { return {Kind::Fixed, peak}; }

  double resolve(const ImageBuffer<float>& ground_truth) const;
};

struct MetricsReport {
  double psnr = 0.0;
  double mu_psnr = 0.0;
  double ssim = 0.0;
  double mu_ssim = 0.0;
  double avg_psnr = 0.0;
  double peak_used = 0.0;
  double mu_used = 0.0;
};

// HDR-domain metrics against the resolved peak; tone-mapped metrics after
// mu_tonemap. HDR-domain SSIM runs on the peak-normalized, [0,1]-clipped images.
MetricsReport evaluate(const RadianceImage& estimate, const RadianceImage& ground_truth,
                       const PeakPolicy& peak_policy = PeakPolicy::ground_truth_max(),
                       double mu = kDefaultMu);

// One JSON object: psnr, mu_psnr, ssim, mu_ssim, avg_psnr, peak_used, mu_used, pair_id.
std::string to_json_line(const MetricsReport& report, const std::string& pair_id);

}  // namespace hdrpoly
