#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>

#include "hdrpoly/forward.hpp"
#include "hdrpoly/image.hpp"
#include "hdrpoly/polynomial.hpp"

namespace hdrpoly {

inline constexpr int kDefaultDegree = 7;
// Fits whose design matrix has a larger extreme singular value ratio are
// rejected as degenerate.
inline constexpr double kMaxCondition = 1e12;
// Allowed drop between adjacent grid points before a curve counts as
// decreasing.
inline constexpr double kMonotonicTolerance = 1e-9;

// Per-pixel polynomial coefficient planes M_0..M_N, shared by all three
// channels. Stored as one row per pixel and one column per power.
class CoefficientMaps {
 public:
  CoefficientMaps(int width, int height, Eigen::MatrixXd planes);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int degree() const noexcept { return int(planes_.cols()) - 1; }
  const Eigen::MatrixXd& planes() const noexcept { return planes_; }
  auto plane(int n) const { return planes_.col(n); }

  template <typename Scalar>
  bool matches(const ImageBuffer<Scalar>& img) const noexcept {
    return img.width() == width_ && img.height() == height_;
  }

 private:
  int width_;
  int height_;
  Eigen::MatrixXd planes_;
};

// Lifts a global curve c_0..c_N into constant per-pixel planes.
CoefficientMaps constant_maps(const Coefficients& coeffs, int width, int height);

// Display values taken back to continuous reals, plus the pixels a fit must
// not trust.
struct Dequantized {
  ImageBuffer<float> values;
  SaturationMask mask;
};

// Inverse of clipping and quantization, modeled as the identity on pixel values.
// Saturated pixels cannot be recovered and are only carried along in the mask.
Dequantized invert_degradation(const DisplayImage& ldr, const SaturationMask& mask);

// sum_n M_n[p] x[p,c]^n in double precision, unclamped. One row per pixel.
PixelRows<double> evaluate_coefficient_maps(const CoefficientMaps& maps,
                                            const ImageBuffer<float>& x);

struct Reconstruction {
  RadianceImage image;
  // Samples that came out negative and were clamped to 0.
  Eigen::Index clamped_samples;
};

Reconstruction apply_coefficient_maps(const CoefficientMaps& maps, const ImageBuffer<float>& x);

struct FitReport {
  Coefficients coeffs;
  double rms_residual = 0.0;
  Eigen::Index sample_count = 0;
  // sigma_max / sigma_min of the Vandermonde design matrix.
  double condition_estimate = 0.0;

  int degree() const noexcept { return int(coeffs.size()) - 1; }
};

// Raised when the design matrix is numerically rank deficient. The attached
// report carries the diagnostics; its coefficients are left empty.
class DegenerateFitError : public std::runtime_error {
 public:
  DegenerateFitError(const std::string& what, FitReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const FitReport& report() const noexcept { return report_; }

 private:
  FitReport report_;
};

using SampleFlags = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Least-squares polynomial through (x_i, y_i), x_i in [0,1], solved by
// column-pivoted Householder QR of the Vandermonde matrix. Samples with
// exclude[i] set are ignored; an empty exclude array keeps everything.
FitReport fit_polynomial_global(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y, int degree,
                                const SampleFlags& exclude = SampleFlags());

// Fits the radiance of every unmasked (pixel, channel) sample as a polynomial
// of its display value.
FitReport derive_global_curve(const ImageBuffer<float>& ldr, const RadianceImage& hdr, int degree,
                              const SaturationMask& mask);

// Closed-form inverse of a mu-law or gamma curve at v in [0,1].
double invert_curve_analytic(const ToneCurve& curve, double v);

struct MonotonicityReport {
  bool monotonic = true;
  // Interval i spans grid points i and i+1.
  std::optional<Eigen::Index> first_violation;
  // Most negative step p(x_{i+1}) - p(x_i) seen, or 0.
  double worst_step = 0.0;
};

MonotonicityReport check_monotonic(const Coefficients& coeffs, Eigen::Index samples);

// n uniformly spaced points over [0,1]: column 0 holds x, column 1 the curve.
using CurveSamples = Eigen::Matrix<double, Eigen::Dynamic, 2>;

CurveSamples sample_curve(const ToneCurve& curve, Eigen::Index n);
CurveSamples sample_curve(const Coefficients& coeffs, Eigen::Index n);
// Samples invert_curve_analytic instead of the forward curve.
CurveSamples sample_inverse_curve(const ToneCurve& curve, Eigen::Index n);

}  // namespace hdrpoly
