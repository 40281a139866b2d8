#include "hdrpoly/curve_math.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>

namespace hdrpoly {

CoefficientMaps::CoefficientMaps(int width, int height, Eigen::MatrixXd planes)
    : width_(width), height_(height), planes_(std::move(planes)) {
  const auto pixels = checked_sample_count(width, height) / kChannels;
  if (planes_.rows() != pixels) {
    throw ValidationError("coefficient planes have " + std::to_string(planes_.rows()) +
                          " pixels, expected " + std::to_string(pixels));
  }
  if (planes_.cols() < 2) throw ValidationError("coefficient maps need degree >= 1");
  if (!planes_.allFinite()) throw ValidationError("coefficient maps must be finite");
}

CoefficientMaps constant_maps(const Coefficients& coeffs, int width, int height) {
  if (coeffs.size() < 2) throw ValidationError("constant maps need at least 2 coefficients");
  if (!coeffs.allFinite()) throw ValidationError("coefficients must be finite");
  const auto pixels = checked_sample_count(width, height) / kChannels;
  return CoefficientMaps(width, height, coeffs.transpose().replicate(pixels, 1));
}

Dequantized invert_degradation(const DisplayImage& ldr, const SaturationMask& mask) {
  if (!mask.matches(ldr)) throw ValidationError("saturation mask does not match the image");
  return {ImageBuffer<float>(ldr.width(), ldr.height(), ldr.samples()), mask};
}

PixelRows<double> evaluate_coefficient_maps(const CoefficientMaps& maps,
                                            const ImageBuffer<float>& x) {
  if (!maps.matches(x)) {
    throw ValidationError("coefficient maps are " + std::to_string(maps.width()) + "x" +
                          std::to_string(maps.height()) + " but the input is " +
                          std::to_string(x.width()) + "x" + std::to_string(x.height()));
  }
  const PixelRows<double> v = x.pixels().cast<double>();
  PixelRows<double> acc(v.rows(), kChannels);
  acc.colwise() = maps.plane(maps.degree()).array();
  for (int n = maps.degree() - 1; n >= 0; --n) {
    acc = (acc * v).colwise() + maps.plane(n).array();
  }
  return acc;
}

Reconstruction apply_coefficient_maps(const CoefficientMaps& maps, const ImageBuffer<float>& x) {
  PixelRows<double> h = evaluate_coefficient_maps(maps, x);
  const Eigen::Index clamped = (h < 0.0).count();
  h = h.max(0.0);
  SampleArray<float> out(h.size());
  Eigen::Map<PixelRows<float>>(out.data(), h.rows(), kChannels) = h.cast<float>();
  if (!out.allFinite()) throw ValidationError("reconstruction overflowed single precision");
  return {RadianceImage(x.width(), x.height(), std::move(out)), clamped};
}

FitReport fit_polynomial_global(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y, int degree,
                                const SampleFlags& exclude) {
  if (degree < 1) throw ValidationError("polynomial degree must be >= 1");
  if (x.size() != y.size()) throw ValidationError("x and y sample counts differ");
  if (exclude.size() != 0 && exclude.size() != x.size()) {
    throw ValidationError("exclusion mask length does not match the samples");
  }
  const Eigen::Index cols = degree + 1;
  const Eigen::Index kept = exclude.size() ? x.size() - exclude.count() : x.size();
  if (kept < cols) {
    throw ValidationError("degree " + std::to_string(degree) + " fit needs at least " +
                          std::to_string(cols) + " samples, got " + std::to_string(kept));
  }

  Eigen::MatrixXd design(kept, cols);
  Eigen::VectorXd rhs(kept);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (exclude.size() && exclude[i]) continue;
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
      throw DomainError("fit abscissa " + std::to_string(x[i]) + " outside [0,1] at sample " +
                        std::to_string(i));
    }
    if (!std::isfinite(y[i])) throw ValidationError("non-finite fit target at sample " +
                                                    std::to_string(i));
    double power = 1.0;
    for (Eigen::Index n = 0; n < cols; ++n) {
      design(row, n) = power;
      power *= x[i];
    }
    rhs[row] = y[i];
    ++row;
  }

  FitReport report;
  report.sample_count = kept;

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  // R carries the singular values of the design matrix (Q is orthogonal and
  // the pivoting only permutes columns).
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  const double smin = sv[sv.size() - 1];
  report.condition_estimate =
      smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
  if (!(report.condition_estimate <= kMaxCondition)) {
    throw DegenerateFitError("rank-deficient design: condition estimate " +
                                 std::to_string(report.condition_estimate) + " exceeds 1e12",
                             report);
  }

  report.coeffs = qr.solve(rhs);
  report.rms_residual = std::sqrt((design * report.coeffs - rhs).squaredNorm() / double(kept));
  return report;
}

FitReport derive_global_curve(const ImageBuffer<float>& ldr, const RadianceImage& hdr, int degree,
                              const SaturationMask& mask) {
  if (ldr.width() != hdr.width() || ldr.height() != hdr.height()) {
    throw ValidationError("LDR and HDR dimensions differ");
  }
  if (!mask.matches(ldr)) throw ValidationError("saturation mask does not match the image");
  SampleFlags exclude(ldr.size());
  for (Eigen::Index i = 0; i < ldr.size(); ++i) exclude[i] = mask[i / kChannels];
  return fit_polynomial_global(ldr.samples().cast<double>().matrix(),
                               hdr.samples().cast<double>().matrix(), degree, exclude);
}

double invert_curve_analytic(const ToneCurve& curve, double v) {
  validate(curve);
  detail::require_unit_interval(v);
  if (const auto* mu = std::get_if<MuLaw>(&curve)) {
    if (v == 1.0) return 1.0;
    return std::expm1(v * std::log1p(mu->mu)) / mu->mu;
  }
  if (const auto* g = std::get_if<Gamma>(&curve)) {
    const double base = v / g->gain;
    if (base > 1.0) {
      throw DomainError("v / gain = " + std::to_string(base) + " outside [0,1]");
    }
    return std::pow(base, 1.0 / g->gamma);
  }
  throw ValidationError("no closed-form inverse for polynomial curves");
}

MonotonicityReport check_monotonic(const Coefficients& coeffs, Eigen::Index samples) {
  if (samples < 2) throw ValidationError("monotonicity check needs at least 2 samples");
  MonotonicityReport report;
  double prev = horner(coeffs, 0.0);
  for (Eigen::Index i = 1; i < samples; ++i) {
    const double cur = horner(coeffs, double(i) / double(samples - 1));
    const double step = cur - prev;
    if (step < report.worst_step) report.worst_step = step;
    if (step < -kMonotonicTolerance && report.monotonic) {
      report.monotonic = false;
      report.first_violation = i - 1;
    }
    prev = cur;
  }
  return report;
}

namespace {

template <typename Fn>
CurveSamples sample_with(Eigen::Index n, Fn&& fn) {
  if (n < 2) throw ValidationError("curve sampling needs n >= 2");
  CurveSamples out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xv = double(i) / double(n - 1);
    out(i, 0) = xv;
    out(i, 1) = fn(xv);
  }
  return out;
}

}  // namespace

CurveSamples sample_curve(const ToneCurve& curve, Eigen::Index n) {
  validate(curve);
  return sample_with(n, [&](double v) { return detail::eval_unchecked(curve, v); });
}

CurveSamples sample_curve(const Coefficients& coeffs, Eigen::Index n) {
  validate(ToneCurve(Polynomial{coeffs}));
  return sample_with(n, [&](double v) { return horner(coeffs, v); });
}

CurveSamples sample_inverse_curve(const ToneCurve& curve, Eigen::Index n) {
  return sample_with(n, [&](double v) { return invert_curve_analytic(curve, v); });
}

}  // namespace hdrpoly
