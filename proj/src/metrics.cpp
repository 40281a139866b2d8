#include "hdrpoly/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>

#include "hdrpoly/forward.hpp"

namespace hdrpoly {

namespace {

template <typename Scalar>
void require_same_shape(const ImageBuffer<Scalar>& a, const ImageBuffer<Scalar>& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ValidationError("image dimensions differ: " + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()));
  }
}

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) throw ValidationError(std::string(what) + " must be positive");
}

using Plane = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> g{};
  double sum = 0.0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double d = k - kSsimWindow / 2;
    g[std::size_t(k)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[std::size_t(k)];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Separable Gaussian filter, valid region only.
Plane filter_valid(const Plane& in, const std::array<double, kSsimWindow>& g) {
  const Eigen::Index w = in.cols() - (kSsimWindow - 1);
  const Eigen::Index h = in.rows() - (kSsimWindow - 1);
  Plane horizontal = Plane::Zero(in.rows(), w);
  for (int k = 0; k < kSsimWindow; ++k) horizontal += g[std::size_t(k)] * in.middleCols(k, w);
  Plane out = Plane::Zero(h, w);
  for (int k = 0; k < kSsimWindow; ++k) out += g[std::size_t(k)] * horizontal.middleRows(k, h);
  return out;
}

template <typename Scalar>
Plane channel_plane(const ImageBuffer<Scalar>& img, int c) {
  using Strided = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>,
                             0, Eigen::Stride<Eigen::Dynamic, kChannels>>;
  const Strided view(img.samples().data() + c, img.height(), img.width(),
                     Eigen::Stride<Eigen::Dynamic, kChannels>(Eigen::Index(img.width()) * kChannels,
                                                              kChannels));
  return view.template cast<double>();
}

template <typename Scalar>
void require_unit_range(const ImageBuffer<Scalar>& img) {
  if ((img.samples() < Scalar(0)).any() || (img.samples() > Scalar(1)).any()) {
    throw ValidationError("SSIM inputs must be normalized to [0,1]");
  }
}

ImageBuffer<float> unit_clipped(const ImageBuffer<float>& img, double peak) {
  SampleArray<float> out = img.samples().unaryExpr(
      [peak](float v) { return static_cast<float>(std::clamp(double(v) / peak, 0.0, 1.0)); });
  return ImageBuffer<float>(img.width(), img.height(), std::move(out));
}

}  // namespace

template <typename Scalar>
double psnr(const ImageBuffer<Scalar>& a, const ImageBuffer<Scalar>& b, double peak) {
  require_same_shape(a, b);
  require_positive(peak, "PSNR peak");
  const double mse =
      (a.samples().template cast<double>() - b.samples().template cast<double>()).square().sum() /
      double(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

template double psnr(const ImageBuffer<float>&, const ImageBuffer<float>&, double);
template double psnr(const ImageBuffer<double>&, const ImageBuffer<double>&, double);

DisplayImage mu_tonemap(const ImageBuffer<float>& img, double peak, double mu) {
  require_positive(peak, "mu-tonemap peak");
  require_positive(mu, "mu");
  const ToneCurve curve = MuLaw{mu};
  SampleArray<float> out = img.samples().unaryExpr([&](float v) {
    const double unit = std::clamp(double(v) / peak, 0.0, 1.0);
    return static_cast<float>(detail::eval_unchecked(curve, unit));
  });
  return DisplayImage(img.width(), img.height(), std::move(out));
}

double mu_psnr(const ImageBuffer<float>& a, const ImageBuffer<float>& b, double peak, double mu) {
  require_same_shape(a, b);
  return psnr<float>(mu_tonemap(a, peak, mu), mu_tonemap(b, peak, mu), 1.0);
}

template <typename Scalar>
double ssim(const ImageBuffer<Scalar>& a, const ImageBuffer<Scalar>& b) {
  require_same_shape(a, b);
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw ValidationError("SSIM needs images of at least 11x11 pixels");
  }
  require_unit_range(a);
  require_unit_range(b);

  static const auto g = gaussian_window();
  constexpr double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  constexpr double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);

  double total = 0.0;
  Eigen::Index count = 0;
  for (int c = 0; c < kChannels; ++c) {
    const Plane x = channel_plane(a, c);
    const Plane y = channel_plane(b, c);
    const Plane mx = filter_valid(x, g);
    const Plane my = filter_valid(y, g);
    const Plane sxx = filter_valid(x.cwiseProduct(x), g) - mx.cwiseProduct(mx);
    const Plane syy = filter_valid(y.cwiseProduct(y), g) - my.cwiseProduct(my);
    const Plane sxy = filter_valid(x.cwiseProduct(y), g) - mx.cwiseProduct(my);
    const auto num = (2.0 * mx.array() * my.array() + c1) * (2.0 * sxy.array() + c2);
    const auto den = (mx.array().square() + my.array().square() + c1) *
                     (sxx.array() + syy.array() + c2);
    total += (num / den).sum();
    count += mx.size();
  }
  return total / double(count);
}

template double ssim(const ImageBuffer<float>&, const ImageBuffer<float>&);
template double ssim(const ImageBuffer<double>&, const ImageBuffer<double>&);

double PeakPolicy::resolve(const ImageBuffer<float>& ground_truth) const {
  const double peak = kind == Kind::GroundTruthMax ? double(max_value(ground_truth)) : value;
  if (!std::isfinite(peak) || peak <= 0.0) {
    throw ValidationError("metric peak must be positive (all-black ground truth needs --peak)");
  }
  return peak;
}

MetricsReport evaluate(const RadianceImage& estimate, const RadianceImage& ground_truth,
                       const PeakPolicy& peak_policy, double mu) {
  require_same_shape<float>(estimate, ground_truth);
  require_positive(mu, "mu");
  MetricsReport r;
  r.peak_used = peak_policy.resolve(ground_truth);
  r.mu_used = mu;
  r.psnr = psnr<float>(estimate, ground_truth, r.peak_used);
  r.mu_psnr = mu_psnr(estimate, ground_truth, r.peak_used, mu);
  r.ssim = ssim<float>(unit_clipped(estimate, r.peak_used), unit_clipped(ground_truth, r.peak_used));
  r.mu_ssim = ssim<float>(mu_tonemap(estimate, r.peak_used, mu),
                          mu_tonemap(ground_truth, r.peak_used, mu));
  r.avg_psnr = avg_psnr(r.psnr, r.mu_psnr);
  return r;
}

std::string to_json_line(const MetricsReport& report, const std::string& pair_id) {
  return nlohmann::ordered_json{{"psnr", report.psnr},
                                {"mu_psnr", report.mu_psnr},
                                {"ssim", report.ssim},
                                {"mu_ssim", report.mu_ssim},
                                {"avg_psnr", report.avg_psnr},
                                {"peak_used", report.peak_used},
                                {"mu_used", report.mu_used},
                                {"pair_id", pair_id}}
      .dump();
}

}  // namespace hdrpoly
