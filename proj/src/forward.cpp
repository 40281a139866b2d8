#include "hdrpoly/forward.hpp"

#include <algorithm>
#include <sstream>

namespace hdrpoly {

void validate(const ToneCurve& curve) {
  struct Visitor {
    void operator()(const MuLaw& c) const {
      if (!std::isfinite(c.mu) || c.mu <= 0.0) {
        throw ValidationError("mu-law curve requires finite mu > 0");
      }
    }
    void operator()(const Gamma& c) const {
      if (!std::isfinite(c.gamma) || c.gamma <= 0.0 || c.gamma > 1.0) {
        throw ValidationError("gamma must lie in (0,1], got " + std::to_string(c.gamma));
      }
      if (!std::isfinite(c.gain) || c.gain <= 0.0) {
        throw ValidationError("gamma gain must be finite and positive");
      }
    }
    void operator()(const Polynomial& c) const {
      if (c.coeffs.size() < 2) {
        throw ValidationError("polynomial curve needs at least 2 coefficients");
      }
      if (!c.coeffs.allFinite()) throw ValidationError("polynomial coefficients must be finite");
    }
  };
  std::visit(Visitor{}, curve);
}

std::string describe(const ToneCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  struct Visitor {
    std::ostringstream& os;
    void operator()(const MuLaw& c) const { os << "mu=" << c.mu; }
    void operator()(const Gamma& c) const {
      os << "gamma=" << c.gamma;
      if (c.gain != 1.0) os << ",gain=" << c.gain;
    }
    void operator()(const Polynomial& c) const {
      os << "poly=";
      for (Eigen::Index i = 0; i < c.coeffs.size(); ++i) os << (i ? "," : "") << c.coeffs[i];
    }
  };
  std::visit(Visitor{os}, curve);
  return os.str();
}

namespace detail {

void require_unit_interval(double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError("tone curve argument " + std::to_string(v) + " outside [0,1]");
  }
}

}  // namespace detail

ToneMapped tone_map(const ToneCurve& curve, const RadianceImage& img) {
  validate(curve);
  const auto& in = img.samples();
  SampleArray<float> out(in.size());
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const double v = in[i];
    if (v > 1.0) {
      const auto pixel = i / kChannels;
      throw DomainError("sample " + std::to_string(v) + " at pixel " + std::to_string(pixel) +
                        " (x=" + std::to_string(pixel % img.width()) +
                        ", y=" + std::to_string(pixel / img.width()) +
                        ", channel " + std::to_string(i % kChannels) +
                        ") outside [0,1]; normalize the image first");
    }
    out[i] = static_cast<float>(detail::eval_unchecked(curve, v));
    if (!std::isfinite(out[i])) {
      throw DomainError("tone curve overflowed at sample index " + std::to_string(i));
    }
  }
  return ToneMapped(img.width(), img.height(), std::move(out));
}

Clipped clip(const ImageBuffer<float>& img, const DegradationSpec& spec) {
  spec.validate();
  const double lo = spec.clip_low;
  const double hi = spec.clip_high;
  const double range = hi - lo;
  const auto& in = img.samples();
  SampleArray<float> out(in.size());
  SaturationMask::Flags flags = SaturationMask::Flags::Constant(img.pixel_count(), false);
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const double v = in[i];
    if (v > hi) flags[i / kChannels] = true;
    const double clamped = std::clamp(v, lo, hi);
    out[i] = static_cast<float>((clamped - lo) / range);
  }
  return {DisplayImage(img.width(), img.height(), std::move(out)),
          SaturationMask(img.width(), img.height(), std::move(flags))};
}

DisplayImage quantize(const DisplayImage& img, int bits) {
  const double top = grid_max(bits);
  SampleArray<float> out = img.samples().unaryExpr([top](float v) {
    return static_cast<float>(std::round(double(v) * top) / top);
  });
  return DisplayImage(img.width(), img.height(), std::move(out), bits);
}

Clipped degrade(const RadianceImage& img, const ToneCurve& curve, const DegradationSpec& spec) {
  spec.validate();
  auto clipped = clip(tone_map(curve, img), spec);
  if (spec.quant_bits == 0) return clipped;
  return {quantize(clipped.image, spec.quant_bits), std::move(clipped.mask)};
}

}  // namespace hdrpoly
