#pragma once

#include <cmath>
#include <string>
#include <variant>

#include "hdrpoly/image.hpp"
#include "hdrpoly/polynomial.hpp"

namespace hdrpoly {

// log(1 + mu v) / log(1 + mu). Any mu > 0.
struct MuLaw {
  double mu;
};

// gain * v^gamma with gamma in (0,1] and gain > 0.
struct Gamma {
  double gamma;
  double gain = 1.0;
};

// sum_n coeffs[n] v^n, at least two coefficients.
struct Polynomial {
  Coefficients coeffs;
};

using ToneCurve = std::variant<MuLaw, Gamma, Polynomial>;

void validate(const ToneCurve& curve);

// Short "family=param" label, e.g. "gamma=0.5".
std::string describe(const ToneCurve& curve);

namespace detail {

void require_unit_interval(double v);

template <typename Scalar>
Scalar eval_unchecked(const ToneCurve& curve, Scalar v) {
  struct Visitor {
    Scalar v;
    Scalar operator()(const MuLaw& c) const {
      const Scalar mu = static_cast<Scalar>(c.mu);
      return std::log1p(mu * v) / std::log1p(mu);
    }
    Scalar operator()(const Gamma& c) const {
      return static_cast<Scalar>(c.gain) * std::pow(v, static_cast<Scalar>(c.gamma));
    }
    Scalar operator()(const Polynomial& c) const { return horner(c.coeffs, v); }
  };
  return std::visit(Visitor{v}, curve);
}

}  // namespace detail

// Evaluates the tone curve at v in [0,1]. The log base cancels in the mu-law
// ratio; natural log is used.
template <typename Scalar>
Scalar eval_curve(const ToneCurve& curve, Scalar v) {
  validate(curve);
  detail::require_unit_interval(double(v));
  return detail::eval_unchecked(curve, v);
}

// Tone-mapped samples before clipping. Polynomial curves and gains above 1 can
// leave [0,1], so this is a plain finite buffer rather than a DisplayImage.
using ToneMapped = ImageBuffer<float>;

// Applies the curve per sample (double precision, stored as float). Every
// input sample must lie in [0,1].
ToneMapped tone_map(const ToneCurve& curve, const RadianceImage& img);

struct Clipped {
  DisplayImage image;
  SaturationMask mask;
};

// Clamps to [clip_low, clip_high] and rescales to [0,1]. Only clamping at the
// high end marks the pixel as saturated; a sample exactly at clip_high is not
// clamped.
Clipped clip(const ImageBuffer<float>& img, const DegradationSpec& spec);

// round(v (2^bits - 1)) / (2^bits - 1), rounding half away from zero.
DisplayImage quantize(const DisplayImage& img, int bits);

// tone_map -> clip -> quantize(spec.quant_bits).
Clipped degrade(const RadianceImage& img, const ToneCurve& curve, const DegradationSpec& spec);

}  // namespace hdrpoly
