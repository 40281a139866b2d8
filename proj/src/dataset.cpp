#include "hdrpoly/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <bit>
#include <random>
#include <sstream>

#include "hdrpoly/io.hpp"

namespace hdrpoly {

using ojson = nlohmann::ordered_json;

const char* to_string(CurveFamily family) {
  return family == CurveFamily::MuLaw ? "mu" : "gamma";
}

CurveFamily parse_family(std::string_view name) {
  if (name == "mu") return CurveFamily::MuLaw;
  if (name == "gamma") return CurveFamily::Gamma;
  throw ValidationError("unknown curve family '" + std::string(name) + "' (use mu or gamma)");
}

ToneCurve make_curve(CurveFamily family, double parameter) {
  ToneCurve curve = family == CurveFamily::MuLaw ? ToneCurve(MuLaw{parameter})
                                                 : ToneCurve(Gamma{parameter, 1.0});
  validate(curve);
  return curve;
}

void CurveSchedule::validate() const {
  if (parameters.empty()) throw ValidationError("curve schedule is empty");
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    const double p = parameters[i];
    if (family == CurveFamily::MuLaw && !(p >= kMuMin && p <= kMuMax)) {
      throw ValidationError("mu schedule value " + std::to_string(p) + " outside [1, 2e6]");
    }
    if (family == CurveFamily::Gamma && !(p > 0.0 && p <= 1.0)) {
      throw ValidationError("gamma schedule value " + std::to_string(p) + " outside (0,1]");
    }
    if (i > 0 && !(p > parameters[i - 1])) {
      throw ValidationError("curve schedule must be strictly increasing");
    }
  }
}

ToneCurve CurveSchedule::curve_at(std::size_t i) const { return make_curve(family, parameters.at(i)); }

CurveSchedule default_mu_schedule() {
  constexpr int kCount = 20;
  CurveSchedule s{CurveFamily::MuLaw, {}};
  s.parameters.reserve(kCount);
  for (int i = 0; i < kCount; ++i) {
    s.parameters.push_back(kMuMin * std::pow(kMuMax / kMuMin, double(i) / double(kCount - 1)));
  }
  s.parameters.front() = kMuMin;
  s.parameters.back() = kMuMax;
  return s;
}

CurveSchedule default_gamma_schedule() {
  return {CurveFamily::Gamma, {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0}};
}

// ---------------------------------------------------------------------------
// Manifest

std::string to_jsonl(const Manifest& manifest) {
  std::string out = ojson{{"scene_id", manifest.scene_id},
                          {"hdr_path", manifest.hdr_path},
                          {"schema_version", kManifestSchemaVersion}}
                        .dump();
  out += '\n';
  for (const auto& e : manifest.entries) {
    out += ojson{{"ldr_path", e.ldr_path},
                 {"family", e.family},
                 {"parameter", e.parameter},
                 {"quant_bits", e.quant_bits},
                 {"saturation_fraction", e.saturation_fraction}}
               .dump();
    out += '\n';
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  bool have_header = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
          throw ParseError(ParseErrorKind::UnsupportedFormat, "manifest schema version");
        }
        m.scene_id = j.at("scene_id").get<std::string>();
        m.hdr_path = j.at("hdr_path").get<std::string>();
        have_header = true;
        continue;
      }
      ManifestEntry e;
      e.ldr_path = j.at("ldr_path").get<std::string>();
      e.family = j.at("family").get<std::string>();
      e.parameter = j.at("parameter").get<double>();
      e.quant_bits = j.at("quant_bits").get<int>();
      e.saturation_fraction = j.at("saturation_fraction").get<double>();
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(ParseErrorKind::MalformedText,
                       "manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!have_header) throw ParseError(ParseErrorKind::MalformedText, "manifest has no header line");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

Manifest synth_stack(const RadianceImage& hdr, const CurveSchedule& schedule,
                     const DegradationSpec& spec, const std::filesystem::path& out_dir,
                     const std::string& scene_id) {
  schedule.validate();
  spec.validate();
  if (max_value(hdr) > 1.0f) {
    throw DomainError("HDR input peaks at " + std::to_string(max_value(hdr)) +
                      "; normalize it to [0,1] before synthesis");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.scene_id = scene_id;
  manifest.hdr_path = scene_id + "_hdr.pfm";
  write_file_atomic(out_dir / manifest.hdr_path, write_pfm(hdr));

  const char* family = to_string(schedule.family);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto result = degrade(hdr, schedule.curve_at(i), spec);
    char name[32];
    std::snprintf(name, sizeof name, "_%s_%02zu", family, i);
    ManifestEntry entry;
    entry.ldr_path = scene_id + name + (spec.quant_bits == 8 ? ".png" : ".pfm");
    entry.family = family;
    entry.parameter = schedule.parameters[i];
    entry.quant_bits = spec.quant_bits;
    entry.saturation_fraction = result.mask.fraction();
    save_ldr(out_dir / entry.ldr_path, result.image);
    manifest.entries.push_back(std::move(entry));
  }
  write_file_atomic(out_dir / kManifestName, to_jsonl(manifest));
  return manifest;
}

ManifestCheck verify_manifest(const std::filesystem::path& manifest_path, double clip_low,
                              double clip_high) {
  const auto manifest = read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  const auto hdr = load_hdr(dir / manifest.hdr_path);
  ManifestCheck check;
  for (const auto& e : manifest.entries) {
    const DegradationSpec spec{clip_low, clip_high, e.quant_bits};
    const auto expected = degrade(hdr, make_curve(parse_family(e.family), e.parameter), spec);
    const auto stored = load_ldr(dir / e.ldr_path);
    ++check.entries_checked;
    if (stored.width() != expected.image.width() || stored.height() != expected.image.height()) {
      check.mismatches.push_back(e.ldr_path + ": dimensions differ");
      continue;
    }
    const auto& a = stored.samples();
    const auto& b = expected.image.samples();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) {
        check.mismatches.push_back(e.ldr_path + ": sample " + std::to_string(i) + " differs");
        break;
      }
    }
    if (std::abs(expected.mask.fraction() - e.saturation_fraction) > 1e-12) {
      check.mismatches.push_back(e.ldr_path + ": saturation fraction differs");
    }
  }
  return check;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

const char* to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::Ramp: return "ramp";
    case SceneKind::Radial: return "radial";
    case SceneKind::CheckerHdr: return "checker-hdr";
  }
  return "?";
}

SceneKind parse_scene_kind(std::string_view name) {
  if (name == "ramp") return SceneKind::Ramp;
  if (name == "radial") return SceneKind::Radial;
  if (name == "checker-hdr") return SceneKind::CheckerHdr;
  throw ValidationError("unknown scene kind '" + std::string(name) +
                        "' (use ramp, radial or checker-hdr)");
}

RadianceImage make_synthetic_scene(SceneKind kind, int width, int height, double dynamic_range) {
  const auto n = checked_sample_count(width, height);
  if (!std::isfinite(dynamic_range) || dynamic_range < 1.0) {
    throw ValidationError("dynamic range must be finite and >= 1");
  }
  SampleArray<float> data(n);
  auto put = [&](int x, int y, double v) {
    for (int c = 0; c < kChannels; ++c) {
      data[(Eigen::Index(y) * width + x) * kChannels + c] = static_cast<float>(v);
    }
  };
  // t in [0,1] maps to 1 at t=0 and 1/dynamic_range at t=1.
  auto falloff = [dynamic_range](double t) { return std::pow(dynamic_range, -t); };

  switch (kind) {
    case SceneKind::Ramp:
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          put(x, y, width == 1 ? 1.0 : falloff(1.0 - double(x) / double(width - 1)));
        }
      }
      break;
    case SceneKind::Radial: {
      const double cx = 0.5 * (width - 1);
      const double cy = 0.5 * (height - 1);
      // Closest pixel centers sit half a pixel off-center on even dimensions.
      const double mx = width % 2 ? 0.0 : 0.5;
      const double my = height % 2 ? 0.0 : 0.5;
      const double rmin = std::sqrt(mx * mx + my * my);
      const double rmax = std::sqrt(cx * cx + cy * cy);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double dx = x - cx;
          const double dy = y - cy;
          const double r = std::sqrt(dx * dx + dy * dy);
          put(x, y, rmax > rmin ? falloff((r - rmin) / (rmax - rmin)) : 1.0);
        }
      }
      break;
    }
    case SceneKind::CheckerHdr: {
      const int tile = std::max(1, std::min(width, height) / 8);
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const bool bright = ((x / tile) + (y / tile)) % 2 == 0;
          put(x, y, bright ? 1.0 : 1.0 / dynamic_range);
        }
      }
      break;
    }
  }
  return RadianceImage(width, height, std::move(data));
}

RadianceImage add_lognormal_noise(const RadianceImage& img, double sigma, std::uint64_t seed) {
  if (!std::isfinite(sigma) || sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleArray<float> out = img.samples();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(double(out[i]) * std::exp(sigma * normal(rng)));
  }
  return RadianceImage(img.width(), img.height(), std::move(out));
}

}  // namespace hdrpoly
