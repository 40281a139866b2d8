#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hdrpoly/forward.hpp"
#include "hdrpoly/image.hpp"

namespace hdrpoly {

enum class CurveFamily { MuLaw, Gamma };

// "mu" or "gamma", as written to manifests.
const char* to_string(CurveFamily family);
CurveFamily parse_family(std::string_view name);

inline constexpr double kMuMin = 1.0;
inline constexpr double kMuMax = 2e6;

// Ordered tone-curve parameters for one family. Mu values must lie in
// [1, 2e6], gamma values in (0,1], strictly increasing in both cases.
struct CurveSchedule {
  CurveFamily family;
  std::vector<double> parameters;

  void validate() const;
  std::size_t size() const noexcept { return parameters.size(); }
  ToneCurve curve_at(std::size_t i) const;
};

ToneCurve make_curve(CurveFamily family, double parameter);

// 20 mu values, log-spaced over [1, 2e6] with both endpoints included.
CurveSchedule default_mu_schedule();
// {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0}.
CurveSchedule default_gamma_schedule();

inline constexpr int kManifestSchemaVersion = 1;

struct ManifestEntry {
  std::string ldr_path;  // relative to the manifest's directory
  std::string family;
  double parameter = 0.0;
  int quant_bits = 0;
  double saturation_fraction = 0.0;
};

struct Manifest {
  std::string scene_id;
  std::string hdr_path;  // relative to the manifest's directory
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.jsonl";

// Header object line, then one entry object per line, fixed key order.
std::string to_jsonl(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);
Manifest read_manifest(const std::filesystem::path& path);

// Degrades an HDR image (already normalized to [0,1]) once per schedule entry.
// Writes the HDR as <scene>_hdr.pfm, each LDR as <scene>_<family>_<i>.png
// (8-bit) or .pfm (continuous or 16-bit), and manifest.jsonl last. Every file
// is written atomically.
Manifest synth_stack(const RadianceImage& hdr, const CurveSchedule& schedule,
                     const DegradationSpec& spec, const std::filesystem::path& out_dir,
                     const std::string& scene_id = "scene");

struct ManifestCheck {
  std::size_t entries_checked = 0;
  std::vector<std::string> mismatches;
  bool ok() const noexcept { return mismatches.empty(); }
};

// Re-degrades the referenced HDR for every entry and compares against the stored
// LDR sample for sample. Clip bounds are not part of the manifest; pass the
// ones used at synthesis time.
ManifestCheck verify_manifest(const std::filesystem::path& manifest_path,
                              double clip_low = 0.0, double clip_high = 1.0);

enum class SceneKind { Ramp, Radial, CheckerHdr };

const char* to_string(SceneKind kind);
SceneKind parse_scene_kind(std::string_view name);

// Deterministic procedural HDR content with peak 1 and max/min ratio equal to
// dynamic_range.
//   Ramp:       log-spaced along x from 1/dynamic_range to 1, constant along y.
//   Radial:     falls off log-linearly with distance from the image center.
//   CheckerHdr: tiles alternating between 1 and 1/dynamic_range.
RadianceImage make_synthetic_scene(SceneKind kind, int width, int height, double dynamic_range);

// Multiplies every sample by exp(sigma * n), n ~ N(0,1) from a seeded
// mt19937_64. sigma = 0 returns the input unchanged.
RadianceImage add_lognormal_noise(const RadianceImage& img, double sigma, std::uint64_t seed);

}  // namespace hdrpoly
