#include "commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <thread>

#include "hdrpoly/curve_math.hpp"
#include "hdrpoly/dataset.hpp"
#include "hdrpoly/error.hpp"
#include "hdrpoly/forward.hpp"
#include "hdrpoly/io.hpp"
#include "hdrpoly/metrics.hpp"

namespace hdrpoly::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void emit(const ojson& line) { std::cout << line.dump() << "\n"; }

std::vector<double> to_vector(const Coefficients& c) { return {c.begin(), c.end()}; }

std::string lower_ext(const std::string& path) {
  auto ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

void require_extension(const std::string& path, std::initializer_list<const char*> allowed,
                       const char* what) {
  const auto ext = lower_ext(path);
  for (const char* a : allowed) {
    if (ext == a) return;
  }
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  throw ValidationError(std::string(what) + " '" + path + "' must end in " + list);
}

// --gamma/--gain, --mu, or a polynomial source, exactly one of which is used.
struct CurveFlags {
  double gamma = 0.0;
  double gain = 1.0;
  double mu = 0.0;
  std::vector<double> coeffs;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* mu_opt = nullptr;
  CLI::Option* coeffs_opt = nullptr;
  std::string coeffs_flag;

  void add_to(CLI::App& app, const std::string& poly_flag) {
    coeffs_flag = poly_flag;
    gamma_opt = app.add_option("--gamma", gamma, "Gamma curve exponent in (0,1]");
    app.add_option("--gain", gain, "Gamma curve gain b")->capture_default_str();
    mu_opt = app.add_option("--mu", mu, "Mu-law curve parameter");
    coeffs_opt = app.add_option(poly_flag, coeffs, "Polynomial coefficients c0 c1 ... cN");
  }

  ToneCurve resolve() const {
    const std::size_t n = std::size_t(gamma_opt->count() > 0) + std::size_t(mu_opt->count() > 0) +
                          std::size_t(coeffs_opt->count() > 0);
    if (n != 1) {
      throw ValidationError("give exactly one curve source: --gamma, --mu or " + coeffs_flag);
    }
    ToneCurve curve;
    if (gamma_opt->count() > 0) {
      curve = Gamma{gamma, gain};
    } else if (mu_opt->count() > 0) {
      curve = MuLaw{mu};
    } else {
      curve = Polynomial{Eigen::Map<const Coefficients>(coeffs.data(), Eigen::Index(coeffs.size()))};
    }
    validate(curve);
    return curve;
  }
};

void require_positive_peak(const CLI::Option* opt, double peak) {
  if (opt->count() > 0 && !(std::isfinite(peak) && peak > 0.0)) {
    throw ValidationError("--peak must be a positive number");
  }
}

// Scales an HDR image to [0,1] by the given peak, or by its own maximum.
// All-black images are returned unchanged.
RadianceImage normalized(const RadianceImage& img, const CLI::Option* peak_opt, double peak,
                         double* used = nullptr) {
  const double p = peak_opt->count() > 0 ? peak : double(max_value(img));
  if (used) *used = p;
  if (p <= 0.0) return img;
  return normalize_to_unit(img, p);
}

std::string mask_sidecar(const std::string& image_path) { return image_path + ".mask.pgm"; }

// Explicit mask file, else the sidecar written by degrade, else any pixel
// with a channel at the clip ceiling.
SaturationMask find_mask(const DisplayImage& ldr, const std::string& ldr_path,
                         const std::string& mask_path) {
  const std::string path = mask_path.empty() ? mask_sidecar(ldr_path) : mask_path;
  if (!mask_path.empty() || fs::exists(path)) {
    auto mask = read_mask_pgm(read_file(path));
    if (!mask.matches(ldr)) throw ValidationError("mask " + path + " does not match the LDR size");
    return mask;
  }
  return SaturationMask(ldr.width(), ldr.height(), (ldr.pixels() >= 1.0f).rowwise().any());
}

struct FitFlags {
  int degree = kDefaultDegree;
  bool exclude_saturated = false;
  std::string mask;
  double peak = 0.0;
  CLI::Option* peak_opt = nullptr;

  void add_to(CLI::App& app) {
    app.add_option("--degree", degree, "Polynomial degree N >= 1")
        ->check(CLI::Range(1, 64))
        ->capture_default_str();
    app.add_flag("--exclude-saturated", exclude_saturated,
                 "Leave saturated pixels out of the fit (sidecar mask or clipped pixels)");
    app.add_option("--mask", mask, "Saturation mask PGM (implies --exclude-saturated)");
    peak_opt = app.add_option("--peak", peak, "Normalize the HDR by this peak instead of its maximum");
  }

  FitReport fit(const std::string& ldr_path, const std::string& hdr_path) const {
    require_positive_peak(peak_opt, peak);
    const auto ldr = load_ldr(ldr_path);
    const auto hdr = normalized(load_hdr(hdr_path), peak_opt, peak);
    const auto excluded = exclude_saturated || !mask.empty() ? find_mask(ldr, ldr_path, mask)
                                                             : SaturationMask(ldr);
    return derive_global_curve(ldr, hdr, degree, excluded);
  }
};

ojson fit_json(const FitReport& fit) {
  ojson j;
  j["degree"] = fit.degree();
  j["coeffs"] = to_vector(fit.coeffs);
  j["rms_residual"] = fit.rms_residual;
  j["sample_count"] = fit.sample_count;
  j["condition_estimate"] = fit.condition_estimate;
  return j;
}

FitReport fit_or_report(const FitFlags& flags, const std::string& ldr, const std::string& hdr) {
  try {
    return flags.fit(ldr, hdr);
  } catch (const DegenerateFitError& e) {
    auto j = fit_json(e.report());
    j["degree"] = flags.degree;
    j["degenerate"] = true;
    emit(j);
    throw;
  }
}

// ---------------------------------------------------------------------------

struct DegradeOptions {
  std::string input, output;
  CurveFlags curve;
  int bits = 8;
  double clip_low = 0.0, clip_high = 1.0;
  double peak = 0.0;
  CLI::Option* peak_opt = nullptr;
};

int run_degrade(const DegradeOptions& o) {
  const auto curve = o.curve.resolve();
  const DegradationSpec spec{o.clip_low, o.clip_high, o.bits};
  spec.validate();
  require_positive_peak(o.peak_opt, o.peak);
  require_extension(o.output, {".png", ".pfm"}, "LDR output");
  if (lower_ext(o.output) == ".png" && o.bits != 8) {
    throw ValidationError("PNG output needs --bits 8; use .pfm for other depths");
  }

  double peak_used = 0.0;
  const auto hdr = normalized(load_hdr(o.input), o.peak_opt, o.peak, &peak_used);
  const auto result = degrade(hdr, curve, spec);
  save_ldr(o.output, result.image);
  const auto mask_path = mask_sidecar(o.output);
  write_file_atomic(mask_path, write_mask_pgm(result.mask));

  ojson j;
  j["output"] = o.output;
  j["mask"] = mask_path;
  j["curve"] = describe(curve);
  j["quant_bits"] = o.bits;
  j["peak_used"] = peak_used;
  j["saturated_pixels"] = result.mask.count();
  j["saturation_fraction"] = result.mask.fraction();
  emit(j);
  return 0;
}

}  // namespace

Action setup_degrade(CLI::App& app) {
  auto o = std::make_shared<DegradeOptions>();
  app.add_option("hdr", o->input, "HDR input (.pfm or Radiance .hdr)")->required();
  o->curve.add_to(app, "--poly");
  app.add_option("--bits", o->bits, "Quantization bits: 0 (none), 8 or 16")->capture_default_str();
  app.add_option("--clip-low", o->clip_low, "Lower clip bound")->capture_default_str();
  app.add_option("--clip-high", o->clip_high, "Upper clip bound")->capture_default_str();
  o->peak_opt = app.add_option("--peak", o->peak, "Normalize by this peak instead of the image maximum");
  app.add_option("-o,--output", o->output, "LDR output (.png or .pfm)")->required();
  return [o] { return run_degrade(*o); };
}

// ---------------------------------------------------------------------------

namespace {

struct SynthOptions {
  std::string input_dir, output_dir, family;
  int bits = 8;
  double clip_low = 0.0, clip_high = 1.0;
  unsigned jobs = 0;
};

struct SceneResult {
  int code = 0;
  ojson line;
};

SceneResult synth_one(const fs::path& file, const fs::path& out_root, const CurveSchedule& schedule,
                      const DegradationSpec& spec) {
  const std::string id = file.stem().string();
  SceneResult r;
  r.line["scene"] = id;
  try {
    auto hdr = load_hdr(file);
    const float peak = max_value(hdr);
    if (peak > 0.0f) hdr = normalize_to_unit(hdr, peak);
    const auto dir = out_root / id;
    const auto m = synth_stack(hdr, schedule, spec, dir, id);
    r.line["status"] = "ok";
    r.line["entries"] = m.entries.size();
    r.line["manifest"] = (dir / kManifestName).string();
  } catch (const IoError& e) {
    r.code = 2;
    r.line["status"] = "error";
    r.line["error"] = e.what();
  } catch (const ParseError& e) {
    r.code = 2;
    r.line["status"] = "error";
    r.line["error"] = e.what();
  } catch (const std::exception& e) {
    r.code = 1;
    r.line["status"] = "error";
    r.line["error"] = e.what();
  }
  return r;
}

int run_synth(const SynthOptions& o) {
  const auto schedule =
      parse_family(o.family) == CurveFamily::MuLaw ? default_mu_schedule() : default_gamma_schedule();
  const DegradationSpec spec{o.clip_low, o.clip_high, o.bits};
  spec.validate();

  std::string out_dir = o.output_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("HDRPOLY_OUT_DIR");
    out_dir = env && *env ? env : "hdrpoly_out";
  }

  std::error_code ec;
  if (!fs::is_directory(o.input_dir, ec)) throw IoError(o.input_dir + " is not a directory");
  std::vector<fs::path> scenes;
  for (const auto& entry : fs::directory_iterator(o.input_dir)) {
    const auto ext = lower_ext(entry.path().string());
    if (entry.is_regular_file() && (ext == ".pfm" || ext == ".hdr" || ext == ".pic")) {
      scenes.push_back(entry.path());
    }
  }
  if (scenes.empty()) {
    std::cerr << "no scenes found in " << o.input_dir << "\n";
    return 1;
  }
  std::sort(scenes.begin(), scenes.end());

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = std::min<std::size_t>(o.jobs ? o.jobs : hw, scenes.size());
  std::vector<SceneResult> results(scenes.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < scenes.size();) {
        results[i] = synth_one(scenes[i], out_dir, schedule, spec);
      }
    });
  }
  for (auto& t : pool) t.join();

  int code = 0;
  for (const auto& r : results) {
    emit(r.line);
    if (r.code) std::cerr << "scene " << r.line["scene"].get<std::string>() << " failed\n";
    code = std::max(code, r.code);
  }
  return code;
}

}  // namespace

Action setup_synth(CLI::App& app) {
  auto o = std::make_shared<SynthOptions>();
  app.add_option("hdr_dir", o->input_dir, "Directory of HDR scenes (.pfm, .hdr)")->required();
  app.add_option("--family", o->family, "Curve family")
      ->required()
      ->check(CLI::IsMember({"mu", "gamma"}));
  app.add_option("-o,--out-dir", o->output_dir,
                 "Output root, one subdirectory per scene (default: $HDRPOLY_OUT_DIR or hdrpoly_out)");
  app.add_option("--bits", o->bits, "Quantization bits: 0, 8 or 16")->capture_default_str();
  app.add_option("--clip-low", o->clip_low, "Lower clip bound")->capture_default_str();
  app.add_option("--clip-high", o->clip_high, "Upper clip bound")->capture_default_str();
  app.add_option("-j,--jobs", o->jobs, "Worker threads (default: logical CPU count)")
      ->check(CLI::PositiveNumber);
  return [o] { return run_synth(*o); };
}

// ---------------------------------------------------------------------------

namespace {

struct FitOptions {
  std::string ldr, hdr, csv;
  FitFlags fit;
  int samples = 4096;
};

int run_fit(const FitOptions& o) {
  const auto fit = fit_or_report(o.fit, o.ldr, o.hdr);
  const auto mono = check_monotonic(fit.coeffs, o.samples);
  auto j = fit_json(fit);
  j["monotonic"] = mono.monotonic;
  j["first_violation"] = mono.first_violation ? ojson(*mono.first_violation) : ojson(nullptr);
  j["worst_step"] = mono.worst_step;
  if (!o.csv.empty()) {
    write_curve_csv(sample_curve(fit.coeffs, o.samples), o.csv);
    j["csv"] = o.csv;
  }
  emit(j);
  return 0;
}

}  // namespace

Action setup_fit(CLI::App& app) {
  auto o = std::make_shared<FitOptions>();
  app.add_option("ldr", o->ldr, "LDR image (.png or .pfm)")->required();
  app.add_option("hdr", o->hdr, "Ground-truth HDR image")->required();
  o->fit.add_to(app);
  app.add_option("--csv", o->csv, "Also write the fitted curve as CSV");
  app.add_option("--samples", o->samples, "Samples for the monotonicity check and CSV")
      ->check(CLI::Range(2, 1 << 24))
      ->capture_default_str();
  return [o] { return run_fit(*o); };
}

// ---------------------------------------------------------------------------

namespace {

struct ReconstructOptions {
  std::string ldr, output;
  std::vector<double> coeffs;
  std::vector<std::string> from_fit;
  FitFlags fit;
  CLI::Option* coeffs_opt = nullptr;
  CLI::Option* from_fit_opt = nullptr;
};

int run_reconstruct(const ReconstructOptions& o) {
  const bool have_coeffs = o.coeffs_opt->count() > 0;
  const bool have_fit = o.from_fit_opt->count() > 0;
  if (have_coeffs == have_fit) throw ValidationError("give exactly one of --coeffs or --from-fit");
  require_extension(o.output, {".pfm", ".hdr", ".pic"}, "HDR output");

  Coefficients c;
  if (have_coeffs) {
    c = Eigen::Map<const Coefficients>(o.coeffs.data(), Eigen::Index(o.coeffs.size()));
    (void)constant_maps(c, 1, 1);  // validates length and finiteness up front
  } else {
    c = fit_or_report(o.fit, o.from_fit[0], o.from_fit[1]).coeffs;
  }

  const auto ldr = load_ldr(o.ldr);
  const auto sidecar = mask_sidecar(o.ldr);
  const auto mask = fs::exists(sidecar) ? find_mask(ldr, o.ldr, sidecar) : SaturationMask(ldr);
  const auto dq = invert_degradation(ldr, mask);
  const auto rec = apply_coefficient_maps(constant_maps(c, ldr.width(), ldr.height()), dq.values);
  save_hdr(o.output, rec.image);

  ojson j;
  j["output"] = o.output;
  j["coeffs"] = to_vector(c);
  j["clamped_samples"] = rec.clamped_samples;
  j["saturated_pixels"] = dq.mask.count();
  emit(j);
  return 0;
}

}  // namespace

Action setup_reconstruct(CLI::App& app) {
  auto o = std::make_shared<ReconstructOptions>();
  app.add_option("ldr", o->ldr, "LDR image to reconstruct")->required();
  o->coeffs_opt = app.add_option("--coeffs", o->coeffs, "Polynomial coefficients c0 c1 ... cN");
  o->from_fit_opt = app.add_option("--from-fit", o->from_fit, "Fit the curve on an LDR HDR pair")
                        ->expected(2);
  o->fit.add_to(app);
  app.add_option("-o,--output", o->output, "HDR output (.pfm or .hdr)")->required();
  return [o] { return run_reconstruct(*o); };
}

// ---------------------------------------------------------------------------

namespace {

struct EvalOptions {
  std::string estimate, truth, peak = "gt", pair_id;
  double mu = kDefaultMu;
};

PeakPolicy parse_peak(const std::string& text) {
  if (text == "gt") return PeakPolicy::ground_truth_max();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v) || v <= 0.0) {
    throw ValidationError("--peak must be 'gt' or a positive number, got '" + text + "'");
  }
  return PeakPolicy::fixed(v);
}

int run_eval(const EvalOptions& o) {
  const auto policy = parse_peak(o.peak);
  if (!(std::isfinite(o.mu) && o.mu > 0.0)) throw ValidationError("--mu must be positive");
  const auto est = load_hdr(o.estimate);
  const auto gt = load_hdr(o.truth);
  const auto report = evaluate(est, gt, policy, o.mu);
  const auto id = o.pair_id.empty()
                      ? fs::path(o.estimate).stem().string() + ":" + fs::path(o.truth).stem().string()
                      : o.pair_id;
  std::cout << to_json_line(report, id) << "\n";
  return 0;
}

}  // namespace

Action setup_eval(CLI::App& app) {
  auto o = std::make_shared<EvalOptions>();
  app.add_option("estimate", o->estimate, "Reconstructed HDR image")->required();
  app.add_option("truth", o->truth, "Ground-truth HDR image")->required();
  app.add_option("--mu", o->mu, "Mu for the tone-mapped metrics")->capture_default_str();
  app.add_option("--peak", o->peak, "'gt' for the ground-truth maximum, or a number")
      ->capture_default_str();
  app.add_option("--pair-id", o->pair_id, "Identifier echoed in the report");
  return [o] { return run_eval(*o); };
}

// ---------------------------------------------------------------------------

namespace {

struct CurveOptions {
  CurveFlags curve;
  bool inverse = false;
  int samples = 256;
  std::string output;
};

int run_curve(const CurveOptions& o) {
  const auto curve = o.curve.resolve();
  if (o.inverse && std::holds_alternative<Polynomial>(curve)) {
    throw ValidationError("--inverse needs an analytic curve (--gamma or --mu)");
  }
  const auto samples = o.inverse ? sample_inverse_curve(curve, o.samples)
                                 : std::holds_alternative<Polynomial>(curve)
                                       ? sample_curve(std::get<Polynomial>(curve).coeffs, o.samples)
                                       : sample_curve(curve, o.samples);
  if (o.output.empty()) {
    std::cout << format_curve_csv(samples);
    return 0;
  }
  write_curve_csv(samples, o.output);
  ojson j;
  j["output"] = o.output;
  j["curve"] = std::holds_alternative<Polynomial>(curve) ? "polynomial" : describe(curve);
  j["inverse"] = o.inverse;
  j["samples"] = o.samples;
  emit(j);
  return 0;
}

}  // namespace

Action setup_curve(CLI::App& app) {
  auto o = std::make_shared<CurveOptions>();
  o->curve.add_to(app, "--coeffs");
  app.add_flag("--inverse", o->inverse, "Sample the analytic inverse instead");
  app.add_option("--samples", o->samples, "Number of evenly spaced points on [0,1]")
      ->check(CLI::Range(2, 1 << 24))
      ->capture_default_str();
  app.add_option("-o,--output", o->output, "CSV output (default: standard output)");
  return [o] { return run_curve(*o); };
}

// ---------------------------------------------------------------------------

namespace {

struct SceneOptions {
  std::string kind = "ramp", output;
  int width = 256, height = 256;
  double dynamic_range = 1e4, noise = 0.0;
  std::uint64_t seed = 0;
};

int run_scene(const SceneOptions& o) {
  const auto kind = parse_scene_kind(o.kind);
  require_extension(o.output, {".pfm", ".hdr", ".pic"}, "HDR output");
  auto img = make_synthetic_scene(kind, o.width, o.height, o.dynamic_range);
  img = add_lognormal_noise(img, o.noise, o.seed);
  save_hdr(o.output, img);
  ojson j;
  j["output"] = o.output;
  j["kind"] = to_string(kind);
  j["width"] = o.width;
  j["height"] = o.height;
  j["dynamic_range"] = o.dynamic_range;
  j["noise"] = o.noise;
  j["seed"] = o.seed;
  emit(j);
  return 0;
}

}  // namespace

Action setup_scene(CLI::App& app) {
  auto o = std::make_shared<SceneOptions>();
  app.add_option("--kind", o->kind, "ramp, radial or checker-hdr")->capture_default_str();
  app.add_option("-W,--width", o->width, "Width in pixels")->capture_default_str();
  app.add_option("-H,--height", o->height, "Height in pixels")->capture_default_str();
  app.add_option("--dr", o->dynamic_range, "Max/min radiance ratio")->capture_default_str();
  app.add_option("--noise", o->noise, "Log-normal noise sigma")->capture_default_str();
  app.add_option("--seed", o->seed, "Noise seed")->capture_default_str();
  app.add_option("-o,--output", o->output, "HDR output (.pfm or .hdr)")->required();
  return [o] { return run_scene(*o); };
}

}  // namespace hdrpoly::cli
