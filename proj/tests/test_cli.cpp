#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hdrpoly/curve_math.hpp"
#include "hdrpoly/dataset.hpp"
#include "hdrpoly/io.hpp"
#include "hdrpoly/metrics.hpp"
#include "support.hpp"

using namespace hdrpoly;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out, err;

  json line() const {
    const auto end = out.find('\n');
    return json::parse(out.substr(0, end));
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI inside dir with the given argument string (shell syntax).
Run cli(const testing::TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / ".stdout";
  const auto err = dir / ".stderr";
  const std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" + HDRPOLY_CLI + "' " +
                          args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void check_bitwise(const ImageBuffer<float>& a, const ImageBuffer<float>& b) {
  REQUIRE(a.width() == b.width());
  REQUIRE(a.height() == b.height());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    CHECK(std::bit_cast<std::uint32_t>(a.samples()[i]) ==
          std::bit_cast<std::uint32_t>(b.samples()[i]));
  }
}

RadianceImage normalized(const RadianceImage& img) { return normalize_to_unit(img, max_value(img)); }

}  // namespace

TEST_CASE("degrade with gamma 1 and no quantization returns the normalized input") {
  testing::TempDir dir("cli");
  std::mt19937_64 rng(51);
  save_hdr(dir / "in.pfm", testing::random_radiance(20, 11, rng, 7.0f));
  const auto r = cli(dir, "degrade in.pfm --gamma 1.0 --bits 0 -o out.pfm");
  REQUIRE(r.code == 0);
  check_bitwise(load_ldr(dir / "out.pfm"), normalized(load_hdr(dir / "in.pfm")));
  CHECK(r.line()["saturation_fraction"] == 0.0);
  CHECK(std::filesystem::exists(dir / "out.pfm.mask.pgm"));
}

TEST_CASE("degrade rejects gamma outside (0,1] before writing anything") {
  testing::TempDir dir("cli");
  save_hdr(dir / "in.pfm", new_radiance_image(4, 4, 0.5));
  const auto r = cli(dir, "degrade in.pfm --gamma 1.5 -o out.png");
  CHECK(r.code == 1);
  CHECK(r.err.find("(0,1]") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "out.png"));
  CHECK(cli(dir, "degrade in.pfm --gamma 0.5 --mu 10 -o out.png").code == 1);
  CHECK(cli(dir, "degrade in.pfm -o out.png").code == 1);
  CHECK(cli(dir, "degrade in.pfm --gamma 0.5 --bits 16 -o out.png").code == 1);
  CHECK(cli(dir, "degrade in.pfm --gamma 0.5 --bits 5 -o out.pfm").code == 1);
}

TEST_CASE("degrade with mu-law compresses highlights exactly as the library does") {
  testing::TempDir dir("cli");
  const auto scene = make_synthetic_scene(SceneKind::Ramp, 100, 8, 1e3);
  save_hdr(dir / "ramp.pfm", scene);
  const auto r = cli(dir, "degrade ramp.pfm --mu 5000 -o ramp.png");
  REQUIRE(r.code == 0);
  const auto ldr = load_ldr(dir / "ramp.png");
  const auto expected = degrade(scene, MuLaw{5000.0}, DegradationSpec{});
  check_bitwise(ldr, expected.image);
  CHECK(read_mask_pgm(read_file(dir / "ramp.png.mask.pgm")).flags().cast<int>().sum() ==
        expected.mask.count());
  CHECK(r.line()["saturated_pixels"] == expected.mask.count());

  // Top decile of radiance occupies a narrower band after the curve.
  const float h_cut = 0.9f * max_value(scene);
  float h_lo = 1.0f, l_lo = 1.0f;
  for (Eigen::Index i = 0; i < scene.size(); ++i) {
    if (scene.samples()[i] >= h_cut) {
      h_lo = std::min(h_lo, scene.samples()[i]);
      l_lo = std::min(l_lo, ldr.samples()[i]);
    }
  }
  CHECK(1.0f - l_lo < 1.0f - h_lo);
}

TEST_CASE("degrade output matches the library for randomized inputs") {
  testing::TempDir dir("cli");
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> gam(0.2, 1.0);
  std::uniform_int_distribution<int> dim(4, 30);
  for (int trial = 0; trial < 6; ++trial) {
    const auto scene = add_lognormal_noise(
        make_synthetic_scene(SceneKind::Radial, dim(rng), dim(rng), 300.0), 0.2, std::uint64_t(trial));
    save_hdr(dir / "in.pfm", scene);
    const double g = gam(rng);
    char arg[64];
    std::snprintf(arg, sizeof arg, "%.17g", g);
    const int bits = trial % 3 == 0 ? 0 : trial % 3 == 1 ? 8 : 16;
    const std::string out = bits == 8 ? "out.png" : "out.pfm";
    const auto r = cli(dir, "degrade in.pfm --gamma " + std::string(arg) + " --bits " +
                                std::to_string(bits) + " -o " + out);
    REQUIRE(r.code == 0);
    const auto expected = degrade(normalized(scene), Gamma{g}, DegradationSpec{0.0, 1.0, bits});
    check_bitwise(load_ldr(dir / out), expected.image);
    CHECK(r.line()["saturation_fraction"].get<double>() == expected.mask.fraction());
  }
}

TEST_CASE("synth writes one stack per scene") {
  testing::TempDir dir("cli");
  std::filesystem::create_directories(dir / "scenes");
  save_hdr(dir / "scenes/a.pfm", make_synthetic_scene(SceneKind::Ramp, 16, 8, 100.0));
  save_hdr(dir / "scenes/b.hdr", make_synthetic_scene(SceneKind::CheckerHdr, 16, 16, 50.0));

  const auto g = cli(dir, "synth scenes --family gamma -o g");
  REQUIRE(g.code == 0);
  CHECK(read_manifest(dir / "g/a/manifest.jsonl").entries.size() == 8);
  CHECK(read_manifest(dir / "g/b/manifest.jsonl").entries.size() == 8);
  CHECK(verify_manifest(dir / "g/a/manifest.jsonl").ok());
  std::istringstream lines(g.out);
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(json::parse(first)["scene"] == "a");
  CHECK(json::parse(second)["scene"] == "b");
  CHECK(json::parse(second)["status"] == "ok");

  const auto m = cli(dir, "synth scenes --family mu --jobs 1", "HDRPOLY_OUT_DIR=envout");
  REQUIRE(m.code == 0);
  CHECK(read_manifest(dir / "envout/a/manifest.jsonl").entries.size() == 20);

  // Same bytes regardless of worker count.
  REQUIRE(cli(dir, "synth scenes --family mu --jobs 4 -o par").code == 0);
  for (const auto& e : read_manifest(dir / "par/b/manifest.jsonl").entries) {
    CHECK(read_file(dir / "par/b" / e.ldr_path) == read_file(dir / "envout/b" / e.ldr_path));
  }
}

TEST_CASE("synth reports empty directories and failing scenes") {
  testing::TempDir dir("cli");
  std::filesystem::create_directories(dir / "empty");
  const auto e = cli(dir, "synth empty --family mu -o out");
  CHECK(e.code == 1);
  CHECK(e.err.find("no scenes found") != std::string::npos);

  std::filesystem::create_directories(dir / "mixed");
  save_hdr(dir / "mixed/good.pfm", new_radiance_image(8, 8, 0.5));
  write_file_atomic(dir / "mixed/bad.pfm", std::string_view("PF\n8 8\n-1.0\nshort"));
  const auto r = cli(dir, "synth mixed --family gamma -o out");
  CHECK(r.code == 2);
  CHECK(r.out.find(R"("scene":"bad","status":"error")") != std::string::npos);
  CHECK(r.out.find(R"("scene":"good","status":"ok")") != std::string::npos);
  CHECK(cli(dir, "synth mixed --family srgb -o out").code == 1);
  CHECK(cli(dir, "synth nowhere --family mu -o out").code == 2);
}

TEST_CASE("fit recovers the gamma 0.5 inverse and matches the library") {
  testing::TempDir dir("cli");
  const auto scene = make_synthetic_scene(SceneKind::Ramp, 256, 64, 1e4);
  save_hdr(dir / "gt.pfm", scene);
  REQUIRE(cli(dir, "degrade gt.pfm --gamma 0.5 --bits 0 -o l.pfm").code == 0);
  const auto r = cli(dir, "fit l.pfm gt.pfm --degree 7");
  REQUIRE(r.code == 0);
  const auto j = r.line();
  CHECK(j["rms_residual"].get<double>() <= 1e-4);
  CHECK(j["monotonic"] == true);

  const auto coeffs = j["coeffs"].get<std::vector<double>>();
  REQUIRE(coeffs.size() == 8);
  const Coefficients c = Eigen::Map<const Coefficients>(coeffs.data(), 8);
  for (int i = 0; i <= 100; ++i) CHECK(std::abs(horner(c, i / 100.0) - (i / 100.0) * (i / 100.0)) <= 1e-4);

  const auto lib = derive_global_curve(load_ldr(dir / "l.pfm"), normalized(scene), 7,
                                       SaturationMask(scene));
  for (int n = 0; n < 8; ++n) CHECK(coeffs[std::size_t(n)] == lib.coeffs[n]);
  CHECK(j["rms_residual"].get<double>() == lib.rms_residual);
}

TEST_CASE("fit failure classes") {
  testing::TempDir dir("cli");
  save_hdr(dir / "a.pfm", make_synthetic_scene(SceneKind::Ramp, 16, 8, 10.0));
  save_hdr(dir / "b.pfm", make_synthetic_scene(SceneKind::Ramp, 8, 8, 10.0));
  REQUIRE(cli(dir, "degrade a.pfm --gamma 0.5 -o a.png").code == 0);
  CHECK(cli(dir, "fit a.png b.pfm").code == 1);

  const auto zero = cli(dir, "fit a.png a.pfm --degree 0");
  CHECK(zero.code == 1);
  CHECK(zero.err.find("--degree") != std::string::npos);

  save_hdr(dir / "flat.pfm", new_radiance_image(8, 8, 0.5));
  REQUIRE(cli(dir, "degrade flat.pfm --gamma 0.5 -o flat.png").code == 0);
  const auto degenerate = cli(dir, "fit flat.png flat.pfm --degree 3");
  CHECK(degenerate.code == 1);
  CHECK(degenerate.line()["degenerate"] == true);
  CHECK(degenerate.line()["coeffs"].empty());
}

TEST_CASE("fit excludes saturated pixels from the sidecar mask") {
  testing::TempDir dir("cli");
  save_hdr(dir / "gt.pfm", make_synthetic_scene(SceneKind::Ramp, 64, 4, 100.0));
  REQUIRE(cli(dir, "degrade gt.pfm --gamma 1.0 --gain 2.0 --bits 0 -o l.pfm").code == 0);
  const auto all = cli(dir, "fit l.pfm gt.pfm --degree 3").line();
  const auto kept = cli(dir, "fit l.pfm gt.pfm --degree 3 --exclude-saturated").line();
  const auto mask = read_mask_pgm(read_file(dir / "l.pfm.mask.pgm"));
  CHECK(mask.count() > 0);
  CHECK(all["sample_count"] == 64 * 4 * 3);
  CHECK(kept["sample_count"] == (64 * 4 - mask.count()) * 3);
  // Unsaturated samples obey H = L/2 exactly.
  CHECK(std::abs(kept["coeffs"][1].get<double>() - 0.5) <= 1e-6);
}

TEST_CASE("reconstruct") {
  testing::TempDir dir("cli");
  const auto scene = make_synthetic_scene(SceneKind::Radial, 64, 48, 100.0);
  save_hdr(dir / "gt.pfm", scene);
  REQUIRE(cli(dir, "degrade gt.pfm --gamma 0.5 -o l.png").code == 0);

  const auto id = cli(dir, "reconstruct l.png --coeffs 0 1 -o id.pfm");
  REQUIRE(id.code == 0);
  check_bitwise(load_hdr(dir / "id.pfm"), load_ldr(dir / "l.png"));
  CHECK(id.line()["clamped_samples"] == 0);

  REQUIRE(cli(dir, "degrade gt.pfm --gamma 0.5 --bits 0 -o c.pfm").code == 0);
  const auto fit = cli(dir, "reconstruct c.pfm --from-fit c.pfm gt.pfm -o rec.pfm");
  REQUIRE(fit.code == 0);
  const auto rec = load_hdr(dir / "rec.pfm");
  CHECK(psnr<float>(rec, normalized(scene), 1.0) >= 50.0);

  CHECK(cli(dir, "reconstruct l.png -o x.pfm").code == 1);
  CHECK(cli(dir, "reconstruct l.png --coeffs 0 1 --from-fit l.png gt.pfm -o x.pfm").code == 1);
  CHECK(cli(dir, "reconstruct l.png --coeffs 1 -o x.pfm").code == 1);
  CHECK(cli(dir, "reconstruct l.png --coeffs 0 1 -o x.png").code == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "x.pfm"));
}

TEST_CASE("eval") {
  testing::TempDir dir("cli");
  std::mt19937_64 rng(53);
  const auto gt = testing::random_radiance(16, 16, rng, 3.0f);
  save_hdr(dir / "gt.pfm", gt);

  const auto same = cli(dir, "eval gt.pfm gt.pfm");
  REQUIRE(same.code == 0);
  const auto j = same.line();
  CHECK(j["psnr"] == 99.0);
  CHECK(j["mu_psnr"] == 99.0);
  CHECK(j["ssim"] == 1.0);
  CHECK(j["mu_ssim"] == 1.0);
  CHECK(j["avg_psnr"] == 99.0);
  CHECK(j["pair_id"] == "gt:gt");

  save_hdr(dir / "a.pfm", new_radiance_image(16, 16, 0.5));
  save_hdr(dir / "b.pfm", new_radiance_image(16, 16, 0.6));
  const auto fixture = cli(dir, "eval b.pfm a.pfm --peak 1 --pair-id fixture").line();
  CHECK(std::abs(fixture["psnr"].get<double>() - 20.0) <= 1e-5);
  CHECK(fixture["pair_id"] == "fixture");
  CHECK(fixture["avg_psnr"].get<double>() ==
        doctest::Approx(0.7 * fixture["psnr"].get<double>() + 0.3 * fixture["mu_psnr"].get<double>())
            .epsilon(1e-12));

  const auto est = testing::random_radiance(16, 16, rng, 3.0f);
  save_hdr(dir / "est.pfm", est);
  const auto r = cli(dir, "eval est.pfm gt.pfm --mu 100 --pair-id p");
  REQUIRE(r.code == 0);
  CHECK(r.out == to_json_line(evaluate(est, gt, PeakPolicy::ground_truth_max(), 100.0), "p") + "\n");

  CHECK(cli(dir, "eval est.pfm gt.pfm --peak bright").code == 1);
  CHECK(cli(dir, "eval est.pfm a.pfm --peak -2").code == 1);
}

TEST_CASE("curve export") {
  testing::TempDir dir("cli");
  REQUIRE(cli(dir, "curve --coeffs 0 1 --samples 3 -o id.csv").code == 0);
  CHECK(slurp(dir / "id.csv") == "x,y\n0,0\n0.5,0.5\n1,1\n");
  CHECK(cli(dir, "curve --coeffs 0 1 --samples 3").out == "x,y\n0,0\n0.5,0.5\n1,1\n");

  CHECK(cli(dir, "curve --gamma 0.5 --samples 1").code == 1);
  CHECK(cli(dir, "curve --samples 5").code == 1);
  CHECK(cli(dir, "curve --gamma 0.5 --coeffs 0 1").code == 1);
  CHECK(cli(dir, "curve --coeffs 0 1 --inverse").code == 1);

  const auto mu = parse_curve_csv(cli(dir, "curve --mu 5000 --samples 11").out);
  const auto lib = sample_curve(MuLaw{5000.0}, 11);
  CHECK((mu - lib).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("fitted and analytic inverse curves agree within 1e-3") {
  testing::TempDir dir("cli");
  save_hdr(dir / "gt.pfm", make_synthetic_scene(SceneKind::Ramp, 256, 32, 1e4));
  REQUIRE(cli(dir, "degrade gt.pfm --gamma 0.5 --bits 0 -o l.pfm").code == 0);
  REQUIRE(cli(dir, "fit l.pfm gt.pfm --samples 1001 --csv fit.csv").code == 0);
  REQUIRE(cli(dir, "curve --gamma 0.5 --inverse --samples 1001 -o ref.csv").code == 0);
  const auto fit = read_curve_csv(dir / "fit.csv");
  const auto ref = read_curve_csv(dir / "ref.csv");
  REQUIRE(fit.rows() == 1001);
  CHECK((fit.col(0) - ref.col(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((fit.col(1) - ref.col(1)).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("scene") {
  testing::TempDir dir("cli");
  REQUIRE(cli(dir, "scene --kind checker-hdr -W 32 -H 16 --dr 100 -o c.pfm").code == 0);
  check_bitwise(load_hdr(dir / "c.pfm"), make_synthetic_scene(SceneKind::CheckerHdr, 32, 16, 100.0));
  REQUIRE(cli(dir, "scene --kind ramp -W 8 -H 8 --noise 0.1 --seed 7 -o n.pfm").code == 0);
  check_bitwise(load_hdr(dir / "n.pfm"),
                add_lognormal_noise(make_synthetic_scene(SceneKind::Ramp, 8, 8, 1e4), 0.1, 7));
  CHECK(cli(dir, "scene --kind stripes -o s.pfm").code == 1);
  CHECK(cli(dir, "scene --dr 0.5 -o s.pfm").code == 1);
}

TEST_CASE("exit codes by failure class") {
  testing::TempDir dir("cli");
  CHECK(cli(dir, "--help").code == 0);
  CHECK(cli(dir, "degrade --help").code == 0);
  CHECK(cli(dir, "").code == 1);
  CHECK(cli(dir, "frobnicate").code == 1);
  CHECK(cli(dir, "degrade --gamma 0.5 -o x.png").code == 1);

  const auto missing = cli(dir, "degrade missing.pfm --gamma 0.5 -o x.png");
  CHECK(missing.code == 2);
  CHECK_FALSE(missing.err.empty());

  write_file_atomic(dir / "corrupt.pfm", std::string_view("PF\n4 4\n-1.0\n\x01\x02"));
  CHECK(cli(dir, "eval corrupt.pfm corrupt.pfm").code == 2);
  write_file_atomic(dir / "text.hdr", std::string_view("hello"));
  CHECK(cli(dir, "eval text.hdr text.hdr").code == 2);

  save_hdr(dir / "bright.pfm", new_radiance_image(4, 4, 2.0));
  CHECK(cli(dir, "degrade bright.pfm --gamma 0.5 --peak 1 -o x.png").code == 1);
  CHECK(cli(dir, "degrade bright.pfm --gamma 0.5 -o no/such/dir/x.png").code == 2);
}
