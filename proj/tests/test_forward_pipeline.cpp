#include <doctest.h>

#include <bit>
#include <cmath>

#include "hdrpoly/forward.hpp"
#include "support.hpp"

using namespace hdrpoly;

TEST_CASE("eval_curve examples") {
  CHECK(eval_curve(MuLaw{5000.0}, 0.0) == 0.0);
  for (double mu : {1.0, 7.5, 5000.0, 2e6}) CHECK(eval_curve(MuLaw{mu}, 1.0) == 1.0);
  CHECK(eval_curve(Gamma{0.5}, 0.25) == doctest::Approx(std::sqrt(0.25)).epsilon(1e-15));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double x = unit(rng);
    CHECK(eval_curve(Gamma{1.0}, x) == x);
  }
  Coefficients c(3);
  c << 0.1, 0.2, 0.3;
  CHECK(eval_curve(Polynomial{c}, 0.5) == doctest::Approx(0.1 + 0.1 + 0.075));
}

TEST_CASE("eval_curve rejects out-of-domain arguments and bad curves") {
  CHECK_THROWS_AS(eval_curve(MuLaw{10.0}, 1.5), DomainError);
  CHECK_THROWS_AS(eval_curve(Gamma{0.5}, -0.1), DomainError);
  CHECK_THROWS_AS(eval_curve(Gamma{1.5}, 0.5), ValidationError);
  CHECK_THROWS_AS(eval_curve(Gamma{0.0}, 0.5), ValidationError);
  CHECK_THROWS_AS(eval_curve(Gamma{0.5, 0.0}, 0.5), ValidationError);
  CHECK_THROWS_AS(eval_curve(MuLaw{0.0}, 0.5), ValidationError);
  CHECK_THROWS_AS(eval_curve(Polynomial{Coefficients::Ones(1)}, 0.5), ValidationError);
}

TEST_CASE("mu-law and gamma curves are strictly increasing with exact endpoints") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> log_mu(0.0, std::log(2e6));
  std::uniform_real_distribution<double> gam(0.05, 1.0);
  for (int i = 0; i < 2000; ++i) {
    double a = unit(rng), b = unit(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-9) continue;
    const ToneCurve mu = MuLaw{std::exp(log_mu(rng))};
    const ToneCurve g = Gamma{gam(rng)};
    CHECK(eval_curve(mu, a) < eval_curve(mu, b));
    CHECK(eval_curve(g, a) < eval_curve(g, b));
    CHECK(eval_curve(mu, 0.0) == 0.0);
    CHECK(eval_curve(mu, 1.0) == 1.0);
    CHECK(eval_curve(g, 0.0) == 0.0);
    CHECK(eval_curve(g, 1.0) == 1.0);
  }
}

TEST_CASE("tone_map") {
  std::mt19937_64 rng(3);
  const auto img = testing::random_radiance(8, 6, rng);
  CHECK((tone_map(Gamma{1.0}, img).samples() == img.samples()).all());

  CHECK((tone_map(MuLaw{1.0}, new_radiance_image(3, 3, 1.0)).samples() == 1.0f).all());

  // Scalar oracle with plain log instead of log1p.
  const float expected = static_cast<float>(std::log(501.0) / std::log(5001.0));
  const auto mapped = tone_map(MuLaw{5000.0}, new_radiance_image(3, 3, 0.1));
  CHECK(mapped.samples()[0] == doctest::Approx(expected).epsilon(1e-6));
  CHECK(expected == doctest::Approx(0.7299).epsilon(1e-4));
}

TEST_CASE("tone_map names the offending pixel") {
  SampleArray<float> s = SampleArray<float>::Constant(2 * 2 * 3, 0.5f);
  s[3 * 3 + 1] = 1.5f;  // pixel 3 = (x=1, y=1), channel 1
  const RadianceImage img(2, 2, s);
  try {
    (void)tone_map(Gamma{0.5}, img);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    const std::string what = e.what();
    CHECK(what.find("pixel 3") != std::string::npos);
    CHECK(what.find("x=1, y=1") != std::string::npos);
  }
}

TEST_CASE("clip") {
  std::mt19937_64 rng(4);
  const auto img = testing::random_radiance(5, 5, rng);
  const auto same = clip(img, DegradationSpec{});
  CHECK((same.image.samples() == img.samples()).all());
  CHECK(same.mask.count() == 0);

  SampleArray<float> s = SampleArray<float>::Constant(2 * 1 * 3, 0.5f);
  s[4] = 1.5f;   // pixel 1, channel 1
  s[0] = -0.2f;  // pixel 0: polynomial undershoot
  const ImageBuffer<float> raw(2, 1, s);
  const auto out = clip(raw, DegradationSpec{});
  CHECK(out.image.samples()[4] == 1.0f);
  CHECK(out.image.samples()[0] == 0.0f);
  CHECK(out.mask.at(1, 0));
  CHECK_FALSE(out.mask.at(0, 0));
}

TEST_CASE("clip rescales a custom range affinely") {
  SampleArray<float> s(3);
  s << 0.25f, 0.5f, 0.9f;
  const auto out = clip(ImageBuffer<float>(1, 1, s), DegradationSpec{0.25, 0.75, 0});
  CHECK(out.image.samples()[0] == 0.0f);
  CHECK(out.image.samples()[1] == 0.5f);
  CHECK(out.image.samples()[2] == 1.0f);
  CHECK(out.mask.at(0, 0));
}

TEST_CASE("quantize examples") {
  SampleArray<float> s(3);
  s << 0.0f, 1.0f, 0.5f;
  const DisplayImage img(1, 1, s);
  const auto q8 = quantize(img, 8);
  CHECK(q8.bit_depth() == 8);
  CHECK(q8.samples()[0] == 0.0f);
  CHECK(q8.samples()[1] == 1.0f);
  // round(127.5) = 128 when halves go away from zero.
  CHECK(q8.samples()[2] == static_cast<float>(128.0 / 255.0));
  CHECK(quantize(img, 16).samples()[1] == 1.0f);

  const float on_grid = static_cast<float>(1.0 / 255.0);
  const DisplayImage g(1, 1, SampleArray<float>::Constant(3, on_grid));
  CHECK(quantize(g, 8).samples()[0] == on_grid);

  CHECK_THROWS_AS(quantize(img, 4), ValidationError);
  CHECK_THROWS_AS(quantize(img, 0), ValidationError);
}

TEST_CASE("quantize is idempotent and within half a step") {
  std::mt19937_64 rng(6);
  for (int bits : {8, 16}) {
    const double top = std::ldexp(1.0, bits) - 1.0;
    for (int trial = 0; trial < 20; ++trial) {
      const DisplayImage img(16, 16, testing::uniform_samples(16 * 16 * 3, rng));
      const auto once = quantize(img, bits);
      const auto twice = quantize(once, bits);
      for (Eigen::Index i = 0; i < once.size(); ++i) {
        CHECK(std::bit_cast<std::uint32_t>(once.samples()[i]) ==
              std::bit_cast<std::uint32_t>(twice.samples()[i]));
        // Half a grid step, plus the float storage rounding of the grid value.
        const double err = std::abs(double(once.samples()[i]) - double(img.samples()[i]));
        CHECK(err <= 1.0 / (2.0 * top) + 6e-8);
      }
    }
  }
}

TEST_CASE("degrade") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = testing::random_radiance(9, 7, rng);
    const auto out = degrade(img, Gamma{1.0}, DegradationSpec{0.0, 1.0, 0});
    for (Eigen::Index i = 0; i < img.size(); ++i) {
      CHECK(std::bit_cast<std::uint32_t>(out.image.samples()[i]) ==
            std::bit_cast<std::uint32_t>(img.samples()[i]));
    }
    CHECK(out.mask.count() == 0);
  }

  const auto ones = new_radiance_image(4, 4, 1.0);
  for (const ToneCurve& c : {ToneCurve(MuLaw{5000.0}), ToneCurve(Gamma{0.3})}) {
    const auto out = degrade(ones, c, DegradationSpec{});
    CHECK((out.image.samples() == 1.0f).all());
    CHECK(out.mask.count() == 0);
  }

  // Compose the gamma and quantize oracles: 0.25^0.5 = 0.5, 0.5 -> 128/255.
  const auto q = degrade(new_radiance_image(4, 4, 0.25), Gamma{0.5}, DegradationSpec{});
  CHECK(q.image.bit_depth() == 8);
  CHECK((q.image.samples() == static_cast<float>(128.0 / 255.0)).all());
}

TEST_CASE("degrade flags highlights pushed past the clip by a gain") {
  SampleArray<float> s(2 * 3);
  s << 0.1f, 0.1f, 0.1f, 0.9f, 0.2f, 0.2f;
  const auto out = degrade(RadianceImage(2, 1, s), Gamma{1.0, 1.5}, DegradationSpec{});
  CHECK_FALSE(out.mask.at(0, 0));
  CHECK(out.mask.at(1, 0));
  CHECK(out.image.samples()[3] == 1.0f);
}

TEST_CASE("describe") {
  CHECK(describe(Gamma{0.5}) == "gamma=0.5");
  CHECK(describe(MuLaw{5000}) == "mu=5000");
}
