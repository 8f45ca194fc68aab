#include <cmath>
#include <random>

#include "doctest.h"

#include "adem/eval.hpp"
#include "adem/segment.hpp"

using namespace adem;

namespace {

GaussianMixture three_classes(double var = 100.0) {
  GaussianMixture m;
  m.components = {{1.0 / 3, 30, var}, {1.0 / 3, 120, var}, {1.0 / 3, 220, var}};
  return m;
}

ClassCenters centers(std::vector<double> v) { return ClassCenters{v, v}; }

GrayImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_int_distribution<int> v(0, 255);
  std::vector<std::uint8_t> px(w * h);
  for (auto& p : px) p = static_cast<std::uint8_t>(v(rng));
  return GrayImage(w, h, std::move(px));
}

FeatureMaps with_constant_p(const GrayImage& img, double p) {
  FeatureMaps fm = compute_features(img, WindowSpec{}, 20);
  for (auto& v : fm.p.values()) v = p;
  return fm;
}

std::size_t mismatches(const LabelMap& a, const LabelMap& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("em") == SegMethod::em_map);
  CHECK(parse_method("adem") == SegMethod::adem);
  CHECK(method_name(SegMethod::dem) == "dem");
  CHECK_THROWS_AS(parse_method("fcm"), std::invalid_argument);
}

TEST_CASE("centers from mixture") {
  const ClassCenters c = centers_from_mixture(three_classes());
  CHECK(c.gray == std::vector<double>{30, 120, 220});
  CHECK(c.spatial == c.gray);
  GaussianMixture one;
  one.components = {{1.0, 77, 4}};
  CHECK(centers_from_mixture(one).k() == 1);
}

TEST_CASE("adaptive distance") {
  CHECK(adaptive_distance(100, 110, 0.5, 90, 90) == 250.0);
  CHECK(adaptive_distance(100, 110, 0.0, 90, 0) == 100.0);
  CHECK(adaptive_distance(100, 110, 1.0, 0, 90) == 400.0);
  CHECK_THROWS_AS(adaptive_distance(1, 1, 1.01, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_distance(1, 1, -0.1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_distance(1, 1, std::nan(""), 0, 0), std::invalid_argument);
}

TEST_CASE("EM MAP matches the argmax of the responsibilities") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const GrayImage img = random_image(rng, 16, 16);
    GaussianMixture m;
    m.components = {{0.2, 40.0 + trial, 300}, {0.45, 130, 900}, {0.35, 200 - trial * 2.0, 150}};
    const LabelMap lm = classify_em_map(img, m);
    std::vector<double> x(img.pixels().begin(), img.pixels().end());
    const Responsibilities r = e_step(x, m);
    for (std::size_t j = 0; j < img.size(); ++j) {
      int best = 0;
      for (int i = 1; i < 3; ++i)
        if (r(j, i) > r(j, best)) best = i;
      CHECK(lm[j] == best);
    }
  }
}

TEST_CASE("EM MAP ties go to the smaller index") {
  GaussianMixture m;
  m.components = {{0.5, 100, 25}, {0.5, 110, 25}};
  CHECK(classify_em_map(GrayImage(1, 1, std::uint8_t{105}), m)[0] == 0);
  CHECK(classify_em_map(GrayImage(1, 1, std::uint8_t{106}), m)[0] == 1);
  CHECK(classify_nearest_gray(GrayImage(1, 1, std::uint8_t{105}), centers({100, 110}))[0] == 0);
}

TEST_CASE("squared and absolute nearest-center labels agree") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 255);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage img = random_image(rng, 12, 9);
    std::vector<double> v{u(rng), u(rng), u(rng)};
    std::sort(v.begin(), v.end());
    const LabelMap lm = classify_nearest_gray(img, centers(v));
    for (std::size_t j = 0; j < img.size(); ++j) {
      int best = 0;
      for (int i = 1; i < 3; ++i)
        if (std::abs(img[j] - v[i]) < std::abs(img[j] - v[best])) best = i;
      CHECK(lm[j] == best);
    }
  }
}

TEST_CASE("ADEM reduces to nearest gray at p = 0 and to DEM at p = 1") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage img = random_image(rng, 16, 16);
    const ClassCenters c = centers({40, 128, 210});
    CHECK(classify_adem(img, with_constant_p(img, 0.0), c) == classify_nearest_gray(img, c));
    const FeatureMaps fm1 = with_constant_p(img, 1.0);
    CHECK(classify_adem(img, fm1, c) == classify_dem(img, fm1, c));
  }
}

TEST_CASE("DEM fixtures") {
  const ClassCenters c = centers({30, 120, 220});
  SUBCASE("flat region classified by its own center") {
    const GrayImage img(9, 9, std::uint8_t{120});
    const LabelMap lm = classify_dem(img, compute_features(img, WindowSpec{}, 20), c);
    for (std::size_t i = 0; i < lm.size(); ++i) CHECK(lm[i] == 1);
  }
  SUBCASE("isolated impulse is smoothed away") {
    GrayImage img(9, 9, std::uint8_t{30});
    img(4, 4) = 255;
    const FeatureMaps fm = compute_features(img, WindowSpec{}, 20);
    CHECK(fm.mean(4, 4) == doctest::Approx(55.0));
    CHECK(classify_dem(img, fm, c)(4, 4) == 0);
    CHECK(classify_nearest_gray(img, c)(4, 4) == 2);
    CHECK(classify_em_map(img, three_classes())(4, 4) == 2);
  }
  SUBCASE("thin line loses to the majority around it") {
    GrayImage img(9, 9, std::uint8_t{220});
    for (std::size_t y = 0; y < 9; ++y) img(4, y) = 30;
    const FeatureMaps fm = compute_features(img, WindowSpec{}, 20);
    CHECK(fm.mean(4, 4) == doctest::Approx((3 * 30 + 6 * 220) / 9.0));
    CHECK(classify_dem(img, fm, centers({30, 220}))(4, 4) == 1);
  }
}

TEST_CASE("ADEM fixtures keep both the impulse and the thin line") {
  const FuzzySystem fs = FuzzySystem::make_default();
  {
    GrayImage img(9, 9, std::uint8_t{30});
    img(4, 4) = 255;
    FeatureMaps fm = compute_features(img, WindowSpec{}, 20);
    fill_weight_map(fm, fs);
    CHECK(fm.p(4, 4) >= 0.9);
    CHECK(classify_adem(img, fm, centers({30, 120, 220}))(4, 4) == 0);
  }
  {
    GrayImage img(9, 9, std::uint8_t{220});
    for (std::size_t y = 0; y < 9; ++y) img(4, y) = 30;
    FeatureMaps fm = compute_features(img, WindowSpec{}, 20);
    fill_weight_map(fm, fs);
    const LabelMap lm = classify_adem(img, fm, centers({30, 220}));
    // Interior rows only: at the line ends the shrunk window holds a single close neighbor.
    for (std::size_t y = 1; y < 8; ++y) CHECK(lm(4, y) == 0);
  }
}

TEST_CASE("pipeline on a noiseless phantom makes no errors") {
  const Phantom ph = make_phantom(60, 60, {30, 120, 220}, PhantomLayout::bands, 1);
  for (SegMethod method : {SegMethod::em_map, SegMethod::dem, SegMethod::adem}) {
    PipelineConfig cfg;
    cfg.method = method;
    const Segmentation s = segment(ph.image, cfg);
    CHECK(s.labels == ph.truth);
    CHECK(s.mixture.k() == 3);
  }
}

TEST_CASE("pipeline on an impulse-noised phantom: ADEM beats EM") {
  const Phantom ph = make_phantom(90, 90, {30, 120, 220}, PhantomLayout::bands, 2);
  const GrayImage noisy = add_noise(ph.image, NoiseSpec{NoiseKind::impulse, 0.05, 2});
  PipelineConfig cfg;
  cfg.method = SegMethod::em_map;
  const LabelMap em = align_labels(segment(noisy, cfg).labels, ph.truth);
  cfg.method = SegMethod::adem;
  const LabelMap adem = align_labels(segment(noisy, cfg).labels, ph.truth);
  CHECK(mismatches(adem, ph.truth) < mismatches(em, ph.truth));
}

TEST_CASE("classification is deterministic") {
  const Phantom ph = make_phantom(40, 40, {30, 120, 220}, PhantomLayout::disks, 5);
  const GrayImage noisy = add_noise(ph.image, NoiseSpec{NoiseKind::impulse, 0.1, 5});
  PipelineConfig cfg;
  CHECK(segment(noisy, cfg).labels == segment(noisy, cfg).labels);
}

TEST_CASE("re-estimated spatial centers") {
  const Phantom ph = make_phantom(60, 60, {30, 120, 220}, PhantomLayout::bands, 0);
  const Segmentation s = segment(ph.image, PipelineConfig{});
  const ClassCenters c = centers_reestimated(s.mixture, ph.image, s.features.mean);
  REQUIRE(c.k() == 3);
  CHECK(c.gray == std::vector<double>{s.mixture.components[0].mean, s.mixture.components[1].mean,
                                      s.mixture.components[2].mean});
  for (int i = 0; i < 3; ++i) CHECK(std::abs(c.spatial[i] - c.gray[i]) < 15.0);
  CHECK(c.spatial[0] < c.spatial[1]);
  CHECK(c.spatial[1] < c.spatial[2]);
}

TEST_CASE("shape mismatches are rejected") {
  const GrayImage img(4, 4, std::uint8_t{0});
  const FeatureMaps fm = compute_features(GrayImage(5, 4, std::uint8_t{0}), WindowSpec{}, 20);
  CHECK_THROWS_AS(classify_dem(img, fm, centers({0, 1})), std::invalid_argument);
  CHECK_THROWS_AS(classify_adem(img, fm, centers({0, 1})), std::invalid_argument);
}
