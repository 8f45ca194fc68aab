#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

#include "adem/gmm.hpp"

using namespace adem;

namespace {

std::vector<double> two_bumps(std::uint64_t seed, int per_bump = 5000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> a(50.0, 10.0), b(150.0, 10.0);
  std::vector<double> out;
  for (int i = 0; i < per_bump; ++i) out.push_back(a(rng));
  for (int i = 0; i < per_bump; ++i) out.push_back(b(rng));
  return out;
}

GaussianMixture mixture(std::vector<GaussianComponent> comps) {
  GaussianMixture m;
  m.components = std::move(comps);
  return m;
}

double pdf_ref(double x, double mu, double var) {
  return std::exp(-(x - mu) * (x - mu) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

void check_ascent(const GaussianMixture& m) {
  for (std::size_t t = 1; t < m.loglik_trace.size(); ++t) {
    CHECK(m.loglik_trace[t] >= m.loglik_trace[t - 1] - 1e-9);
  }
}

}  // namespace

TEST_CASE("gaussian pdf") {
  CHECK(gaussian_pdf(3.0, 3.0, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(gaussian_pdf(4.0, 3.0, 1.0) == doctest::Approx(std::exp(-0.5) / std::sqrt(2 * std::numbers::pi)).epsilon(1e-14));
  for (double d : {0.1, 1.0, 7.5}) CHECK(gaussian_pdf(20 + d, 20, 4) == gaussian_pdf(20 - d, 20, 4));
  CHECK_THROWS_AS(gaussian_pdf(0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_pdf(0, 0, -1), std::invalid_argument);
}

TEST_CASE("mixture density") {
  const auto one = mixture({{1.0, 5.0, 2.0}});
  CHECK(mixture_density(6.0, one) == doctest::Approx(gaussian_pdf(6.0, 5.0, 2.0)).epsilon(1e-14));
  const auto dup = mixture({{0.5, 5.0, 2.0}, {0.5, 5.0, 2.0}});
  CHECK(mixture_density(6.0, dup) == doctest::Approx(gaussian_pdf(6.0, 5.0, 2.0)).epsilon(1e-14));
  const auto two = mixture({{0.3, 0.0, 1.0}, {0.7, 10.0, 1.0}});
  CHECK(mixture_density(0.0, two) ==
        doctest::Approx(0.3 * pdf_ref(0, 0, 1) + 0.7 * pdf_ref(0, 10, 1)).epsilon(1e-14));
}

TEST_CASE("log likelihood") {
  const auto one = mixture({{1.0, 0.0, 1.0}});
  const std::vector<double> x{0.0};
  CHECK(log_likelihood(x, one) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  const std::vector<double> xx{0.0, 0.0};
  CHECK(log_likelihood(xx, one) == 2 * log_likelihood(x, one));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 255);
  std::vector<double> data(100);
  for (auto& v : data) v = u(rng);
  const auto m = mixture({{0.2, 40, 300}, {0.5, 120, 500}, {0.3, 210, 200}});
  double ref = 0;
  for (double v : data) {
    double f = 0;
    for (const auto& c : m.components) f += c.weight * pdf_ref(v, c.mean, c.variance);
    ref += std::log(f);
  }
  CHECK(log_likelihood(data, m) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("e_step fixtures") {
  const std::vector<double> x{5.0, -3.0, 100.0};
  const auto sym = mixture({{0.5, 0.0, 1.0}, {0.5, 10.0, 1.0}});
  const std::vector<double> mid{5.0};
  const auto r = e_step(mid, sym);
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  const auto single = e_step(x, mixture({{1.0, 0.0, 1.0}}));
  for (std::size_t j = 0; j < x.size(); ++j) CHECK(single(j, 0) == 1.0);

  const auto same = e_step(x, mixture({{0.3, 7.0, 9.0}, {0.7, 7.0, 9.0}}));
  for (std::size_t j = 0; j < x.size(); ++j) {
    CHECK(same(j, 0) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(same(j, 1) == doctest::Approx(0.7).epsilon(1e-14));
  }
}

TEST_CASE("e_step rows stay normalized when every density underflows") {
  const std::vector<double> far{1e6, -1e6, 255.0};
  const auto r = e_step(far, mixture({{0.5, 0.0, 1e-3}, {0.5, 1.0, 1e-3}}));
  for (std::size_t j = 0; j < far.size(); ++j) {
    const double s = r(j, 0) + r(j, 1);
    CHECK(std::abs(s - 1.0) <= 1e-12);
    CHECK(std::isfinite(r(j, 0)));
  }
  CHECK(r(0, 1) == doctest::Approx(1.0));
  CHECK(r(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("e_step and m_step match naive double loops") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0, 255);
  std::uniform_real_distribution<double> wv(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 3;
    const std::size_t n = 5 + trial;
    std::vector<double> data(n);
    for (auto& v : data) v = u(rng);
    GaussianMixture m;
    double wsum = 0;
    for (int i = 0; i < k; ++i) {
      m.components.push_back({wv(rng), u(rng), 200.0 + 2000.0 * wv(rng)});
      wsum += m.components.back().weight;
    }
    for (auto& c : m.components) c.weight /= wsum;

    const Responsibilities r = e_step(data, m);
    std::vector<std::vector<double>> ref(n, std::vector<double>(k));
    for (std::size_t j = 0; j < n; ++j) {
      double denom = 0;
      for (int i = 0; i < k; ++i) denom += m.components[i].weight * pdf_ref(data[j], m.components[i].mean, m.components[i].variance);
      double row = 0;
      for (int i = 0; i < k; ++i) {
        ref[j][i] = m.components[i].weight * pdf_ref(data[j], m.components[i].mean, m.components[i].variance) / denom;
        CHECK(r(j, i) == doctest::Approx(ref[j][i]).epsilon(1e-12));
        CHECK(r(j, i) >= 0.0);
        CHECK(r(j, i) <= 1.0);
        row += r(j, i);
      }
      CHECK(std::abs(row - 1.0) <= 1e-12);
    }

    const GaussianMixture next = m_step(data, r);
    double total_weight = 0;
    for (int i = 0; i < k; ++i) {
      double s0 = 0, s1 = 0;
      for (std::size_t j = 0; j < n; ++j) {
        s0 += ref[j][i];
        s1 += ref[j][i] * data[j];
      }
      const double mean = s1 / s0;
      double s2 = 0;
      for (std::size_t j = 0; j < n; ++j) s2 += ref[j][i] * (data[j] - mean) * (data[j] - mean);
      CHECK(next.components[i].weight == doctest::Approx(s0 / n).epsilon(1e-12));
      CHECK(next.components[i].mean == doctest::Approx(mean).epsilon(1e-12));
      CHECK(next.components[i].variance == doctest::Approx(std::max(s2 / s0, kVarianceFloor)).epsilon(1e-10));
      total_weight += next.components[i].weight;
    }
    CHECK(std::abs(total_weight - 1.0) <= 1e-12);
  }
}

TEST_CASE("m_step fixtures") {
  const std::vector<double> d{1.0, 2.0, 6.0};
  Responsibilities all(3, 2);
  for (std::size_t j = 0; j < 3; ++j) {
    all(j, 0) = 1.0;
    all(j, 1) = 0.0;
  }
  CHECK_THROWS_AS(m_step(d, all), FitError);

  Responsibilities one(3, 1);
  for (std::size_t j = 0; j < 3; ++j) one(j, 0) = 1.0;
  const auto m1 = m_step(d, one);
  CHECK(m1.components[0].weight == 1.0);
  CHECK(m1.components[0].mean == doctest::Approx(3.0));
  CHECK(m1.components[0].variance == doctest::Approx(14.0 / 3.0));

  const std::vector<double> ends{0.0, 10.0};
  Responsibilities hard(2, 2);
  hard(0, 0) = 1.0;
  hard(1, 1) = 1.0;
  const auto m2 = m_step(ends, hard);
  CHECK(m2.components[0].mean == 0.0);
  CHECK(m2.components[1].mean == 10.0);
  CHECK(m2.components[0].weight == 0.5);
  CHECK(m2.components[0].variance == kVarianceFloor);
  CHECK(m2.components[1].variance == kVarianceFloor);

  Responsibilities uni(3, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) uni(j, i) = 1.0 / 3.0;
  const auto m3 = m_step(d, uni);
  for (const auto& c : m3.components) CHECK(c.mean == doctest::Approx(3.0));
}

TEST_CASE("fit_em recovers two bumps and climbs monotonically") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto data = two_bumps(seed);
    EmConfig cfg;
    cfg.k = 2;
    cfg.seed = seed;
    const GaussianMixture m = fit_em(data, cfg);
    REQUIRE(m.k() == 2);
    CHECK(std::abs(m.components[0].mean - 50.0) <= 2.0);
    CHECK(std::abs(m.components[1].mean - 150.0) <= 2.0);
    CHECK(std::abs(m.components[0].weight - 0.5) <= 0.05);
    CHECK(m.converged);
    check_ascent(m);
    CHECK(m.components[0].mean < m.components[1].mean);
  }
}

TEST_CASE("fit_em closed form for K = 1") {
  const std::vector<double> d{1.0, 4.0, 4.0, 9.0, 12.0};
  EmConfig cfg;
  cfg.k = 1;
  const auto m = fit_em(d, cfg);
  CHECK(m.components[0].weight == doctest::Approx(1.0));
  CHECK(m.components[0].mean == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(m.components[0].variance == doctest::Approx((25 + 4 + 4 + 9 + 36) / 5.0).epsilon(1e-12));
  CHECK(m.iterations <= 2);
  CHECK(m.converged);
}

TEST_CASE("fit_em on repeated distinct values puts the means on them") {
  std::vector<double> d;
  for (int r = 0; r < 40; ++r)
    for (double v : {20.0, 90.0, 200.0}) d.push_back(v);
  EmConfig cfg;
  cfg.k = 3;
  const auto m = fit_em(d, cfg);
  CHECK(std::abs(m.components[0].mean - 20.0) <= 1e-6);
  CHECK(std::abs(m.components[1].mean - 90.0) <= 1e-6);
  CHECK(std::abs(m.components[2].mean - 200.0) <= 1e-6);
  for (const auto& c : m.components) CHECK(c.variance == doctest::Approx(kVarianceFloor));
}

TEST_CASE("fit_em errors and determinism") {
  EmConfig cfg;
  cfg.k = 3;
  const std::vector<double> two{1.0, 1.0, 2.0, 2.0};
  CHECK_THROWS_AS(fit_em(two, cfg), FitError);
  CHECK_THROWS_AS(fit_em(std::vector<double>{}, cfg), FitError);

  const auto data = two_bumps(9, 500);
  cfg.k = 2;
  cfg.seed = 77;
  CHECK(fit_em(data, cfg) == fit_em(data, cfg));

  cfg.max_iter = 1;
  cfg.epsilon = 0.0;
  const auto capped = fit_em(data, cfg);
  CHECK_FALSE(capped.converged);
  CHECK(capped.iterations == 1);
}

TEST_CASE("identity-variance init still fits") {
  const auto data = two_bumps(4, 1000);
  EmConfig cfg;
  cfg.k = 2;
  cfg.init = InitMode::identity_variance;
  const auto m = fit_em(data, cfg);
  CHECK(std::abs(m.components[0].mean - 50.0) <= 2.0);
  CHECK(std::abs(m.components[1].mean - 150.0) <= 2.0);
  check_ascent(m);
}

TEST_CASE("histogram EM matches per-pixel EM") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> a(60, 15), b(170, 20);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::uint8_t> px(60 * 50);
    for (auto& p : px) {
      const double v = (rng() % 3 == 0) ? a(rng) : b(rng);
      p = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    const GrayImage img(60, 50, px);
    std::vector<double> values(px.begin(), px.end());
    EmConfig cfg;
    cfg.k = 2;
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.epsilon = 0.0;
    cfg.max_iter = 6;
    const auto h = fit_em_histogram(gray_histogram(img), cfg);
    const auto p = fit_em(values, cfg);
    REQUIRE(h.iterations == 6);
    REQUIRE(p.iterations == 6);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(h.components[i].weight - p.components[i].weight) <= 1e-9);
      CHECK(std::abs(h.components[i].mean - p.components[i].mean) <= 1e-9);
      CHECK(std::abs(h.components[i].variance - p.components[i].variance) <= 1e-9 * p.components[i].variance);
    }
    CHECK(std::abs(h.loglik() - p.loglik()) <= 1e-9 * std::abs(p.loglik()));
  }
}

TEST_CASE("weighted EM equals EM on the expanded data") {
  const std::vector<double> values{10, 20, 30, 150, 160, 170};
  const std::vector<double> weights{3, 5, 2, 4, 1, 6};
  std::vector<double> expanded;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (int r = 0; r < weights[i]; ++r) expanded.push_back(values[i]);
  EmConfig cfg;
  cfg.k = 2;
  const auto w = fit_em_weighted(values, weights, cfg);
  const auto e = fit_em(expanded, cfg);
  for (int i = 0; i < 2; ++i) {
    CHECK(w.components[i].mean == doctest::Approx(e.components[i].mean).epsilon(1e-12));
    CHECK(w.components[i].variance == doctest::Approx(e.components[i].variance).epsilon(1e-12));
  }
}

TEST_CASE("weights stay normalized with a lone outlier") {
  std::vector<double> d(200, 100.0);
  for (int i = 0; i < 200; ++i) d[i] += (i % 7) * 0.5;
  d.push_back(250.0);
  EmConfig cfg;
  cfg.k = 3;
  const auto m = fit_em(d, cfg);
  double s = 0;
  for (const auto& c : m.components) s += c.weight;
  CHECK(std::abs(s - 1.0) <= 1e-9);
  check_ascent(m);
}

TEST_CASE("bic") {
  CHECK(bic_from_loglik(-100.0, 2, 100.0) == doctest::Approx(200.0 + 5 * std::log(100.0)).epsilon(1e-14));
  CHECK(bic_from_loglik(-100.0, 2, 100.0) == doctest::Approx(223.0258509299404).epsilon(1e-12));
  CHECK(bic_from_loglik(-7.0, 1, 50.0) == doctest::Approx(14.0 + 2 * std::log(50.0)).epsilon(1e-14));
  CHECK(free_parameters(3) == 8);
  const std::vector<double> d{1, 2, 3, 4};
  const auto m = mixture({{1.0, 2.5, 1.25}});
  CHECK(bic(d, m) == doctest::Approx(-2 * log_likelihood(d, m) + 2 * std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("select_k") {
  EmConfig tmpl;
  const auto data = two_bumps(0);
  const auto sel = select_k(data, 4, tmpl);
  CHECK(sel.best_k == 2);
  CHECK(sel.fits.size() == 4);
  CHECK(sel.bic.size() == 4);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(100, 12);
  std::vector<double> uni(5000);
  for (auto& v : uni) v = g(rng);
  CHECK(select_k(uni, 4, tmpl).best_k == 1);
  CHECK(select_k(uni, 1, tmpl).best_k == 1);

  // K = 3 is impossible on two distinct values: skipped and recorded.
  std::vector<double> binary;
  for (int i = 0; i < 50; ++i) binary.push_back(i % 2 ? 10.0 : 200.0);
  const auto s2 = select_k(binary, 3, tmpl);
  CHECK(s2.best_k == 2);
  CHECK_FALSE(s2.fits[2].has_value());
  CHECK(std::isnan(s2.bic[2]));
  CHECK(s2.failures.size() == 1);
}
