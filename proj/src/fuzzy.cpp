#include "adem/fuzzy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

namespace adem {

MembershipFn MembershipFn::trapezoid(double a, double b, double c, double d) {
  MembershipFn fn{a, b, c, d};
  fn.validate();
  return fn;
}

void MembershipFn::validate() const {
  if (!(std::isfinite(a) && std::isfinite(d) && a <= b && b <= c && c <= d)) {
    throw std::invalid_argument("membership breakpoints must satisfy a <= b <= c <= d");
  }
}

double MembershipFn::operator()(double x) const noexcept {
  if (x >= b && x <= c) return 1.0;
  if (x <= a || x >= d) return 0.0;
  if (x < b) return (x - a) / (b - a);
  return (d - x) / (d - c);
}

double membership(const MembershipFn& fn, double x) { return fn(x); }

ClippedSet clip_set(const MembershipFn& fn, double height) {
  const double h = std::clamp(height, 0.0, 1.0);
  if (h <= 0.0 || fn.d <= fn.a) return {0.0, 0.5 * (fn.a + fn.d)};
  const std::array<double, 4> xs{fn.a, fn.a + h * (fn.b - fn.a), fn.d - h * (fn.d - fn.c), fn.d};
  const std::array<double, 4> ys{0.0, h, h, 0.0};
  double area = 0.0;
  double moment = 0.0;
  for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
    const double dx = xs[s + 1] - xs[s];
    area += 0.5 * (ys[s] + ys[s + 1]) * dx;
    moment += dx * (xs[s] * (2.0 * ys[s] + ys[s + 1]) + xs[s + 1] * (ys[s] + 2.0 * ys[s + 1])) / 6.0;
  }
  if (area <= 0.0) return {0.0, 0.5 * (fn.a + fn.d)};
  return {area, moment / area};
}

namespace {

bool covers(const MembershipFn& f, const MembershipFn& g, double x) { return f(x) > 0.0 || g(x) > 0.0; }

bool covers(const MembershipFn& f, const MembershipFn& g, const MembershipFn& h, double x) {
  return f(x) > 0.0 || g(x) > 0.0 || h(x) > 0.0;
}

// Checks every breakpoint plus a dense grid; the functions are piecewise linear,
// so a gap in coverage must open at or between breakpoints.
template <typename Covered>
void require_coverage(double lo, double hi, std::initializer_list<MembershipFn> fns, Covered covered,
                      const char* name) {
  std::vector<double> probes;
  constexpr int kGrid = 4096;
  for (int i = 0; i <= kGrid; ++i) probes.push_back(lo + (hi - lo) * i / kGrid);
  for (const auto& f : fns) {
    for (double x : {f.a, f.b, f.c, f.d}) {
      if (x >= lo && x <= hi) probes.push_back(x);
    }
  }
  for (double x : probes) {
    if (!covered(x)) {
      throw std::invalid_argument(std::string(name) + " membership functions leave " + std::to_string(x) +
                                  " uncovered");
    }
  }
}

}  // namespace

FuzzySystem FuzzySystem::make_default(double sigma_break, int window_radius) {
  if (!(sigma_break > 0.0)) throw std::invalid_argument("sigma_break must be > 0");
  if (window_radius < 1) throw std::invalid_argument("window radius must be >= 1");
  const double side = 2.0 * window_radius + 1.0;
  const double neighbors = side * side - 1.0;
  const double s = neighbors / 8.0;
  FuzzySystem fs;
  fs.sigma_max = std::max(128.0, sigma_break);
  fs.ncn_max = neighbors;
  fs.sigma_small = MembershipFn::trapezoid(0.0, 0.0, 0.5 * sigma_break, sigma_break);
  fs.sigma_great = MembershipFn::trapezoid(0.5 * sigma_break, sigma_break, fs.sigma_max, fs.sigma_max);
  fs.ncn_small = MembershipFn::trapezoid(0.0, 0.0, 1.0 * s, 3.0 * s);
  fs.ncn_moderate = MembershipFn::trapezoid(1.0 * s, 3.0 * s, 5.0 * s, 7.0 * s);
  fs.ncn_great = MembershipFn::trapezoid(5.0 * s, 7.0 * s, 8.0 * s, 8.0 * s);
  fs.p_small = MembershipFn::trapezoid(0.0, 0.0, 0.02, 0.05);
  fs.p_great = MembershipFn::trapezoid(0.95, 0.98, 1.0, 1.0);
  return fs;
}

void FuzzySystem::validate() const {
  for (const auto* fn : {&sigma_small, &sigma_great, &ncn_small, &ncn_moderate, &ncn_great, &p_small, &p_great}) {
    fn->validate();
  }
  if (!(sigma_max > 0.0) || !(ncn_max > 0.0)) throw std::invalid_argument("fuzzy input domains must be positive");
  if (p_small.a < 0.0 || p_small.d > 1.0 || p_great.a < 0.0 || p_great.d > 1.0) {
    throw std::invalid_argument("p membership functions must lie within [0, 1]");
  }
  if (defuzz_resolution < 256) throw std::invalid_argument("defuzz_resolution must be >= 256");
  require_coverage(0.0, sigma_max, {sigma_small, sigma_great},
                   [&](double x) { return covers(sigma_small, sigma_great, x); }, "sigma");
  require_coverage(0.0, ncn_max, {ncn_small, ncn_moderate, ncn_great},
                   [&](double x) { return covers(ncn_small, ncn_moderate, ncn_great, x); }, "NCN");
  // Output sets are integrated, never fuzzified, so they need area rather than coverage.
  if (!(p_small.d > p_small.a) || !(p_great.d > p_great.a)) {
    throw std::invalid_argument("p membership functions must have non-empty support");
  }
}

RuleStrengths infer_strengths(const FuzzySystem& fs, double sigma, double ncn) {
  const double s = std::clamp(sigma, 0.0, fs.sigma_max);
  const double n = std::clamp(ncn, 0.0, fs.ncn_max);
  const double sig_small = fs.sigma_small(s);
  const double sig_great = fs.sigma_great(s);
  const double ncn_small = fs.ncn_small(n);
  const double ncn_moderate = fs.ncn_moderate(n);
  const double ncn_great = fs.ncn_great(n);
  RuleStrengths out;
  out.p_small = std::max(std::min(sig_great, ncn_great), std::min(sig_great, ncn_moderate));
  out.p_great = std::max(sig_small, std::min(sig_great, ncn_small));
  return out;
}

WeightResult defuzzify_centroid(const FuzzySystem& fs, double d_p_small, double d_p_great) {
  WeightResult out;
  out.d_p_small = d_p_small;
  out.d_p_great = d_p_great;
  const ClippedSet low = clip_set(fs.p_small, d_p_small);
  const ClippedSet high = clip_set(fs.p_great, d_p_great);
  const double area = low.area + high.area;
  if (!(area > 0.0)) {
    out.p = 0.5;
    out.fallback = true;
    return out;
  }
  out.p = std::clamp((low.area * low.centroid + high.area * high.centroid) / area, 0.0, 1.0);
  return out;
}

WeightResult evaluate_weight(const FuzzySystem& fs, double sigma, double ncn) {
  const RuleStrengths r = infer_strengths(fs, sigma, ncn);
  return defuzzify_centroid(fs, r.p_small, r.p_great);
}

const RealGrid& fill_weight_map(FeatureMaps& fm, const FuzzySystem& fs) {
  if (!fm.ncn.same_shape(fm.sigma.width(), fm.sigma.height())) {
    throw std::invalid_argument("fill_weight_map: sigma and ncn grids differ in shape");
  }
  fm.p = RealGrid(fm.sigma.width(), fm.sigma.height());
  for (std::size_t i = 0; i < fm.sigma.size(); ++i) {
    fm.p[i] = evaluate_weight(fs, fm.sigma[i], static_cast<double>(fm.ncn[i])).p;
  }
  return fm.p;
}

}  // namespace adem
