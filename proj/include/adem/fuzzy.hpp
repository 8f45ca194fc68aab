#pragma once

#include "adem/features.hpp"

namespace adem {

/// Trapezoidal membership function. Degree is 0 left of a, rises linearly to 1
/// at b, stays 1 up to c and falls to 0 at d. Triangles use b == c; shoulders
/// use a == b or c == d (the plateau then extends to that edge).
struct MembershipFn {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  static MembershipFn trapezoid(double a, double b, double c, double d);
  void validate() const;
  double operator()(double x) const noexcept;

  friend bool operator==(const MembershipFn&, const MembershipFn&) = default;
};

double membership(const MembershipFn& fn, double x);

/// Area and centroid abscissa of min(height, fn(x)).
struct ClippedSet {
  double area = 0.0;
  double centroid = 0.0;
};

/// Exact piecewise-linear integration of a trapezoid clipped at height in [0, 1].
ClippedSet clip_set(const MembershipFn& fn, double height);

struct FuzzySystem {
  MembershipFn sigma_small;
  MembershipFn sigma_great;
  MembershipFn ncn_small;
  MembershipFn ncn_moderate;
  MembershipFn ncn_great;
  MembershipFn p_small;
  MembershipFn p_great;
  double sigma_max = 128.0;  // inputs are clamped to [0, sigma_max] and [0, ncn_max]
  double ncn_max = 8.0;
  int defuzz_resolution = 1'000'000;  // sample count for the numerical reference only

  /// Default breakpoints around sigma_break; the NCN sets are laid out for a
  /// 3x3 window and stretched to (2r+1)^2 - 1 neighbors for larger radii.
  static FuzzySystem make_default(double sigma_break = 40.0, int window_radius = 1);

  /// Breakpoint ordering plus coverage of each variable's domain.
  void validate() const;

  friend bool operator==(const FuzzySystem&, const FuzzySystem&) = default;
};

/// Fired strengths of the two output sets.
struct RuleStrengths {
  double p_small = 0.0;
  double p_great = 0.0;
};

// Rule base evaluated with AND = min, OR = max:
//   p small <- (sigma great AND ncn great) OR (sigma great AND ncn moderate)
//   p great <- sigma small OR (sigma great AND ncn small)
// A flat neighborhood or an isolated outlier leans on the local mean (p high);
// a contour pixel or a neighbor of an outlier leans on its own gray level (p low).
RuleStrengths infer_strengths(const FuzzySystem& fs, double sigma, double ncn);

struct WeightResult {
  double p = 0.5;
  double d_p_small = 0.0;
  double d_p_great = 0.0;
  bool fallback = false;  // no rule fired; p set to 0.5
};

/// p = (S1*X1 + S2*X2) / (S1 + S2) over the two output sets clipped at their strengths.
WeightResult defuzzify_centroid(const FuzzySystem& fs, double d_p_small, double d_p_great);

WeightResult evaluate_weight(const FuzzySystem& fs, double sigma, double ncn);

/// Computes p for every pixel from fm.sigma and fm.ncn, stores it in fm.p and returns it.
const RealGrid& fill_weight_map(FeatureMaps& fm, const FuzzySystem& fs);

}  // namespace adem
