#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adem/features.hpp"
#include "adem/fuzzy.hpp"
#include "adem/gmm.hpp"

namespace adem {

/// Class centers in the two attribute spaces: own gray level and local mean.
struct ClassCenters {
  std::vector<double> gray;
  std::vector<double> spatial;

  int k() const noexcept { return static_cast<int>(gray.size()); }
};

enum class SegMethod { em_map, dem, adem };

std::string_view method_name(SegMethod m);
SegMethod parse_method(std::string_view name);

enum class SpatialCenterMode {
  gray_mean,      // spatial center = component mean
  weighted_mean,  // responsibility-weighted average of the local-mean feature
};

/// Both centers set to the component means. Expects canonical (ascending) order.
ClassCenters centers_from_mixture(const GaussianMixture& m);

/// Gray centers from the mixture; spatial centers re-estimated as the
/// responsibility-weighted mean of the local-mean map.
ClassCenters centers_reestimated(const GaussianMixture& m, const GrayImage& img, const RealGrid& mean_map);

/// MAP label: argmax of the posterior, ties to the lower index.
LabelMap classify_em_map(const GrayImage& img, const GaussianMixture& m);

/// Nearest gray center on the pixel's own level.
LabelMap classify_nearest_gray(const GrayImage& img, const ClassCenters& c);

/// Nearest spatial center on the local mean; the pixel's own level is not used.
LabelMap classify_dem(const GrayImage& img, const FeatureMaps& fm, const ClassCenters& c);

/// (1 - p)(gray - gray_center)^2 + p (spatial - spatial_center)^2, p in [0, 1].
double adaptive_distance(double gray, double spatial, double p, double gray_center, double spatial_center);

/// argmin of adaptive_distance per pixel using fm.mean and fm.p.
LabelMap classify_adem(const GrayImage& img, const FeatureMaps& fm, const ClassCenters& c);

struct PipelineConfig {
  SegMethod method = SegMethod::adem;
  EmConfig em;
  WindowSpec window;
  double s_threshold = kDefaultNcnThreshold;
  double sigma_break = 40.0;
  SpatialCenterMode centers = SpatialCenterMode::gray_mean;
  std::optional<FuzzySystem> fuzzy;  // replaces the default system built from sigma_break

  FuzzySystem fuzzy_system() const;
};

struct Segmentation {
  LabelMap labels;
  GaussianMixture mixture;
  FeatureMaps features;
};

/// Fits EM to the gray histogram, computes the spatial features and labels every pixel.
Segmentation segment(const GrayImage& img, const PipelineConfig& cfg);

/// Labels with an already fitted mixture and precomputed features (p filled for adem).
LabelMap classify(const GrayImage& img, SegMethod method, const GaussianMixture& m, const FeatureMaps& fm,
                  SpatialCenterMode mode = SpatialCenterMode::gray_mean);

}  // namespace adem
