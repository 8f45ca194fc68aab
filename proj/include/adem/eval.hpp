#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adem/image.hpp"
#include "adem/segment.hpp"

namespace adem {

enum class PhantomLayout {
  bands,            // K horizontal bands of equal height
  disks,            // K-1 disks on a background of class 0
  fine_structures,  // branching strokes 1-2 px wide over horizontal background bands
};

PhantomLayout parse_layout(std::string_view name);
std::string_view layout_name(PhantomLayout layout);

struct Phantom {
  GrayImage image;
  LabelMap truth;
  std::vector<std::uint8_t> class_levels;  // gray level of truth label i
};

/// Noiseless ground-truthed test image. Every class covers at least 5% of the
/// pixels; layouts that cannot meet that at the requested size throw.
Phantom make_phantom(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& class_levels,
                     PhantomLayout layout, std::uint64_t seed);

enum class NoiseKind {
  additive_gaussian,  // amount = standard deviation as a fraction of 255
  impulse,            // amount = fraction of pixels replaced by uniform values
};

NoiseKind parse_noise_kind(std::string_view name);
std::string_view noise_kind_name(NoiseKind kind);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::impulse;
  double amount = 0.05;
  std::uint64_t seed = 0;
};

GrayImage add_noise(const GrayImage& img, const NoiseSpec& spec);

/// 1 where the (2r+1)^2 truth neighborhood (shrunk at borders) holds more than one label.
MaskGrid contour_mask(const LabelMap& truth, int radius = 1);

struct ZoneCounts {
  std::size_t region = 0;
  std::size_t contour = 0;

  friend bool operator==(const ZoneCounts&, const ZoneCounts&) = default;
};

/// Misclassified pixels per true class, split into region and contour zones.
struct SegReport {
  std::vector<ZoneCounts> per_class;
  std::size_t region = 0;
  std::size_t contour = 0;
  std::size_t pixels = 0;

  std::size_t total() const noexcept { return region + contour; }
  double accuracy() const noexcept { return pixels ? 1.0 - static_cast<double>(total()) / pixels : 1.0; }

  friend bool operator==(const SegReport&, const SegReport&) = default;
};

SegReport score(const LabelMap& pred, const LabelMap& truth, const MaskGrid& mask);

/// Minimum-cost assignment (Hungarian method) over a square cost matrix.
/// Returns col[row].
std::vector<int> min_cost_assignment(const std::vector<std::vector<long long>>& cost);

/// Permutation of predicted labels (perm[pred] = truth label) with the most
/// agreement. Exhaustive for k <= 6, assignment solver for 7..10, rejects k > 10.
std::vector<int> best_permutation(const LabelMap& pred, const LabelMap& truth);

LabelMap align_labels(const LabelMap& pred, const LabelMap& truth);

struct MethodReport {
  SegMethod method;
  LabelMap labels;  // aligned to the truth classes
  SegReport report;
};

struct Comparison {
  GaussianMixture mixture;
  std::vector<MethodReport> rows;
};

/// Segments one image with each method (one shared EM fit) and scores against truth.
Comparison compare_methods(const GrayImage& img, const LabelMap& truth, const std::vector<SegMethod>& methods,
                           const PipelineConfig& cfg, int contour_radius = 1);

/// Noises the phantom once and compares the methods on that image.
Comparison run_comparison(const Phantom& phantom, const NoiseSpec& noise, const std::vector<SegMethod>& methods,
                          const PipelineConfig& cfg);

/// Fixed-width text table: rows class x {Region, Contour}, one column per method.
std::string comparison_table(const std::vector<std::string>& columns, const std::vector<SegReport>& reports);
std::string comparison_table(const Comparison& cmp);

}  // namespace adem
