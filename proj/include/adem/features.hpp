#pragma once

#include <cstdint>
#include <span>

#include "adem/image.hpp"
#include "adem/image_io.hpp"

namespace adem {

enum class BorderPolicy {
  clamp,   // out-of-bounds taps read the nearest edge pixel; population stays (2r+1)^2
  shrink,  // statistics over the in-bounds part of the window only
};

/// Square analysis window of side 2*radius + 1 centered on the pixel.
struct WindowSpec {
  int radius = 1;
  BorderPolicy border = BorderPolicy::shrink;

  int full_population() const noexcept { return (2 * radius + 1) * (2 * radius + 1); }
  void validate() const;
};

inline constexpr double kDefaultNcnThreshold = 20.0;

/// Per-pixel spatial descriptors. p is left at zero until fill_weight_map runs.
struct FeatureMaps {
  RealGrid mean;
  RealGrid sigma;
  CountGrid ncn;
  RealGrid p;
};

/// Arithmetic mean over the window, center pixel included.
RealGrid local_mean(const GrayImage& img, const WindowSpec& w);

/// Population standard deviation (divisor N) over the window, center included.
RealGrid local_std(const GrayImage& img, const WindowSpec& w);

/// Number of window neighbors, center excluded, with |neighbor - center| < s_threshold.
CountGrid ncn(const GrayImage& img, const WindowSpec& w, double s_threshold);

/// mean, sigma and ncn in one pass; p is zero-filled.
FeatureMaps compute_features(const GrayImage& img, const WindowSpec& w, double s_threshold);

// Flat grid dump, all little-endian:
//   u64 width, u64 height, then width*height f64 values in row-major order.
Bytes write_grid_f64(const RealGrid& grid);
RealGrid read_grid_f64(std::span<const std::uint8_t> bytes);
RealGrid to_real_grid(const CountGrid& grid);

/// Linear rescale of [lo, hi] onto [0, 255] for viewing. Values outside are clamped.
GrayImage grid_to_image(const RealGrid& grid, double lo, double hi);

}  // namespace adem
