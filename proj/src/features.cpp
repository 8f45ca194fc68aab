#include "adem/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace adem {

void WindowSpec::validate() const {
  if (radius < 1) throw std::invalid_argument("window radius must be >= 1");
}

namespace {

// Calls fn(value, is_center) for every tap of the window centered at (cx, cy).
template <typename Fn>
void for_each_tap(const GrayImage& img, std::size_t cx, std::size_t cy, const WindowSpec& w, Fn&& fn) {
  const auto width = static_cast<std::ptrdiff_t>(img.width());
  const auto height = static_cast<std::ptrdiff_t>(img.height());
  const auto x0 = static_cast<std::ptrdiff_t>(cx);
  const auto y0 = static_cast<std::ptrdiff_t>(cy);
  for (std::ptrdiff_t dy = -w.radius; dy <= w.radius; ++dy) {
    std::ptrdiff_t y = y0 + dy;
    if (y < 0 || y >= height) {
      if (w.border == BorderPolicy::shrink) continue;
      y = std::clamp<std::ptrdiff_t>(y, 0, height - 1);
    }
    for (std::ptrdiff_t dx = -w.radius; dx <= w.radius; ++dx) {
      std::ptrdiff_t x = x0 + dx;
      if (x < 0 || x >= width) {
        if (w.border == BorderPolicy::shrink) continue;
        x = std::clamp<std::ptrdiff_t>(x, 0, width - 1);
      }
      fn(img(static_cast<std::size_t>(x), static_cast<std::size_t>(y)), dx == 0 && dy == 0);
    }
  }
}

struct WindowStats {
  double mean;
  double sigma;
};

WindowStats window_stats(const GrayImage& img, std::size_t x, std::size_t y, const WindowSpec& w) {
  long sum = 0;
  int count = 0;
  for_each_tap(img, x, y, w, [&](std::uint8_t v, bool) {
    sum += v;
    ++count;
  });
  const double mean = static_cast<double>(sum) / count;
  double ss = 0.0;
  for_each_tap(img, x, y, w, [&](std::uint8_t v, bool) {
    const double d = v - mean;
    ss += d * d;
  });
  return {mean, std::sqrt(ss / count)};
}

int window_ncn(const GrayImage& img, std::size_t x, std::size_t y, const WindowSpec& w, double s) {
  const int center = img(x, y);
  int count = 0;
  for_each_tap(img, x, y, w, [&](std::uint8_t v, bool is_center) {
    if (!is_center && std::abs(static_cast<int>(v) - center) < s) ++count;
  });
  return count;
}

void require_threshold(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("NCN threshold must be > 0");
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[at + i]) << (8 * i);
  return v;
}

}  // namespace

RealGrid local_mean(const GrayImage& img, const WindowSpec& w) {
  w.validate();
  RealGrid out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) out(x, y) = window_stats(img, x, y, w).mean;
  return out;
}

RealGrid local_std(const GrayImage& img, const WindowSpec& w) {
  w.validate();
  RealGrid out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) out(x, y) = window_stats(img, x, y, w).sigma;
  return out;
}

CountGrid ncn(const GrayImage& img, const WindowSpec& w, double s_threshold) {
  w.validate();
  require_threshold(s_threshold);
  CountGrid out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) out(x, y) = window_ncn(img, x, y, w, s_threshold);
  return out;
}

FeatureMaps compute_features(const GrayImage& img, const WindowSpec& w, double s_threshold) {
  w.validate();
  require_threshold(s_threshold);
  FeatureMaps fm{RealGrid(img.width(), img.height()), RealGrid(img.width(), img.height()),
                 CountGrid(img.width(), img.height()), RealGrid(img.width(), img.height())};
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const auto stats = window_stats(img, x, y, w);
      fm.mean(x, y) = stats.mean;
      fm.sigma(x, y) = stats.sigma;
      fm.ncn(x, y) = window_ncn(img, x, y, w, s_threshold);
    }
  }
  return fm;
}

Bytes write_grid_f64(const RealGrid& grid) {
  Bytes out;
  out.reserve(16 + 8 * grid.size());
  put_u64(out, grid.width());
  put_u64(out, grid.height());
  for (double v : grid.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

RealGrid read_grid_f64(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw DataError("grid file shorter than its 16-byte header");
  const std::uint64_t width = get_u64(bytes, 0);
  const std::uint64_t height = get_u64(bytes, 8);
  if (width == 0 || height == 0 || width > (1u << 30) || height > (1u << 30)) {
    throw DataError("grid file has invalid dimensions");
  }
  if ((bytes.size() - 16) / 8 != width * height || (bytes.size() - 16) % 8 != 0) {
    throw DataError("grid file payload does not match its dimensions");
  }
  std::vector<double> values(width * height);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::bit_cast<double>(get_u64(bytes, 16 + 8 * i));
  return RealGrid(width, height, std::move(values));
}

RealGrid to_real_grid(const CountGrid& grid) {
  RealGrid out(grid.width(), grid.height());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = grid[i];
  return out;
}

GrayImage grid_to_image(const RealGrid& grid, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("grid_to_image: hi must exceed lo");
  std::vector<std::uint8_t> pixels(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = std::clamp((grid[i] - lo) / (hi - lo), 0.0, 1.0);
    pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
  }
  return GrayImage(grid.width(), grid.height(), std::move(pixels));
}

}  // namespace adem
