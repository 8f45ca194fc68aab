#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adem {

/// Raised when input data (files, images, label maps) violates its format.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major grid of values with fixed dimensions.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), values_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<T> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != width_ * height_) {
      throw std::invalid_argument("grid: value count does not match dimensions");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<const T> values() const noexcept { return values_; }
  std::span<T> values() noexcept { return values_; }

  bool same_shape(std::size_t w, std::size_t h) const noexcept { return width_ == w && height_ == h; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> values_;
};

using RealGrid = Grid<double>;
using CountGrid = Grid<int>;
using MaskGrid = Grid<std::uint8_t>;

/// 8-bit grayscale image. Width and height are always positive.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill);

  std::size_t width() const noexcept { return grid_.width(); }
  std::size_t height() const noexcept { return grid_.height(); }
  std::size_t size() const noexcept { return grid_.size(); }

  std::uint8_t operator()(std::size_t x, std::size_t y) const { return grid_(x, y); }
  std::uint8_t& operator()(std::size_t x, std::size_t y) { return grid_(x, y); }
  std::uint8_t operator[](std::size_t i) const { return grid_[i]; }
  std::uint8_t& operator[](std::size_t i) { return grid_[i]; }

  std::span<const std::uint8_t> pixels() const noexcept { return grid_.values(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  Grid<std::uint8_t> grid_;
};

/// Per-pixel class indices in [0, k). k never exceeds 256.
class LabelMap {
 public:
  static constexpr int kMaxClasses = 256;

  LabelMap() = default;
  LabelMap(std::size_t width, std::size_t height, int k, std::vector<std::uint8_t> labels);
  LabelMap(std::size_t width, std::size_t height, int k);

  std::size_t width() const noexcept { return grid_.width(); }
  std::size_t height() const noexcept { return grid_.height(); }
  std::size_t size() const noexcept { return grid_.size(); }
  int k() const noexcept { return k_; }

  int operator()(std::size_t x, std::size_t y) const { return grid_(x, y); }
  int operator[](std::size_t i) const { return grid_[i]; }
  void set(std::size_t i, int label);
  void set(std::size_t x, std::size_t y, int label) { set(y * width() + x, label); }

  std::span<const std::uint8_t> labels() const noexcept { return grid_.values(); }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  Grid<std::uint8_t> grid_;
  int k_ = 0;
};

}  // namespace adem
