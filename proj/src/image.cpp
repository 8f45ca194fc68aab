#include "adem/image.hpp"

#include <algorithm>

namespace adem {

namespace {

void require_positive_dims(std::size_t width, std::size_t height, const char* what) {
  if (width == 0 || height == 0) {
    throw std::invalid_argument(std::string(what) + ": width and height must be positive");
  }
}

}  // namespace

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels) {
  require_positive_dims(width, height, "GrayImage");
  grid_ = Grid<std::uint8_t>(width, height, std::move(pixels));
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill) {
  require_positive_dims(width, height, "GrayImage");
  grid_ = Grid<std::uint8_t>(width, height, fill);
}

LabelMap::LabelMap(std::size_t width, std::size_t height, int k, std::vector<std::uint8_t> labels)
    : k_(k) {
  require_positive_dims(width, height, "LabelMap");
  if (k < 1 || k > kMaxClasses) {
    throw std::invalid_argument("LabelMap: k must lie in [1, 256]");
  }
  grid_ = Grid<std::uint8_t>(width, height, std::move(labels));
  const auto limit = static_cast<std::uint8_t>(k - 1);
  if (std::any_of(grid_.values().begin(), grid_.values().end(),
                  [limit](std::uint8_t v) { return v > limit; })) {
    throw std::invalid_argument("LabelMap: label out of range");
  }
}

LabelMap::LabelMap(std::size_t width, std::size_t height, int k)
    : LabelMap(width, height, k, std::vector<std::uint8_t>(width * height, 0)) {}

void LabelMap::set(std::size_t i, int label) {
  if (label < 0 || label >= k_) {
    throw std::invalid_argument("LabelMap: label out of range");
  }
  grid_[i] = static_cast<std::uint8_t>(label);
}

}  // namespace adem
