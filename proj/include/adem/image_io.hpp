#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adem/image.hpp"

namespace adem {

using Bytes = std::vector<std::uint8_t>;

/// Malformed PGM or label file. offset() is the byte position where parsing stopped.
class PgmError : public DataError {
 public:
  PgmError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses binary ("P5") or ASCII ("P2") PGM with maxval <= 255. Pixel values are
/// returned as stored; no rescaling to 255 is applied.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);

/// Canonical binary PGM: "P5\n<w> <h>\n255\n" followed by row-major pixels.
Bytes write_pgm(const GrayImage& img);

/// Label i -> round(255 * i / (k - 1)); k == 1 maps everything to 0.
GrayImage label_map_to_image(const LabelMap& lm);

/// Inverse of label_map_to_image. Throws DataError on a gray level that no label maps to.
LabelMap image_to_label_map(const GrayImage& img, int k);

// Raw label file: a PGM-style header whose maxval is k - 1, followed by one byte
// per pixel holding the label index.
//   "P5\n<w> <h>\n<k-1>\n" + labels
Bytes write_label_map(const LabelMap& lm);
LabelMap read_label_map(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace adem
