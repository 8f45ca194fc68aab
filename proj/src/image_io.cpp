#include "adem/image_io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

namespace adem {

PgmError::PgmError(const std::string& what, std::size_t offset)
    : DataError(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }
bool is_digit(std::uint8_t c) { return c >= '0' && c <= '9'; }

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }
  void advance() { ++pos_; }

  // Whitespace and '#' comments (to end of line) are skipped between header tokens.
  void skip_separators() {
    while (!at_end()) {
      if (is_space(peek())) {
        advance();
      } else if (peek() == '#') {
        while (!at_end() && peek() != '\n' && peek() != '\r') advance();
      } else {
        break;
      }
    }
  }

  std::uint64_t read_uint(const char* field) {
    skip_separators();
    if (at_end()) throw PgmError(std::string("unexpected end of data reading ") + field, pos_);
    if (!is_digit(peek())) throw PgmError(std::string("expected integer for ") + field, pos_);
    std::uint64_t value = 0;
    const std::size_t start = pos_;
    while (!at_end() && is_digit(peek())) {
      value = value * 10 + (peek() - '0');
      if (value > std::numeric_limits<std::uint32_t>::max()) {
        throw PgmError(std::string("value too large for ") + field, start);
      }
      advance();
    }
    return value;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct PgmHeader {
  bool binary = true;
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint64_t maxval = 0;
};

PgmHeader parse_header(Cursor& cur, std::span<const std::uint8_t> bytes, bool allow_zero_maxval) {
  if (bytes.size() < 2) throw PgmError("file too short for magic number", 0);
  if (bytes[0] != 'P') throw PgmError("missing 'P' magic", 0);
  PgmHeader h;
  switch (bytes[1]) {
    case '5': h.binary = true; break;
    case '2': h.binary = false; break;
    case '3':
    case '6': throw PgmError("color PNM is not supported; grayscale PGM only", 1);
    default: throw PgmError("unsupported magic number", 1);
  }
  cur.advance();
  cur.advance();
  if (cur.at_end() || !(is_space(cur.peek()) || cur.peek() == '#')) {
    throw PgmError("expected whitespace after magic number", cur.pos());
  }
  const std::size_t width_pos = cur.pos();
  h.width = cur.read_uint("width");
  const std::size_t height_pos = cur.pos();
  h.height = cur.read_uint("height");
  if (h.width == 0) throw PgmError("width must be positive", width_pos);
  if (h.height == 0) throw PgmError("height must be positive", height_pos);
  cur.skip_separators();
  const std::size_t maxval_pos = cur.pos();
  h.maxval = cur.read_uint("maxval");
  if (h.maxval > 255) throw PgmError("maxval " + std::to_string(h.maxval) + " exceeds 255", maxval_pos);
  if (h.maxval == 0 && !allow_zero_maxval) throw PgmError("maxval must be positive", maxval_pos);
  return h;
}

std::vector<std::uint8_t> read_samples(Cursor& cur, std::span<const std::uint8_t> bytes, const PgmHeader& h) {
  const std::size_t count = h.width * h.height;
  std::vector<std::uint8_t> out;
  out.reserve(count);
  if (h.binary) {
    if (cur.at_end() || !is_space(cur.peek())) {
      throw PgmError("expected single whitespace byte before pixel data", cur.pos());
    }
    cur.advance();
    const std::size_t start = cur.pos();
    if (bytes.size() - start < count) {
      throw PgmError("truncated pixel data: expected " + std::to_string(count) + " bytes, found " +
                         std::to_string(bytes.size() - start),
                     bytes.size());
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint8_t v = bytes[start + i];
      if (v > h.maxval) throw PgmError("sample exceeds maxval", start + i);
      out.push_back(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      cur.skip_separators();
      if (cur.at_end()) {
        throw PgmError("truncated pixel data: expected " + std::to_string(count) + " samples, found " +
                           std::to_string(i),
                       cur.pos());
      }
      const std::size_t at = cur.pos();
      const auto v = cur.read_uint("sample");
      if (v > h.maxval) throw PgmError("sample exceeds maxval", at);
      out.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return out;
}

Bytes make_header(std::size_t width, std::size_t height, int maxval) {
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                             std::to_string(maxval) + "\n";
  return Bytes(header.begin(), header.end());
}

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  Cursor cur(bytes);
  const PgmHeader h = parse_header(cur, bytes, false);
  return GrayImage(h.width, h.height, read_samples(cur, bytes, h));
}

Bytes write_pgm(const GrayImage& img) {
  Bytes out = make_header(img.width(), img.height(), 255);
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

GrayImage label_map_to_image(const LabelMap& lm) {
  std::vector<std::uint8_t> pixels(lm.size(), 0);
  if (lm.k() >= 2) {
    const double scale = 255.0 / (lm.k() - 1);
    for (std::size_t i = 0; i < lm.size(); ++i) {
      pixels[i] = static_cast<std::uint8_t>(std::lround(scale * lm[i]));
    }
  }
  return GrayImage(lm.width(), lm.height(), std::move(pixels));
}

LabelMap image_to_label_map(const GrayImage& img, int k) {
  if (k < 1 || k > LabelMap::kMaxClasses) throw std::invalid_argument("image_to_label_map: k must lie in [1, 256]");
  std::array<int, 256> inverse;
  inverse.fill(-1);
  if (k == 1) {
    inverse[0] = 0;
  } else {
    for (int label = 0; label < k; ++label) {
      inverse[static_cast<std::size_t>(std::lround(255.0 * label / (k - 1)))] = label;
    }
  }
  std::vector<std::uint8_t> labels(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int label = inverse[img[i]];
    if (label < 0) {
      throw DataError("gray level " + std::to_string(img[i]) + " at pixel " + std::to_string(i) +
                      " is not a label level for k=" + std::to_string(k));
    }
    labels[i] = static_cast<std::uint8_t>(label);
  }
  return LabelMap(img.width(), img.height(), k, std::move(labels));
}

Bytes write_label_map(const LabelMap& lm) {
  Bytes out = make_header(lm.width(), lm.height(), lm.k() - 1);
  out.insert(out.end(), lm.labels().begin(), lm.labels().end());
  return out;
}

LabelMap read_label_map(std::span<const std::uint8_t> bytes) {
  Cursor cur(bytes);
  PgmHeader h = parse_header(cur, bytes, true);
  if (!h.binary) throw PgmError("label files must be binary (P5)", 1);
  auto labels = read_samples(cur, bytes, h);
  return LabelMap(h.width, h.height, static_cast<int>(h.maxval) + 1, std::move(labels));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace adem
