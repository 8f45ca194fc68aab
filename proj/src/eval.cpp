#include "adem/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "adem/random.hpp"

namespace adem {

namespace {

constexpr double kMinClassFraction = 0.05;
constexpr int kMaxExhaustiveK = 6;
constexpr int kMaxAlignK = 10;

void paint(Grid<std::uint8_t>& labels, std::ptrdiff_t x, std::ptrdiff_t y, std::uint8_t label) {
  if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(labels.width()) ||
      y >= static_cast<std::ptrdiff_t>(labels.height())) {
    return;
  }
  labels(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = label;
}

// 8-connected Bresenham segment; width 2 adds the pixel to the right of every step.
void draw_stroke(Grid<std::uint8_t>& labels, std::ptrdiff_t x0, std::ptrdiff_t y0, std::ptrdiff_t x1,
                 std::ptrdiff_t y1, int width, std::uint8_t label) {
  const std::ptrdiff_t dx = std::abs(x1 - x0);
  const std::ptrdiff_t dy = -std::abs(y1 - y0);
  const std::ptrdiff_t sx = x0 < x1 ? 1 : -1;
  const std::ptrdiff_t sy = y0 < y1 ? 1 : -1;
  std::ptrdiff_t err = dx + dy;
  for (;;) {
    paint(labels, x0, y0, label);
    if (width > 1) paint(labels, x0 + 1, y0, label);
    if (x0 == x1 && y0 == y1) break;
    const std::ptrdiff_t e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void layout_bands(Grid<std::uint8_t>& labels, int k) {
  const std::size_t h = labels.height();
  for (std::size_t y = 0; y < h; ++y) {
    const auto label = static_cast<std::uint8_t>(std::min<std::size_t>(y * k / h, k - 1));
    for (std::size_t x = 0; x < labels.width(); ++x) labels(x, y) = label;
  }
}

void layout_disks(Grid<std::uint8_t>& labels, int k, Rng& rng) {
  const int disks = k - 1;
  const int per_row = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(disks))));
  const int rows = (disks + per_row - 1) / per_row;
  const double cell_w = static_cast<double>(labels.width()) / per_row;
  const double cell_h = static_cast<double>(labels.height()) / rows;
  const double cell = std::min(cell_w, cell_h);
  const double radius = 0.35 * cell;
  for (int d = 0; d < disks; ++d) {
    const double cx = cell_w * (d % per_row + 0.5) + (uniform01(rng) - 0.5) * 0.1 * cell;
    const double cy = cell_h * (d / per_row + 0.5) + (uniform01(rng) - 0.5) * 0.1 * cell;
    for (std::size_t y = 0; y < labels.height(); ++y) {
      for (std::size_t x = 0; x < labels.width(); ++x) {
        const double ex = static_cast<double>(x) - cx;
        const double ey = static_cast<double>(y) - cy;
        if (ex * ex + ey * ey <= radius * radius) labels(x, y) = static_cast<std::uint8_t>(d + 1);
      }
    }
  }
}

// A "tree": a 2 px trunk with alternating 1 px and 2 px branches, drawn over
// k-1 horizontal background bands.
void layout_fine_structures(Grid<std::uint8_t>& labels, int k, Rng& rng) {
  const auto w = static_cast<double>(labels.width());
  const auto h = static_cast<double>(labels.height());
  const int bands = k - 1;
  for (std::size_t y = 0; y < labels.height(); ++y) {
    const auto label = static_cast<std::uint8_t>(std::min<std::size_t>(y * bands / labels.height(), bands - 1));
    for (std::size_t x = 0; x < labels.width(); ++x) labels(x, y) = label;
  }
  const auto stroke = static_cast<std::uint8_t>(k - 1);
  const auto trunk_x = static_cast<std::ptrdiff_t>(std::lround(0.5 * w));
  const auto top = static_cast<std::ptrdiff_t>(std::lround(0.08 * h));
  const auto bottom = static_cast<std::ptrdiff_t>(std::lround(0.95 * h));
  draw_stroke(labels, trunk_x, top, trunk_x, bottom, 2, stroke);

  constexpr int kBranches = 14;
  const double reach = 0.32 * std::min(w, h);
  for (int b = 0; b < kBranches; ++b) {
    const double t = (b + 0.5) / kBranches;
    const auto y0 = static_cast<std::ptrdiff_t>(std::lround(top + t * (bottom - top) * 0.85));
    const double side = (b % 2 == 0) ? -1.0 : 1.0;
    const double angle = (25.0 + 35.0 * uniform01(rng)) * std::numbers::pi / 180.0;  // from vertical
    const double len = reach * (0.75 + 0.25 * uniform01(rng));
    const auto x1 = static_cast<std::ptrdiff_t>(std::lround(trunk_x + side * len * std::sin(angle)));
    const auto y1 = static_cast<std::ptrdiff_t>(std::lround(y0 - len * std::cos(angle)));
    draw_stroke(labels, trunk_x, y0, x1, y1, (b / 2) % 2 == 0 ? 1 : 2, stroke);
  }
}

}  // namespace

PhantomLayout parse_layout(std::string_view name) {
  if (name == "bands") return PhantomLayout::bands;
  if (name == "disks") return PhantomLayout::disks;
  if (name == "fine_structures" || name == "fine") return PhantomLayout::fine_structures;
  throw std::invalid_argument("unknown layout '" + std::string(name) + "' (expected bands, disks or fine_structures)");
}

std::string_view layout_name(PhantomLayout layout) {
  switch (layout) {
    case PhantomLayout::bands: return "bands";
    case PhantomLayout::disks: return "disks";
    case PhantomLayout::fine_structures: return "fine_structures";
  }
  return "unknown";
}

Phantom make_phantom(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& class_levels,
                     PhantomLayout layout, std::uint64_t seed) {
  const int k = static_cast<int>(class_levels.size());
  if (k < 2) throw std::invalid_argument("make_phantom: need at least 2 class levels");
  if (std::set<std::uint8_t>(class_levels.begin(), class_levels.end()).size() != class_levels.size()) {
    throw std::invalid_argument("make_phantom: class levels must be distinct");
  }
  if (width < 8 || height < 8) throw std::invalid_argument("make_phantom: dimensions must be at least 8x8");

  Grid<std::uint8_t> labels(width, height, 0);
  Rng rng(seed);
  switch (layout) {
    case PhantomLayout::bands: layout_bands(labels, k); break;
    case PhantomLayout::disks: layout_disks(labels, k, rng); break;
    case PhantomLayout::fine_structures: layout_fine_structures(labels, k, rng); break;
  }

  std::vector<std::size_t> counts(k, 0);
  for (std::uint8_t l : labels.values()) ++counts[l];
  for (int c = 0; c < k; ++c) {
    if (static_cast<double>(counts[c]) < kMinClassFraction * static_cast<double>(labels.size())) {
      throw std::invalid_argument("make_phantom: class " + std::to_string(c) + " covers under 5% of a " +
                                  std::to_string(width) + "x" + std::to_string(height) + " " +
                                  std::string(layout_name(layout)) + " phantom");
    }
  }

  std::vector<std::uint8_t> pixels(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) pixels[i] = class_levels[labels[i]];
  std::vector<std::uint8_t> truth(labels.values().begin(), labels.values().end());
  return Phantom{GrayImage(width, height, std::move(pixels)), LabelMap(width, height, k, std::move(truth)),
                 class_levels};
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "impulse") return NoiseKind::impulse;
  if (name == "gaussian" || name == "additive_gaussian") return NoiseKind::additive_gaussian;
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "' (expected gaussian or impulse)");
}

std::string_view noise_kind_name(NoiseKind kind) {
  return kind == NoiseKind::impulse ? "impulse" : "gaussian";
}

GrayImage add_noise(const GrayImage& img, const NoiseSpec& spec) {
  if (!(spec.amount >= 0.0 && spec.amount <= 1.0)) throw std::invalid_argument("noise amount must lie in [0, 1]");
  GrayImage out = img;
  Rng rng(spec.seed);
  if (spec.kind == NoiseKind::additive_gaussian) {
    if (spec.amount == 0.0) return out;
    std::normal_distribution<double> gauss(0.0, spec.amount * 255.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const long v = static_cast<long>(out[i]) + std::lround(gauss(rng));
      out[i] = static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
    }
    return out;
  }
  const auto replace = static_cast<std::size_t>(std::llround(spec.amount * static_cast<double>(out.size())));
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<int> level(0, 255);
  // Partial Fisher-Yates: the first `replace` slots become a uniform sample without replacement.
  for (std::size_t i = 0; i < replace; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
    out[order[i]] = static_cast<std::uint8_t>(level(rng));
  }
  return out;
}

MaskGrid contour_mask(const LabelMap& truth, int radius) {
  if (radius < 1) throw std::invalid_argument("contour radius must be >= 1");
  const auto w = static_cast<std::ptrdiff_t>(truth.width());
  const auto h = static_cast<std::ptrdiff_t>(truth.height());
  MaskGrid mask(truth.width(), truth.height(), 0);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const int center = truth(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      bool mixed = false;
      for (std::ptrdiff_t yy = std::max<std::ptrdiff_t>(0, y - radius); !mixed && yy <= std::min(h - 1, y + radius);
           ++yy) {
        for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
          if (truth(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy)) != center) {
            mixed = true;
            break;
          }
        }
      }
      mask(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = mixed ? 1 : 0;
    }
  }
  return mask;
}

SegReport score(const LabelMap& pred, const LabelMap& truth, const MaskGrid& mask) {
  if (pred.width() != truth.width() || pred.height() != truth.height() ||
      !mask.same_shape(truth.width(), truth.height())) {
    throw DataError("score: label maps and mask differ in dimensions");
  }
  if (pred.k() != truth.k()) {
    throw DataError("score: predicted k=" + std::to_string(pred.k()) + " differs from truth k=" +
                    std::to_string(truth.k()));
  }
  SegReport r;
  r.per_class.assign(truth.k(), ZoneCounts{});
  r.pixels = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (pred[i] == truth[i]) continue;
    auto& zone = r.per_class[truth[i]];
    if (mask[i]) {
      ++zone.contour;
      ++r.contour;
    } else {
      ++zone.region;
      ++r.region;
    }
  }
  return r;
}

std::vector<int> min_cost_assignment(const std::vector<std::vector<long long>>& cost) {
  const std::size_t n = cost.size();
  for (const auto& row : cost) {
    if (row.size() != n) throw std::invalid_argument("min_cost_assignment: cost matrix must be square");
  }
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  // Potentials formulation with 1-based rows/columns; column 0 is a sentinel.
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<long long> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      long long delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) col[match[j] - 1] = static_cast<int>(j - 1);
  return col;
}

std::vector<int> best_permutation(const LabelMap& pred, const LabelMap& truth) {
  if (pred.k() != truth.k()) throw DataError("align_labels: k differs between maps");
  if (pred.width() != truth.width() || pred.height() != truth.height()) {
    throw DataError("align_labels: label maps differ in dimensions");
  }
  const int k = truth.k();
  if (k > kMaxAlignK) throw std::invalid_argument("align_labels: k > 10 is not supported");
  std::vector<std::vector<long long>> agree(k, std::vector<long long>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++agree[pred[i]][truth[i]];

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  if (k <= kMaxExhaustiveK) {
    std::vector<int> best = perm;
    long long best_score = -1;
    do {
      long long s = 0;
      for (int p = 0; p < k; ++p) s += agree[p][perm[p]];
      if (s > best_score) {
        best_score = s;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  const auto n = static_cast<long long>(truth.size());
  std::vector<std::vector<long long>> cost(k, std::vector<long long>(k));
  for (int p = 0; p < k; ++p)
    for (int t = 0; t < k; ++t) cost[p][t] = n - agree[p][t];
  return min_cost_assignment(cost);
}

LabelMap align_labels(const LabelMap& pred, const LabelMap& truth) {
  const auto perm = best_permutation(pred, truth);
  LabelMap out(pred.width(), pred.height(), pred.k());
  for (std::size_t i = 0; i < pred.size(); ++i) out.set(i, perm[pred[i]]);
  return out;
}

Comparison compare_methods(const GrayImage& img, const LabelMap& truth, const std::vector<SegMethod>& methods,
                           const PipelineConfig& cfg, int contour_radius) {
  if (img.width() != truth.width() || img.height() != truth.height()) {
    throw DataError("compare: image and truth differ in dimensions");
  }
  PipelineConfig run = cfg;
  run.em.k = truth.k();
  Segmentation seg = segment(img, run);
  const MaskGrid mask = contour_mask(truth, contour_radius);
  Comparison cmp;
  cmp.mixture = seg.mixture;
  for (SegMethod method : methods) {
    LabelMap labels = align_labels(classify(img, method, seg.mixture, seg.features, run.centers), truth);
    SegReport report = score(labels, truth, mask);
    cmp.rows.push_back({method, std::move(labels), std::move(report)});
  }
  return cmp;
}

Comparison run_comparison(const Phantom& phantom, const NoiseSpec& noise, const std::vector<SegMethod>& methods,
                          const PipelineConfig& cfg) {
  return compare_methods(add_noise(phantom.image, noise), phantom.truth, methods, cfg);
}

std::string comparison_table(const std::vector<std::string>& columns, const std::vector<SegReport>& reports) {
  if (columns.size() != reports.size()) throw std::invalid_argument("comparison_table: column/report mismatch");
  std::string out;
  char buf[64];
  auto cell = [&](const char* fmt, auto value) {
    std::snprintf(buf, sizeof buf, fmt, value);
    out += buf;
  };
  cell("%-6s", "class");
  cell("%-8s", "zone");
  for (const auto& c : columns) cell("%8s", c.c_str());
  out += '\n';
  const std::size_t k = reports.empty() ? 0 : reports.front().per_class.size();
  for (std::size_t c = 0; c < k; ++c) {
    for (const bool contour : {false, true}) {
      cell("%-6zu", c);
      cell("%-8s", contour ? "Contour" : "Region");
      for (const auto& r : reports) cell("%8zu", contour ? r.per_class.at(c).contour : r.per_class.at(c).region);
      out += '\n';
    }
  }
  const char* totals[] = {"Region", "Contour", "Total"};
  for (int t = 0; t < 3; ++t) {
    cell("%-6s", "all");
    cell("%-8s", totals[t]);
    for (const auto& r : reports) cell("%8zu", t == 0 ? r.region : t == 1 ? r.contour : r.total());
    out += '\n';
  }
  return out;
}

std::string comparison_table(const Comparison& cmp) {
  std::vector<std::string> columns;
  std::vector<SegReport> reports;
  for (const auto& row : cmp.rows) {
    std::string name(method_name(row.method));
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
    columns.push_back(name);
    reports.push_back(row.report);
  }
  return comparison_table(columns, reports);
}

}  // namespace adem
