#include "adem/segment.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace adem {

namespace {

void require_shape(const GrayImage& img, const RealGrid& grid, const char* what) {
  if (!grid.same_shape(img.width(), img.height())) {
    throw std::invalid_argument(std::string(what) + " does not match the image dimensions");
  }
}

void require_centers(const ClassCenters& c) {
  if (c.k() < 1 || c.spatial.size() != c.gray.size()) throw std::invalid_argument("invalid class centers");
  if (c.k() > LabelMap::kMaxClasses) throw std::invalid_argument("too many classes");
}

// Index of the smallest cost; the first one wins ties.
template <typename Cost>
int argmin(int k, Cost&& cost) {
  int best = 0;
  double best_cost = cost(0);
  for (int i = 1; i < k; ++i) {
    const double c = cost(i);
    if (c < best_cost) {
      best = i;
      best_cost = c;
    }
  }
  return best;
}

}  // namespace

std::string_view method_name(SegMethod m) {
  switch (m) {
    case SegMethod::em_map: return "em";
    case SegMethod::dem: return "dem";
    case SegMethod::adem: return "adem";
  }
  return "unknown";
}

SegMethod parse_method(std::string_view name) {
  if (name == "em") return SegMethod::em_map;
  if (name == "dem") return SegMethod::dem;
  if (name == "adem") return SegMethod::adem;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected em, dem or adem)");
}

ClassCenters centers_from_mixture(const GaussianMixture& m) {
  ClassCenters c;
  for (const auto& comp : m.components) {
    c.gray.push_back(comp.mean);
    c.spatial.push_back(comp.mean);
  }
  return c;
}

ClassCenters centers_reestimated(const GaussianMixture& m, const GrayImage& img, const RealGrid& mean_map) {
  require_shape(img, mean_map, "mean map");
  ClassCenters c = centers_from_mixture(m);
  std::vector<double> gray(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) gray[i] = img[i];
  const Responsibilities resp = e_step(gray, m);
  for (int i = 0; i < m.k(); ++i) {
    double mass = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < img.size(); ++j) {
      mass += resp(j, i);
      sum += resp(j, i) * mean_map[j];
    }
    if (mass > 0.0) c.spatial[i] = sum / mass;
  }
  return c;
}

LabelMap classify_em_map(const GrayImage& img, const GaussianMixture& m) {
  if (m.k() < 1 || m.k() > LabelMap::kMaxClasses) throw std::invalid_argument("invalid mixture size");
  // The posterior is proportional to weight * density, so the unnormalized log
  // score gives the same argmax as the responsibility row.
  std::array<int, 256> lut{};
  for (int g = 0; g < 256; ++g) {
    lut[g] = argmin(m.k(), [&](int i) {
      const auto& c = m.components[i];
      const double lw = c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity();
      return -(lw + log_gaussian_pdf(g, c.mean, c.variance));
    });
  }
  LabelMap out(img.width(), img.height(), m.k());
  for (std::size_t j = 0; j < img.size(); ++j) out.set(j, lut[img[j]]);
  return out;
}

LabelMap classify_nearest_gray(const GrayImage& img, const ClassCenters& c) {
  require_centers(c);
  LabelMap out(img.width(), img.height(), c.k());
  for (std::size_t j = 0; j < img.size(); ++j) {
    const double x = img[j];
    out.set(j, argmin(c.k(), [&](int i) { return (x - c.gray[i]) * (x - c.gray[i]); }));
  }
  return out;
}

LabelMap classify_dem(const GrayImage& img, const FeatureMaps& fm, const ClassCenters& c) {
  require_centers(c);
  require_shape(img, fm.mean, "mean map");
  LabelMap out(img.width(), img.height(), c.k());
  for (std::size_t j = 0; j < img.size(); ++j) {
    const double s = fm.mean[j];
    out.set(j, argmin(c.k(), [&](int i) { return (s - c.spatial[i]) * (s - c.spatial[i]); }));
  }
  return out;
}

double adaptive_distance(double gray, double spatial, double p, double gray_center, double spatial_center) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("adaptive_distance: p must lie in [0, 1]");
  const double dg = gray - gray_center;
  const double ds = spatial - spatial_center;
  return (1.0 - p) * dg * dg + p * ds * ds;
}

LabelMap classify_adem(const GrayImage& img, const FeatureMaps& fm, const ClassCenters& c) {
  require_centers(c);
  require_shape(img, fm.mean, "mean map");
  require_shape(img, fm.p, "weight map");
  LabelMap out(img.width(), img.height(), c.k());
  for (std::size_t j = 0; j < img.size(); ++j) {
    const double g = img[j];
    const double s = fm.mean[j];
    const double p = fm.p[j];
    out.set(j, argmin(c.k(), [&](int i) { return adaptive_distance(g, s, p, c.gray[i], c.spatial[i]); }));
  }
  return out;
}

FuzzySystem PipelineConfig::fuzzy_system() const {
  FuzzySystem fs = fuzzy ? *fuzzy : FuzzySystem::make_default(sigma_break, window.radius);
  fs.validate();
  return fs;
}

LabelMap classify(const GrayImage& img, SegMethod method, const GaussianMixture& m, const FeatureMaps& fm,
                  SpatialCenterMode mode) {
  if (method == SegMethod::em_map) return classify_em_map(img, m);
  const ClassCenters centers =
      mode == SpatialCenterMode::weighted_mean ? centers_reestimated(m, img, fm.mean) : centers_from_mixture(m);
  return method == SegMethod::dem ? classify_dem(img, fm, centers) : classify_adem(img, fm, centers);
}

Segmentation segment(const GrayImage& img, const PipelineConfig& cfg) {
  Segmentation out;
  out.mixture = fit_em_histogram(gray_histogram(img), cfg.em);
  out.features = compute_features(img, cfg.window, cfg.s_threshold);
  fill_weight_map(out.features, cfg.fuzzy_system());
  out.labels = classify(img, cfg.method, out.mixture, out.features, cfg.centers);
  return out;
}

}  // namespace adem
