#include "adem/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include "adem/random.hpp"

namespace adem {

namespace {

constexpr double kEmptyMassFraction = 1e-12;
constexpr int kKMeansIterations = 20;

// Data points with optional multiplicities; an empty weight span means unit weights.
struct Points {
  std::span<const double> values;
  std::span<const double> weights;

  std::size_t size() const { return values.size(); }
  double weight(std::size_t j) const { return weights.empty() ? 1.0 : weights[j]; }
  double total() const {
    if (weights.empty()) return static_cast<double>(values.size());
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
  }
};

void require_valid_points(const Points& pts) {
  if (pts.values.empty()) throw FitError("no data points");
  if (!pts.weights.empty() && pts.weights.size() != pts.values.size()) {
    throw std::invalid_argument("weights and values differ in length");
  }
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (!std::isfinite(pts.values[j])) throw std::invalid_argument("non-finite data value");
    if (!(pts.weight(j) >= 0.0) || !std::isfinite(pts.weight(j))) throw std::invalid_argument("invalid weight");
  }
  if (!(pts.total() > 0.0)) throw FitError("total data weight is zero");
}

void require_valid_mixture(const GaussianMixture& m) {
  if (m.components.empty()) throw std::invalid_argument("mixture has no components");
  for (const auto& c : m.components) {
    if (!(c.variance > 0.0)) throw std::invalid_argument("component variance must be > 0");
    if (!(c.weight >= 0.0)) throw std::invalid_argument("component weight must be >= 0");
  }
}

double log_or_neg_inf(double w) { return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity(); }

// Fills one responsibility row for x and returns ln f(x). Log-sum-exp keeps the
// row well defined when every density underflows.
double responsibility_row(double x, const GaussianMixture& m, std::span<double> row) {
  const int k = m.k();
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const auto& c = m.components[i];
    row[i] = log_or_neg_inf(c.weight) + log_gaussian_pdf(x, c.mean, c.variance);
    top = std::max(top, row[i]);
  }
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    row[i] = std::exp(row[i] - top);
    sum += row[i];
  }
  for (int i = 0; i < k; ++i) row[i] /= sum;
  return top + std::log(sum);
}

double log_density(double x, const GaussianMixture& m) {
  std::array<double, 64> stack{};
  std::vector<double> heap;
  std::span<double> row;
  if (m.k() <= 64) {
    row = std::span<double>(stack.data(), m.components.size());
  } else {
    heap.resize(m.components.size());
    row = heap;
  }
  return responsibility_row(x, m, row);
}

// E-step over all points; returns the weighted log-likelihood and the index of
// the point with the lowest mixture density.
struct EStepResult {
  double loglik = 0.0;
  std::size_t least_likely = 0;
};

EStepResult e_step_into(const Points& pts, const GaussianMixture& m, Responsibilities& resp) {
  EStepResult out;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double ld = responsibility_row(pts.values[j], m, resp.row(j));
    out.loglik += pts.weight(j) * ld;
    if (pts.weight(j) > 0.0 && ld < lowest) {
      lowest = ld;
      out.least_likely = j;
    }
  }
  return out;
}

struct ColumnMoments {
  std::vector<double> mass;
  std::vector<double> mean;
  std::vector<double> variance;
};

ColumnMoments weighted_moments(const Points& pts, const Responsibilities& resp) {
  const int k = resp.cols();
  ColumnMoments cm{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double w = pts.weight(j);
    for (int i = 0; i < k; ++i) {
      const double r = w * resp(j, i);
      cm.mass[i] += r;
      cm.mean[i] += r * pts.values[j];
    }
  }
  for (int i = 0; i < k; ++i) {
    if (cm.mass[i] > 0.0) cm.mean[i] /= cm.mass[i];
  }
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double w = pts.weight(j);
    for (int i = 0; i < k; ++i) {
      const double d = pts.values[j] - cm.mean[i];
      cm.variance[i] += w * resp(j, i) * d * d;
    }
  }
  for (int i = 0; i < k; ++i) {
    cm.variance[i] = cm.mass[i] > 0.0 ? std::max(cm.variance[i] / cm.mass[i], kVarianceFloor) : kVarianceFloor;
  }
  return cm;
}

GaussianMixture m_step_checked(const Points& pts, const Responsibilities& resp) {
  if (resp.rows() != pts.size()) throw std::invalid_argument("responsibility rows do not match data");
  const auto cm = weighted_moments(pts, resp);
  const double total = pts.total();
  GaussianMixture out;
  for (int i = 0; i < resp.cols(); ++i) {
    if (!(cm.mass[i] >= kEmptyMassFraction * total)) {
      throw FitError("component " + std::to_string(i) + " received no responsibility mass");
    }
    out.components.push_back({cm.mass[i] / total, cm.mean[i], cm.variance[i]});
  }
  return out;
}

double max_parameter_change(const GaussianMixture& a, const GaussianMixture& b) {
  double change = 0.0;
  for (int i = 0; i < a.k(); ++i) {
    const auto& ca = a.components[i];
    const auto& cb = b.components[i];
    change = std::max({change, std::abs(ca.weight - cb.weight), std::abs(ca.mean - cb.mean),
                       std::abs(std::sqrt(ca.variance) - std::sqrt(cb.variance))});
  }
  return change;
}

void sort_by_mean(GaussianMixture& m) {
  std::stable_sort(m.components.begin(), m.components.end(),
                   [](const GaussianComponent& a, const GaussianComponent& b) { return a.mean < b.mean; });
}

// Distinct values with summed multiplicities, ascending. Zero-weight points are dropped.
struct Compressed {
  std::vector<double> values;
  std::vector<double> weights;
};

Compressed compress(const Points& pts) {
  std::map<double, double> acc;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (pts.weight(j) > 0.0) acc[pts.values[j]] += pts.weight(j);
  }
  Compressed c;
  for (const auto& [v, w] : acc) {
    c.values.push_back(v);
    c.weights.push_back(w);
  }
  return c;
}

std::size_t sample_index(std::span<const double> mass, double total, Rng& rng) {
  const double target = uniform01(rng) * total;
  double run = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < mass.size(); ++j) {
    if (mass[j] <= 0.0) continue;
    last_positive = j;
    run += mass[j];
    if (target < run) return j;
  }
  return last_positive;
}

std::size_t nearest_center(double x, const std::vector<double>& centers) {
  std::size_t best = 0;
  double best_d = std::abs(x - centers[0]);
  for (std::size_t i = 1; i < centers.size(); ++i) {
    const double d = std::abs(x - centers[i]);
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

GaussianMixture initial_from_compressed(const Compressed& data, const EmConfig& cfg) {
  const auto k = static_cast<std::size_t>(cfg.k);
  if (data.values.size() < k) {
    throw FitError("need at least " + std::to_string(k) + " distinct values, found " +
                   std::to_string(data.values.size()));
  }
  const std::size_t n = data.values.size();
  const double total = std::accumulate(data.weights.begin(), data.weights.end(), 0.0);
  Rng rng(cfg.seed);

  // k-means++ spreading: first center by mass, then by mass * squared distance.
  std::vector<double> centers;
  centers.push_back(data.values[sample_index(data.weights, total, rng)]);
  std::vector<double> score(n);
  while (centers.size() < k) {
    double score_total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = data.values[j] - centers[nearest_center(data.values[j], centers)];
      score[j] = data.weights[j] * d * d;
      score_total += score[j];
    }
    centers.push_back(data.values[sample_index(score, score_total, rng)]);
  }
  std::sort(centers.begin(), centers.end());

  std::vector<std::size_t> assign(n, k);
  std::vector<double> mass(k), sum(k);
  for (int iter = 0; iter < kKMeansIterations; ++iter) {
    bool changed = false;
    for (std::size_t j = 0; j < n; ++j) {
      const auto a = nearest_center(data.values[j], centers);
      changed = changed || a != assign[j];
      assign[j] = a;
    }
    std::fill(mass.begin(), mass.end(), 0.0);
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      mass[assign[j]] += data.weights[j];
      sum[assign[j]] += data.weights[j] * data.values[j];
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (mass[i] > 0.0) {
        centers[i] = sum[i] / mass[i];
        continue;
      }
      // Empty cluster: move it onto the value farthest from its current center.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = std::abs(data.values[j] - centers[assign[j]]);
        if (d > far_d) {
          far = j;
          far_d = d;
        }
      }
      centers[i] = data.values[far];
      changed = true;
    }
    if (!changed) break;
  }
  std::sort(centers.begin(), centers.end());
  std::fill(mass.begin(), mass.end(), 0.0);
  std::fill(sum.begin(), sum.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    assign[j] = nearest_center(data.values[j], centers);
    mass[assign[j]] += data.weights[j];
    sum[assign[j]] += data.weights[j] * data.values[j];
  }
  std::vector<double> spread(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (mass[i] > 0.0) centers[i] = sum[i] / mass[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double d = data.values[j] - centers[assign[j]];
    spread[assign[j]] += data.weights[j] * d * d;
  }

  GaussianMixture m;
  for (std::size_t i = 0; i < k; ++i) {
    GaussianComponent c;
    // A cluster can only end empty when two centers coincide; give it a token share.
    c.weight = mass[i] > 0.0 ? mass[i] / total : 1.0 / static_cast<double>(n);
    c.mean = centers[i];
    c.variance = cfg.init == InitMode::identity_variance
                     ? 1.0
                     : std::max(mass[i] > 0.0 ? spread[i] / mass[i] : 0.0, kVarianceFloor);
    m.components.push_back(c);
  }
  const double wsum = std::accumulate(m.components.begin(), m.components.end(), 0.0,
                                      [](double acc, const GaussianComponent& c) { return acc + c.weight; });
  for (auto& c : m.components) c.weight /= wsum;
  return m;
}

double weighted_variance(const Points& pts) {
  const double total = pts.total();
  double mean = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) mean += pts.weight(j) * pts.values[j];
  mean /= total;
  double ss = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double d = pts.values[j] - mean;
    ss += pts.weight(j) * d * d;
  }
  return std::max(ss / total, kVarianceFloor);
}

GaussianMixture fit_points(const Points& pts, const EmConfig& cfg) {
  cfg.validate();
  require_valid_points(pts);
  GaussianMixture m = initial_from_compressed(compress(pts), cfg);
  const double total = pts.total();
  const int k = cfg.k;
  std::vector<bool> reseeded(k, false);

  Responsibilities resp(pts.size(), k);
  EStepResult es = e_step_into(pts, m, resp);
  m.loglik_trace.push_back(es.loglik);

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const auto cm = weighted_moments(pts, resp);
    GaussianMixture next;
    next.loglik_trace = std::move(m.loglik_trace);
    next.reseeds = m.reseeds;
    for (int i = 0; i < k; ++i) {
      GaussianComponent c{cm.mass[i] / total, cm.mean[i], cm.variance[i]};
      if (!(cm.mass[i] >= kEmptyMassFraction * total)) {
        if (!reseeded[i]) {
          reseeded[i] = true;
          ++next.reseeds;
          c = {1.0 / total, pts.values[es.least_likely], weighted_variance(pts)};
        } else {
          c = {cm.mass[i] / total, m.components[i].mean, m.components[i].variance};
        }
      }
      next.components.push_back(c);
    }
    double wsum = 0.0;
    for (const auto& c : next.components) wsum += c.weight;
    for (auto& c : next.components) c.weight /= wsum;

    const double change = max_parameter_change(m, next);
    next.iterations = iter;
    m = std::move(next);
    es = e_step_into(pts, m, resp);
    m.loglik_trace.push_back(es.loglik);
    if (change <= cfg.epsilon) {
      m.converged = true;
      break;
    }
  }
  sort_by_mean(m);
  return m;
}

}  // namespace

void EmConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

double GaussianMixture::loglik() const {
  return loglik_trace.empty() ? std::numeric_limits<double>::quiet_NaN() : loglik_trace.back();
}

double gaussian_pdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_pdf: variance must be > 0");
  const double d = x - mean;
  return std::exp(-d * d / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double log_gaussian_pdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("log_gaussian_pdf: variance must be > 0");
  const double d = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - d * d / (2.0 * variance);
}

double mixture_density(double x, const GaussianMixture& m) {
  require_valid_mixture(m);
  double f = 0.0;
  for (const auto& c : m.components) f += c.weight * gaussian_pdf(x, c.mean, c.variance);
  return f;
}

double log_likelihood(std::span<const double> data, const GaussianMixture& m) {
  require_valid_mixture(m);
  if (data.empty()) throw std::invalid_argument("log_likelihood: empty data");
  double ll = 0.0;
  for (double x : data) ll += log_density(x, m);
  return ll;
}

Responsibilities e_step(std::span<const double> data, const GaussianMixture& m) {
  require_valid_mixture(m);
  Responsibilities resp(data.size(), m.k());
  e_step_into(Points{data, {}}, m, resp);
  return resp;
}

GaussianMixture m_step(std::span<const double> data, const Responsibilities& resp) {
  return m_step_checked(Points{data, {}}, resp);
}

GaussianMixture m_step(std::span<const double> data, std::span<const double> weights, const Responsibilities& resp) {
  if (weights.size() != data.size()) throw std::invalid_argument("weights and values differ in length");
  return m_step_checked(Points{data, weights}, resp);
}

GaussianMixture initial_mixture(std::span<const double> values, std::span<const double> weights, const EmConfig& cfg) {
  cfg.validate();
  const Points pts{values, weights};
  require_valid_points(pts);
  return initial_from_compressed(compress(pts), cfg);
}

GaussianMixture fit_em(std::span<const double> data, const EmConfig& cfg) { return fit_points(Points{data, {}}, cfg); }

GaussianMixture fit_em_weighted(std::span<const double> values, std::span<const double> weights, const EmConfig& cfg) {
  if (weights.size() != values.size()) throw std::invalid_argument("weights and values differ in length");
  return fit_points(Points{values, weights}, cfg);
}

Histogram gray_histogram(const GrayImage& img) {
  Histogram h{};
  for (std::uint8_t v : img.pixels()) h[v] += 1.0;
  return h;
}

GaussianMixture fit_em_histogram(const Histogram& hist, const EmConfig& cfg) {
  std::vector<double> values, weights;
  for (std::size_t g = 0; g < hist.size(); ++g) {
    if (hist[g] > 0.0) {
      values.push_back(static_cast<double>(g));
      weights.push_back(hist[g]);
    }
  }
  return fit_points(Points{values, weights}, cfg);
}

double bic_from_loglik(double loglik, int k, double n) {
  return -2.0 * loglik + free_parameters(k) * std::log(n);
}

double bic(std::span<const double> data, const GaussianMixture& m) {
  return bic_from_loglik(log_likelihood(data, m), m.k(), static_cast<double>(data.size()));
}

ModelSelection select_k(std::span<const double> data, int k_max, const EmConfig& tmpl) {
  if (k_max < 1) throw std::invalid_argument("select_k: k_max must be >= 1");
  ModelSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    EmConfig cfg = tmpl;
    cfg.k = k;
    try {
      GaussianMixture m = fit_em(data, cfg);
      const double score = bic(data, m);
      if (score < best) {
        best = score;
        sel.best_k = k;
      }
      sel.fits.emplace_back(std::move(m));
      sel.bic.push_back(score);
    } catch (const FitError& e) {
      sel.fits.emplace_back(std::nullopt);
      sel.bic.push_back(std::numeric_limits<double>::quiet_NaN());
      sel.failures.push_back("K=" + std::to_string(k) + ": " + e.what());
    }
  }
  if (sel.best_k == 0) throw FitError("select_k: no K in 1.." + std::to_string(k_max) + " could be fitted");
  return sel;
}

}  // namespace adem
