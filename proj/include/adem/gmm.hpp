#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adem/image.hpp"

namespace adem {

/// Fitting could not proceed (too few distinct values, every K failed, ...).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lower bound on every component variance, in gray levels squared.
inline constexpr double kVarianceFloor = 1e-3;

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;

  friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;
  std::vector<double> loglik_trace;  // entry t is the log-likelihood of the parameters after t iterations
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;  // empty components re-seeded during the fit

  int k() const noexcept { return static_cast<int>(components.size()); }
  double loglik() const;

  friend bool operator==(const GaussianMixture&, const GaussianMixture&) = default;
};

enum class InitMode {
  kmeans,             // k-means centers, within-cluster variances, cluster fractions
  identity_variance,  // k-means centers and fractions, unit variances
};

struct EmConfig {
  int k = 3;
  double epsilon = 1e-3;  // max-norm change of (weights, means, std devs)
  int max_iter = 200;
  std::uint64_t seed = 0;
  InitMode init = InitMode::kmeans;

  void validate() const;
};

/// Posterior table, n rows (data points) by k columns (components).
class Responsibilities {
 public:
  Responsibilities(std::size_t n, int k) : n_(n), k_(k), values_(n * static_cast<std::size_t>(k), 0.0) {}

  std::size_t rows() const noexcept { return n_; }
  int cols() const noexcept { return k_; }
  double& operator()(std::size_t j, int i) { return values_[j * k_ + i]; }
  double operator()(std::size_t j, int i) const { return values_[j * k_ + i]; }
  std::span<const double> row(std::size_t j) const { return {values_.data() + j * k_, static_cast<std::size_t>(k_)}; }
  std::span<double> row(std::size_t j) { return {values_.data() + j * k_, static_cast<std::size_t>(k_)}; }

 private:
  std::size_t n_;
  int k_;
  std::vector<double> values_;
};

double gaussian_pdf(double x, double mean, double variance);
double log_gaussian_pdf(double x, double mean, double variance);

double mixture_density(double x, const GaussianMixture& m);

/// Sum of ln mixture_density over the data, evaluated with log-sum-exp.
double log_likelihood(std::span<const double> data, const GaussianMixture& m);

Responsibilities e_step(std::span<const double> data, const GaussianMixture& m);

/// Closed-form M-step. Throws FitError if a component has no responsibility mass;
/// fit_em handles that case by re-seeding instead.
GaussianMixture m_step(std::span<const double> data, const Responsibilities& resp);

/// Weighted M-step: point j counts weights[j] times.
GaussianMixture m_step(std::span<const double> data, std::span<const double> weights, const Responsibilities& resp);

/// Seeded k-means++ initialization over the distinct values of the data.
GaussianMixture initial_mixture(std::span<const double> values, std::span<const double> weights, const EmConfig& cfg);

/// EM over individual points. Result components are sorted by ascending mean.
GaussianMixture fit_em(std::span<const double> data, const EmConfig& cfg);

/// EM over weighted points; weights must be non-negative with positive total.
GaussianMixture fit_em_weighted(std::span<const double> values, std::span<const double> weights, const EmConfig& cfg);

using Histogram = std::array<double, 256>;

Histogram gray_histogram(const GrayImage& img);

/// EM on the 256-bin gray histogram; equivalent to per-pixel EM on the image.
GaussianMixture fit_em_histogram(const Histogram& hist, const EmConfig& cfg);

/// Free parameters of a 1-D K-component mixture: (K-1) weights, K means, K variances.
constexpr int free_parameters(int k) { return 3 * k - 1; }

double bic(std::span<const double> data, const GaussianMixture& m);
double bic_from_loglik(double loglik, int k, double n);

struct ModelSelection {
  int best_k = 0;
  std::vector<std::optional<GaussianMixture>> fits;  // fits[K-1]; empty when that K failed
  std::vector<double> bic;                            // NaN for failed K
  std::vector<std::string> failures;
};

/// Fits K = 1..k_max and returns the BIC minimizer, ties toward the smaller K.
ModelSelection select_k(std::span<const double> data, int k_max, const EmConfig& tmpl);

}  // namespace adem
