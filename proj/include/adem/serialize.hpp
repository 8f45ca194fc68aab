#pragma once

#include "json.hpp"

#include "adem/eval.hpp"
#include "adem/fuzzy.hpp"
#include "adem/gmm.hpp"
#include "adem/segment.hpp"

namespace adem {

using Json = nlohmann::ordered_json;

// {k, components: [{weight, mean, variance}], loglik, iterations, converged}
Json mixture_to_json(const GaussianMixture& m);
GaussianMixture mixture_from_json(const Json& j);

// One [a, b, c, d] array per membership function, keyed by name.
Json fuzzy_to_json(const FuzzySystem& fs);
FuzzySystem fuzzy_from_json(const Json& j);

// {per_class: [{class, region, contour}], region, contour, total, pixels, accuracy}
Json report_to_json(const SegReport& r);

// {methods: [{method, report}], mixture}
Json comparison_to_json(const Comparison& cmp);

// Run manifest: {method, k, seed, epsilon, window_radius, s_threshold, sigma_break,
// border_policy} plus max_iter, init, spatial_centers and membership_override.
Json manifest_to_json(const PipelineConfig& cfg, std::uint64_t seed, const std::string& membership_override);

struct Manifest {
  PipelineConfig config;
  std::uint64_t seed = 0;
  std::string membership_override;
};
Manifest manifest_from_json(const Json& j);

std::string border_policy_name(BorderPolicy b);
BorderPolicy parse_border_policy(std::string_view name);

}  // namespace adem
