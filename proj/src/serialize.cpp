#include "adem/serialize.hpp"

#include <cmath>

namespace adem {

namespace {

Json fn_to_json(const MembershipFn& fn) { return Json::array({fn.a, fn.b, fn.c, fn.d}); }

MembershipFn fn_from_json(const Json& j, const char* name) {
  if (!j.contains(name)) throw DataError(std::string("fuzzy system JSON is missing '") + name + "'");
  const Json& arr = j.at(name);
  if (!arr.is_array() || arr.size() != 4) {
    throw DataError(std::string("'") + name + "' must be an array of four breakpoints");
  }
  try {
    return MembershipFn::trapezoid(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(),
                                   arr[3].get<double>());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("'") + name + "': " + e.what());
  }
}

std::string init_name(InitMode m) { return m == InitMode::kmeans ? "kmeans" : "identity"; }

InitMode parse_init(std::string_view s) {
  if (s == "kmeans") return InitMode::kmeans;
  if (s == "identity") return InitMode::identity_variance;
  throw DataError("unknown init mode '" + std::string(s) + "'");
}

std::string centers_name(SpatialCenterMode m) { return m == SpatialCenterMode::gray_mean ? "gray_mean" : "weighted_mean"; }

SpatialCenterMode parse_centers(std::string_view s) {
  if (s == "gray_mean") return SpatialCenterMode::gray_mean;
  if (s == "weighted_mean") return SpatialCenterMode::weighted_mean;
  throw DataError("unknown spatial center mode '" + std::string(s) + "'");
}

}  // namespace

Json mixture_to_json(const GaussianMixture& m) {
  Json comps = Json::array();
  for (const auto& c : m.components) comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
  Json j;
  j["k"] = m.k();
  j["components"] = std::move(comps);
  j["loglik"] = m.loglik();
  j["iterations"] = m.iterations;
  j["converged"] = m.converged;
  return j;
}

GaussianMixture mixture_from_json(const Json& j) {
  try {
    GaussianMixture m;
    for (const auto& c : j.at("components")) {
      m.components.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(), c.at("variance").get<double>()});
    }
    if (j.at("k").get<int>() != m.k()) throw DataError("mixture JSON: k does not match component count");
    if (j.at("loglik").is_number()) m.loglik_trace.push_back(j.at("loglik").get<double>());
    m.iterations = j.at("iterations").get<int>();
    m.converged = j.at("converged").get<bool>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("mixture JSON: ") + e.what());
  }
}

Json fuzzy_to_json(const FuzzySystem& fs) {
  Json j;
  j["sigma_small"] = fn_to_json(fs.sigma_small);
  j["sigma_great"] = fn_to_json(fs.sigma_great);
  j["ncn_small"] = fn_to_json(fs.ncn_small);
  j["ncn_moderate"] = fn_to_json(fs.ncn_moderate);
  j["ncn_great"] = fn_to_json(fs.ncn_great);
  j["p_small"] = fn_to_json(fs.p_small);
  j["p_great"] = fn_to_json(fs.p_great);
  j["sigma_max"] = fs.sigma_max;
  j["ncn_max"] = fs.ncn_max;
  j["defuzz_resolution"] = fs.defuzz_resolution;
  return j;
}

FuzzySystem fuzzy_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("fuzzy system JSON must be an object");
  FuzzySystem fs;
  fs.sigma_small = fn_from_json(j, "sigma_small");
  fs.sigma_great = fn_from_json(j, "sigma_great");
  fs.ncn_small = fn_from_json(j, "ncn_small");
  fs.ncn_moderate = fn_from_json(j, "ncn_moderate");
  fs.ncn_great = fn_from_json(j, "ncn_great");
  fs.p_small = fn_from_json(j, "p_small");
  fs.p_great = fn_from_json(j, "p_great");
  // Domains default to the furthest breakpoint when omitted.
  fs.sigma_max = j.contains("sigma_max") ? j.at("sigma_max").get<double>() : std::max(fs.sigma_great.d, fs.sigma_small.d);
  fs.ncn_max = j.contains("ncn_max") ? j.at("ncn_max").get<double>()
                                     : std::max({fs.ncn_small.d, fs.ncn_moderate.d, fs.ncn_great.d});
  if (j.contains("defuzz_resolution")) fs.defuzz_resolution = j.at("defuzz_resolution").get<int>();
  try {
    fs.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("fuzzy system JSON: ") + e.what());
  }
  return fs;
}

Json report_to_json(const SegReport& r) {
  Json per_class = Json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    per_class.push_back({{"class", c}, {"region", r.per_class[c].region}, {"contour", r.per_class[c].contour}});
  }
  Json j;
  j["per_class"] = std::move(per_class);
  j["region"] = r.region;
  j["contour"] = r.contour;
  j["total"] = r.total();
  j["pixels"] = r.pixels;
  j["accuracy"] = r.accuracy();
  return j;
}

Json comparison_to_json(const Comparison& cmp) {
  Json methods = Json::array();
  for (const auto& row : cmp.rows) {
    methods.push_back({{"method", std::string(method_name(row.method))}, {"report", report_to_json(row.report)}});
  }
  Json j;
  j["methods"] = std::move(methods);
  j["mixture"] = mixture_to_json(cmp.mixture);
  return j;
}

std::string border_policy_name(BorderPolicy b) { return b == BorderPolicy::shrink ? "shrink" : "clamp"; }

BorderPolicy parse_border_policy(std::string_view name) {
  if (name == "shrink") return BorderPolicy::shrink;
  if (name == "clamp") return BorderPolicy::clamp;
  throw std::invalid_argument("unknown border policy '" + std::string(name) + "' (expected shrink or clamp)");
}

Json manifest_to_json(const PipelineConfig& cfg, std::uint64_t seed, const std::string& membership_override) {
  Json j;
  j["method"] = std::string(method_name(cfg.method));
  j["k"] = cfg.em.k;
  j["seed"] = seed;
  j["epsilon"] = cfg.em.epsilon;
  j["window_radius"] = cfg.window.radius;
  j["s_threshold"] = cfg.s_threshold;
  j["sigma_break"] = cfg.sigma_break;
  j["border_policy"] = border_policy_name(cfg.window.border);
  j["max_iter"] = cfg.em.max_iter;
  j["init"] = init_name(cfg.em.init);
  j["spatial_centers"] = centers_name(cfg.centers);
  j["membership_override"] = membership_override.empty() ? Json(nullptr) : Json(membership_override);
  return j;
}

Manifest manifest_from_json(const Json& j) {
  try {
    Manifest m;
    m.config.method = parse_method(j.at("method").get<std::string>());
    m.config.em.k = j.at("k").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config.em.epsilon = j.at("epsilon").get<double>();
    m.config.window.radius = j.at("window_radius").get<int>();
    m.config.s_threshold = j.at("s_threshold").get<double>();
    m.config.sigma_break = j.at("sigma_break").get<double>();
    m.config.window.border = parse_border_policy(j.at("border_policy").get<std::string>());
    if (j.contains("max_iter")) m.config.em.max_iter = j.at("max_iter").get<int>();
    if (j.contains("init")) m.config.em.init = parse_init(j.at("init").get<std::string>());
    if (j.contains("spatial_centers")) m.config.centers = parse_centers(j.at("spatial_centers").get<std::string>());
    if (j.contains("membership_override") && j.at("membership_override").is_string()) {
      m.membership_override = j.at("membership_override").get<std::string>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("run manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("run manifest: ") + e.what());
  }
}

}  // namespace adem
