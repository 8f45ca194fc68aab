#include "cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>

#include "CLI11.hpp"
#include "adem/eval.hpp"
#include "adem/features.hpp"
#include "adem/fuzzy.hpp"
#include "adem/gmm.hpp"
#include "adem/image_io.hpp"
#include "adem/random.hpp"
#include "adem/segment.hpp"
#include "adem/serialize.hpp"

namespace adem::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out = "out";
  bool quiet = false;
};

struct Context {
  Globals globals;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  void info(const std::string& msg) const {
    if (!globals.quiet) *out << msg << '\n';
  }
  void warn(const std::string& msg) const { *err << "warning: " << msg << '\n'; }
};

// Options shared by every command that runs the pipeline.
struct PipelineOptions {
  std::string method;
  int k = 3;
  double epsilon = 1e-3;
  int max_iter = 200;
  int radius = 1;
  double s_threshold = kDefaultNcnThreshold;
  double sigma_break = 40.0;
  std::string border = "shrink";
  std::string init = "kmeans";
  std::string centers = "gray_mean";
  std::string membership;
};

std::vector<CLI::Option*> add_pipeline_options(CLI::App* cmd, PipelineOptions& o, bool with_k) {
  std::vector<CLI::Option*> opts;
  if (with_k) opts.push_back(cmd->add_option("--k", o.k, "number of classes")->check(CLI::Range(1, 255)));
  opts.push_back(cmd->add_option("--epsilon", o.epsilon, "EM stop threshold")->check(CLI::NonNegativeNumber));
  opts.push_back(cmd->add_option("--max-iter", o.max_iter, "EM iteration cap")->check(CLI::PositiveNumber));
  opts.push_back(cmd->add_option("--radius", o.radius, "analysis window radius")->check(CLI::Range(1, 64)));
  opts.push_back(cmd->add_option("--s-threshold", o.s_threshold, "NCN closeness threshold"));
  opts.push_back(cmd->add_option("--sigma-break", o.sigma_break, "sigma membership breakpoint"));
  opts.push_back(cmd->add_option("--border", o.border, "shrink or clamp")->check(CLI::IsMember({"shrink", "clamp"})));
  opts.push_back(cmd->add_option("--init", o.init, "kmeans or identity")->check(CLI::IsMember({"kmeans", "identity"})));
  opts.push_back(cmd->add_option("--centers", o.centers, "gray_mean or weighted_mean")
                     ->check(CLI::IsMember({"gray_mean", "weighted_mean"})));
  opts.push_back(cmd->add_option("--membership", o.membership, "fuzzy membership override (JSON)"));
  return opts;
}

Json read_json(const fs::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

FuzzySystem load_membership(const std::string& path) { return fuzzy_from_json(read_json(path)); }

PipelineConfig build_config(const PipelineOptions& o, std::uint64_t seed) {
  // Route every option through the manifest reader so both paths validate alike.
  Json j;
  j["method"] = o.method.empty() ? "adem" : o.method;
  j["k"] = o.k;
  j["seed"] = seed;
  j["epsilon"] = o.epsilon;
  j["window_radius"] = o.radius;
  j["s_threshold"] = o.s_threshold;
  j["sigma_break"] = o.sigma_break;
  j["border_policy"] = o.border;
  j["max_iter"] = o.max_iter;
  j["init"] = o.init;
  j["spatial_centers"] = o.centers;
  PipelineConfig cfg = manifest_from_json(j).config;
  if (!o.membership.empty()) cfg.fuzzy = load_membership(o.membership);
  cfg.em.seed = derive_seed(seed, "init");
  return cfg;
}

fs::path artifact(const Globals& g, std::string_view suffix) {
  fs::path p(g.out + std::string(suffix));
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0 || v > 16384) {
      throw UsageError("invalid size '" + text + "' (expected WxH with positive dimensions)");
    }
    return v;
  };
  if (x == std::string::npos) throw UsageError("invalid size '" + text + "' (expected WxH)");
  const std::string_view all(text);
  return {number(all.substr(0, x)), number(all.substr(x + 1))};
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

GrayImage load_image(const std::string& path) { return read_pgm(read_file(path)); }

// A .lbl file holds labels directly; any other PGM is taken as a display image whose
// distinct gray levels become labels in ascending order.
LabelMap load_labels(const std::string& path, int k_hint) {
  const Bytes bytes = read_file(path);
  LabelMap lm;
  if (fs::path(path).extension() == ".lbl") {
    lm = read_label_map(bytes);
  } else {
    const GrayImage img = read_pgm(bytes);
    std::set<std::uint8_t> levels(img.pixels().begin(), img.pixels().end());
    std::array<int, 256> index{};
    int next = 0;
    for (std::uint8_t v : levels) index[v] = next++;
    std::vector<std::uint8_t> labels(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) labels[i] = static_cast<std::uint8_t>(index[img[i]]);
    lm = LabelMap(img.width(), img.height(), next, std::move(labels));
  }
  if (k_hint > lm.k()) {
    lm = LabelMap(lm.width(), lm.height(), k_hint, std::vector<std::uint8_t>(lm.labels().begin(), lm.labels().end()));
  }
  return lm;
}

void write_labels(const Globals& g, std::string_view stem, const LabelMap& lm) {
  write_file(artifact(g, std::string(stem) + ".labels.pgm"), write_pgm(label_map_to_image(lm)));
  write_file(artifact(g, std::string(stem) + ".lbl"), write_label_map(lm));
}

void dump_features(const Globals& g, std::string_view stem, const FeatureMaps& fm, double ncn_max) {
  const std::string base(stem);
  const RealGrid ncn = to_real_grid(fm.ncn);
  const std::pair<const char*, const RealGrid*> grids[] = {
      {"mean", &fm.mean}, {"sigma", &fm.sigma}, {"ncn", &ncn}, {"p", &fm.p}};
  const double hi[] = {255.0, 128.0, ncn_max, 1.0};
  for (int i = 0; i < 4; ++i) {
    const std::string name = base + "." + grids[i].first;
    write_file(artifact(g, name + ".f64"), write_grid_f64(*grids[i].second));
    write_file(artifact(g, name + ".pgm"), write_pgm(grid_to_image(*grids[i].second, 0.0, hi[i])));
  }
}

void note_convergence(const Context& ctx, const GaussianMixture& m) {
  if (!m.converged) ctx.warn("EM stopped at the iteration cap (" + std::to_string(m.iterations) + ") before converging");
}

// ---- commands --------------------------------------------------------------

struct GenerateArgs {
  std::string layout = "bands";
  std::string size = "90x90";
  std::vector<int> levels{30, 120, 220};
};

void cmd_generate(const Context& ctx, const GenerateArgs& a) {
  const auto [w, h] = parse_size(a.size);
  std::vector<std::uint8_t> levels;
  for (int v : a.levels) levels.push_back(static_cast<std::uint8_t>(v));
  PhantomLayout layout;
  try {
    layout = parse_layout(a.layout);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Phantom ph = make_phantom(w, h, levels, layout, ctx.globals.seed);
  const fs::path image = artifact(ctx.globals, ".pgm");
  const fs::path truth_pgm = artifact(ctx.globals, ".truth.pgm");
  const fs::path truth_lbl = artifact(ctx.globals, ".truth.lbl");
  write_file(image, write_pgm(ph.image));
  write_file(truth_pgm, write_pgm(label_map_to_image(ph.truth)));
  write_file(truth_lbl, write_label_map(ph.truth));

  Json j;
  j["layout"] = std::string(layout_name(layout));
  j["width"] = w;
  j["height"] = h;
  j["k"] = ph.truth.k();
  j["levels"] = a.levels;
  j["seed"] = ctx.globals.seed;
  j["image"] = image.filename().string();
  j["truth"] = truth_pgm.filename().string();
  j["truth_labels"] = truth_lbl.filename().string();
  write_json(artifact(ctx.globals, ".json"), j);
  ctx.info("wrote " + image.string());
}

struct NoiseArgs {
  std::string input;
  std::string kind = "impulse";
  double amount = 0.05;
};

void cmd_noise(const Context& ctx, const NoiseArgs& a) {
  NoiseSpec spec;
  spec.kind = parse_noise_kind(a.kind);
  spec.amount = a.amount;
  spec.seed = derive_seed(ctx.globals.seed, "noise");
  const GrayImage noisy = add_noise(load_image(a.input), spec);
  const fs::path image = artifact(ctx.globals, ".pgm");
  write_file(image, write_pgm(noisy));

  Json j;
  j["input"] = a.input;
  j["kind"] = std::string(noise_kind_name(spec.kind));
  j["amount"] = spec.amount;
  j["seed"] = ctx.globals.seed;
  write_json(artifact(ctx.globals, ".json"), j);
  ctx.info("wrote " + image.string());
}

struct FeaturesArgs {
  std::string input;
  PipelineOptions pipeline;
};

void cmd_features(const Context& ctx, const FeaturesArgs& a) {
  const PipelineConfig cfg = build_config(a.pipeline, ctx.globals.seed);
  const GrayImage img = load_image(a.input);
  FeatureMaps fm = compute_features(img, cfg.window, cfg.s_threshold);
  const FuzzySystem fsys = cfg.fuzzy_system();
  fill_weight_map(fm, fsys);
  dump_features(ctx.globals, "", fm, fsys.ncn_max);
  ctx.info("wrote " + ctx.globals.out + ".{mean,sigma,ncn,p}.{f64,pgm}");
}

struct SegmentArgs {
  std::string input;
  std::string manifest;
  bool dump = false;
  PipelineOptions pipeline;
  std::vector<CLI::Option*> config_opts;
  CLI::Option* seed_opt = nullptr;
};

void cmd_segment(Context ctx, const SegmentArgs& a) {
  PipelineConfig cfg;
  std::string membership;
  if (!a.manifest.empty()) {
    for (const CLI::Option* opt : a.config_opts) {
      if (opt->count() > 0) throw UsageError(opt->get_name() + " cannot be combined with --manifest");
    }
    if (a.seed_opt->count() > 0) throw UsageError("--seed cannot be combined with --manifest");
    const Manifest m = manifest_from_json(read_json(a.manifest));
    cfg = m.config;
    ctx.globals.seed = m.seed;
    membership = m.membership_override;
    if (!membership.empty()) cfg.fuzzy = load_membership(membership);
    cfg.em.seed = derive_seed(m.seed, "init");
  } else {
    if (a.pipeline.method.empty()) throw UsageError("--method is required (em, dem or adem)");
    cfg = build_config(a.pipeline, ctx.globals.seed);
    membership = a.pipeline.membership;
  }

  const GrayImage img = load_image(a.input);
  const Segmentation seg = segment(img, cfg);
  note_convergence(ctx, seg.mixture);
  write_labels(ctx.globals, "", seg.labels);
  write_json(artifact(ctx.globals, ".mixture.json"), mixture_to_json(seg.mixture));
  write_json(artifact(ctx.globals, ".run.json"), manifest_to_json(cfg, ctx.globals.seed, membership));
  if (a.dump) dump_features(ctx.globals, ".features", seg.features, cfg.fuzzy_system().ncn_max);
  ctx.info("wrote " + ctx.globals.out + ".labels.pgm");
}

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string image;
  std::vector<std::string> compare;
  int contour_radius = 1;
  PipelineOptions pipeline;
};

void cmd_eval(const Context& ctx, const EvalArgs& a) {
  const bool comparing = !a.compare.empty();
  if (comparing == !a.pred.empty()) throw UsageError("give either --pred or --compare (with --image)");
  if (comparing && a.image.empty()) throw UsageError("--compare needs --image");
  const LabelMap truth = load_labels(a.truth, 0);

  Json report;
  std::string table;
  if (comparing) {
    std::vector<SegMethod> methods;
    for (const auto& name : a.compare) {
      try {
        methods.push_back(parse_method(name));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    const GrayImage img = load_image(a.image);
    if (img.width() != truth.width() || img.height() != truth.height()) {
      throw UsageError("image and truth differ in dimensions");
    }
    const PipelineConfig cfg = build_config(a.pipeline, ctx.globals.seed);
    const Comparison cmp = compare_methods(img, truth, methods, cfg, a.contour_radius);
    note_convergence(ctx, cmp.mixture);
    report = comparison_to_json(cmp);
    table = comparison_table(cmp);
  } else {
    LabelMap pred = load_labels(a.pred, truth.k());
    if (pred.width() != truth.width() || pred.height() != truth.height()) {
      throw UsageError("predicted and truth label maps differ in dimensions");
    }
    if (pred.k() != truth.k()) throw DataError("prediction has more classes than the truth");
    const SegReport r = score(align_labels(pred, truth), truth, contour_mask(truth, a.contour_radius));
    report = report_to_json(r);
    table = comparison_table({"PRED"}, {r});
  }
  write_json(artifact(ctx.globals, ".report.json"), report);
  write_file(artifact(ctx.globals, ".table.txt"), table);
  if (!ctx.globals.quiet) *ctx.out << table;
}

struct SweepArgs {
  std::string input;
  std::string truth;
  std::vector<double> sigmas;
  PipelineOptions pipeline;
};

void cmd_sweep(const Context& ctx, const SweepArgs& a) {
  if (a.sigmas.empty()) throw UsageError("--sigma needs at least one value");
  if (!a.pipeline.membership.empty()) throw UsageError("--membership fixes the sigma sets; it cannot be swept");
  std::vector<double> sigmas = a.sigmas;
  std::sort(sigmas.begin(), sigmas.end());
  if (std::adjacent_find(sigmas.begin(), sigmas.end()) != sigmas.end()) throw UsageError("--sigma values repeat");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("--sigma values must be positive");
  }

  PipelineOptions po = a.pipeline;
  po.method = "adem";
  PipelineConfig cfg = build_config(po, ctx.globals.seed);
  const GrayImage img = load_image(a.input);
  std::optional<LabelMap> truth;
  MaskGrid mask;
  if (!a.truth.empty()) {
    truth = load_labels(a.truth, 0);
    if (truth->width() != img.width() || truth->height() != img.height()) {
      throw UsageError("image and truth differ in dimensions");
    }
    cfg.em.k = truth->k();
    mask = contour_mask(*truth);
  }

  // The mixture and the features do not depend on sigma; only p does.
  const GaussianMixture mixture = fit_em_histogram(gray_histogram(img), cfg.em);
  note_convergence(ctx, mixture);
  const FeatureMaps base = compute_features(img, cfg.window, cfg.s_threshold);

  Json rows = Json::array();
  for (double s : sigmas) {
    FeatureMaps fm = base;
    fill_weight_map(fm, FuzzySystem::make_default(s, cfg.window.radius));
    LabelMap labels = classify(img, SegMethod::adem, mixture, fm, cfg.centers);
    if (truth) labels = align_labels(labels, *truth);
    const std::string stem = ".sigma" + format_number(s);
    write_labels(ctx.globals, stem, labels);
    Json row;
    row["sigma"] = s;
    row["labels"] = fs::path(ctx.globals.out + stem + ".lbl").filename().string();
    if (truth) row["report"] = report_to_json(score(labels, *truth, mask));
    rows.push_back(std::move(row));
  }
  Json j;
  j["method"] = "adem";
  j["seed"] = ctx.globals.seed;
  j["mixture"] = mixture_to_json(mixture);
  j["rows"] = std::move(rows);
  write_json(artifact(ctx.globals, ".summary.json"), j);
  ctx.info("wrote " + ctx.globals.out + ".summary.json");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;

  CLI::App app{"Adaptive-distance EM segmentation of gray-level images", "adem"};
  app.fallthrough();
  app.require_subcommand(1);
  CLI::Option* seed_opt = app.add_option("--seed", ctx.globals.seed, "run seed");
  app.add_option("--out", ctx.globals.out, "output path prefix");
  app.add_flag("--quiet", ctx.globals.quiet, "suppress progress messages");

  std::function<void()> action;

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand("generate", "write a ground-truthed phantom");
  generate->add_option("--layout", gen.layout, "bands, disks or fine_structures");
  generate->add_option("--size", gen.size, "WxH");
  generate->add_option("--levels", gen.levels, "gray level per class")->delimiter(',')->check(CLI::Range(0, 255));
  generate->callback([&] { action = [&] { cmd_generate(ctx, gen); }; });

  NoiseArgs noise;
  CLI::App* noise_cmd = app.add_subcommand("noise", "add seeded noise to a PGM");
  noise_cmd->add_option("input", noise.input, "input PGM")->required();
  noise_cmd->add_option("--kind", noise.kind, "impulse or gaussian")->check(CLI::IsMember({"impulse", "gaussian"}));
  noise_cmd->add_option("--amount", noise.amount, "impulse fraction or noise std / 255")->check(CLI::Range(0.0, 1.0));
  noise_cmd->callback([&] { action = [&] { cmd_noise(ctx, noise); }; });

  FeaturesArgs feat;
  CLI::App* features = app.add_subcommand("features", "dump mean, sigma, NCN and p grids");
  features->add_option("input", feat.input, "input PGM")->required();
  add_pipeline_options(features, feat.pipeline, false);
  features->callback([&] { action = [&] { cmd_features(ctx, feat); }; });

  SegmentArgs seg;
  seg.seed_opt = seed_opt;
  CLI::App* segment_cmd = app.add_subcommand("segment", "segment a PGM with em, dem or adem");
  segment_cmd->add_option("input", seg.input, "input PGM")->required();
  seg.config_opts = add_pipeline_options(segment_cmd, seg.pipeline, true);
  seg.config_opts.push_back(segment_cmd->add_option("--method", seg.pipeline.method, "em, dem or adem")
                                ->check(CLI::IsMember({"em", "dem", "adem"})));
  segment_cmd->add_option("--manifest", seg.manifest, "re-run from a run manifest");
  segment_cmd->add_flag("--dump-features", seg.dump, "also write the feature grids");
  segment_cmd->callback([&] { action = [&] { cmd_segment(ctx, seg); }; });

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand("eval", "score label maps against ground truth");
  eval->add_option("--truth", ev.truth, "truth label map (.lbl or PGM)")->required();
  eval->add_option("--pred", ev.pred, "predicted label map (.lbl or PGM)");
  eval->add_option("--compare", ev.compare, "methods to segment and compare")->delimiter(',');
  eval->add_option("--image", ev.image, "image segmented by --compare");
  eval->add_option("--contour-radius", ev.contour_radius, "contour zone radius")->check(CLI::Range(1, 64));
  add_pipeline_options(eval, ev.pipeline, false);
  eval->callback([&] { action = [&] { cmd_eval(ctx, ev); }; });

  SweepArgs sw;
  CLI::App* sweep = app.add_subcommand("sweep", "run adem over several sigma breakpoints");
  sweep->add_option("input", sw.input, "input PGM")->required();
  sweep->add_option("--sigma", sw.sigmas, "sigma breakpoints")->delimiter(',')->required();
  sweep->add_option("--truth", sw.truth, "truth label map for error counts");
  add_pipeline_options(sweep, sw.pipeline, true);
  sweep->callback([&] { action = [&] { cmd_sweep(ctx, sw); }; });

  auto usage = [&]() -> std::string {
    const auto subs = app.get_subcommands();
    return subs.empty() ? app.help() : subs.front()->help();
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << usage();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << usage();
    return kUsage;
  }

  try {
    action();
    return kOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << usage();
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace adem::cli
