#include "lfm/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lfm/config.hpp"
#include "lfm/errors.hpp"
#include "lfm/evaluate.hpp"
#include "lfm/experiment.hpp"
#include "lfm/io.hpp"
#include "lfm/rng.hpp"
#include "lfm/stats.hpp"
#include "lfm/textguide.hpp"
#include "lfm/verify.hpp"

namespace lfm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// The parsed --config document plus where relative paths resolve from.
struct RunContext {
  json doc = json::object();
  fs::path base_dir = ".";
  std::uint64_t seed = 0;
};

RunContext load(const Options& options) {
  RunContext ctx;
  if (options.config) {
    ctx.doc = io::read_json(*options.config);
    ctx.base_dir = options.config->parent_path();
    if (ctx.base_dir.empty()) ctx.base_dir = ".";
  }
  config::check_keys(ctx.doc,
                     {"seed", "synthetic", "longtail", "train", "analyze", "eval", "sweep", "data"},
                     "config");
  if (auto it = ctx.doc.find("seed"); it != ctx.doc.end()) {
    if (!config::is_non_negative_integer(*it)) throw ConfigError("config.seed must be a non-negative integer");
    ctx.seed = it->get<std::uint64_t>();
  }
  if (options.seed) ctx.seed = *options.seed;
  if (auto it = ctx.doc.find("data"); it != ctx.doc.end()) {
    config::check_keys(*it, {"train", "val", "catalog", "head", "input"}, "data");
  }
  return ctx;
}

const json& section(const RunContext& ctx, const char* name) {
  static const json empty = json::object();
  auto it = ctx.doc.find(name);
  return it == ctx.doc.end() ? empty : *it;
}

std::optional<fs::path> data_path(const RunContext& ctx, const char* key) {
  const json& data = section(ctx, "data");
  auto it = data.find(key);
  if (it == data.end()) return std::nullopt;
  if (!it->is_string()) throw ConfigError(std::string("data.") + key + " must be a path string");
  fs::path p = it->get<std::string>();
  return p.is_absolute() ? p : ctx.base_dir / p;
}

fs::path require_path(const RunContext& ctx, const char* key) {
  auto p = data_path(ctx, key);
  if (!p) throw ConfigError(std::string("config is missing data.") + key);
  return *p;
}

json resolved_data(const RunContext& ctx) {
  json data = json::object();
  for (const char* key : {"train", "val", "catalog", "head", "input"}) {
    if (auto p = data_path(ctx, key)) data[key] = p->generic_string();
  }
  return data;
}

fs::path prepare_out(const Options& options) {
  if (!options.out) throw ConfigError("--out DIR is required for this command");
  const fs::path& dir = *options.out;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !options.force) {
      throw ConfigError(dir.string() + " is not empty; pass --force to write into it");
    }
  } else {
    fs::create_directories(dir);
  }
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
}

TrainConfig resolve_train(const RunContext& ctx, const Options& options) {
  TrainConfig config = config::train_from_json(section(ctx, "train"));
  if (options.arm) config.arm = parse_arm(*options.arm);
  config.seed = derive_seed(ctx.seed, stream::kTrain);
  return config;
}

json train_json(const TrainConfig& config) {
  json out = config::to_json(config);
  out.erase("seed");
  return out;
}

struct EvalSettings {
  std::size_t many_above = 100;
  std::size_t few_below = 20;
  bool confusion_csv = false;
  bool dump_features = false;
};

EvalSettings resolve_eval(const RunContext& ctx) {
  const json& obj = section(ctx, "eval");
  config::check_keys(obj, {"many_above", "few_below", "confusion_csv", "dump_features"}, "eval");
  EvalSettings s;
  try {
    s.many_above = obj.value("many_above", s.many_above);
    s.few_below = obj.value("few_below", s.few_below);
    s.confusion_csv = obj.value("confusion_csv", s.confusion_csv);
    s.dump_features = obj.value("dump_features", s.dump_features);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad eval section: ") + e.what());
  }
  if (s.few_below > s.many_above + 1) throw ConfigError("eval.few_below must not exceed many_above + 1");
  return s;
}

json eval_json(const EvalSettings& s) {
  return {{"many_above", s.many_above},
          {"few_below", s.few_below},
          {"confusion_csv", s.confusion_csv},
          {"dump_features", s.dump_features}};
}

void check_catalog_matches(const EmbeddingSet& set, const ClassCatalog& catalog, const char* what) {
  if (set.dim != catalog.dim()) {
    throw DataError(std::string(what) + " dimension differs from the catalog text features");
  }
  set.validate(catalog.num_classes());
}

std::string fmt_optional(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream out;
  out << std::fixed << std::setprecision(1) << *v;
  return out.str();
}

std::string summary_line(const EvalReport& r) {
  auto show = [](const std::optional<double>& v) { return v ? fmt_optional(v) : std::string("n/a"); };
  return "many " + show(r.many()) + "  med " + show(r.medium()) + "  few " + show(r.few()) +
         "  all " + show(r.overall());
}

}  // namespace

int cmd_synth(const Options& options, std::ostream& log) {
  RunContext ctx = load(options);
  if (!ctx.doc.contains("synthetic")) throw ConfigError("synth needs a 'synthetic' section");
  SyntheticSpec spec = config::synthetic_from_json(section(ctx, "synthetic"));
  spec.seed = derive_seed(ctx.seed, stream::kSynthetic);
  json resolved = {{"seed", ctx.seed}, {"synthetic", config::to_json(spec)}};

  SyntheticData synth = generate_synthetic(spec);
  EmbeddingSet train = std::move(synth.train);
  ClassCatalog catalog = std::move(synth.catalog);
  if (ctx.doc.contains("longtail")) {
    LongTailSpec lt = config::longtail_from_json(section(ctx, "longtail"), spec.num_classes,
                                                 spec.train_per_class);
    auto counts = build_longtail_counts(lt);
    auto subset = subset_longtail(train, catalog, counts, derive_seed(ctx.seed, stream::kSubset));
    train = std::move(subset.first);
    catalog = std::move(subset.second);
    resolved["longtail"] = config::to_json(lt);
  }

  fs::path out = prepare_out(options);
  io::write_embeddings(out / "train.lfme", train);
  io::write_embeddings(out / "val.lfme", synth.val);
  io::write_catalog(out / "catalog.json", catalog);
  io::write_json(out / "resolved_config.json", resolved);
  log << "wrote " << train.size() << " train rows, " << synth.val.size() << " val rows, "
      << catalog.num_classes() << " classes to " << out.string() << '\n';
  return kOk;
}

int cmd_make_lt(const Options& options, std::ostream& log) {
  RunContext ctx = load(options);
  const fs::path input = require_path(ctx, "input");
  const fs::path catalog_path = require_path(ctx, "catalog");
  if (!ctx.doc.contains("longtail")) throw ConfigError("make-lt needs a 'longtail' section");

  ClassCatalog catalog = io::read_catalog(catalog_path);
  EmbeddingSet balanced = io::read_embeddings(input);
  check_catalog_matches(balanced, catalog, "input");
  auto available = balanced.class_counts(catalog.num_classes());
  const std::size_t largest = *std::max_element(available.begin(), available.end());
  LongTailSpec lt = config::longtail_from_json(section(ctx, "longtail"), catalog.num_classes(), largest);
  auto counts = build_longtail_counts(lt);
  auto [train, updated] = subset_longtail(balanced, catalog, counts, derive_seed(ctx.seed, stream::kSubset));

  json resolved = {{"seed", ctx.seed}, {"longtail", config::to_json(lt)}, {"data", resolved_data(ctx)}};
  fs::path out = prepare_out(options);
  io::write_embeddings(out / "train.lfme", train);
  io::write_catalog(out / "catalog.json", updated);
  io::write_json(out / "resolved_config.json", resolved);
  log << "kept " << train.size() << " of " << balanced.size() << " rows (gamma " << lt.gamma << ")\n";
  return kOk;
}

int cmd_analyze(const Options& options, std::ostream& log) {
  RunContext ctx = load(options);
  const json& obj = section(ctx, "analyze");
  config::check_keys(obj, {"tau", "csv"}, "analyze");
  double tau = 0.05;
  bool csv = false;
  try {
    tau = obj.value("tau", tau);
    csv = obj.value("csv", csv);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad analyze section: ") + e.what());
  }
  ClassCatalog catalog = io::read_catalog(require_path(ctx, "catalog"));
  LocalSamplingModel model = build_sampling_model(catalog, tau);

  json resolved = {{"seed", ctx.seed}, {"analyze", {{"tau", tau}, {"csv", csv}}}, {"data", resolved_data(ctx)}};
  std::vector<double> counts(catalog.counts.begin(), catalog.counts.end());
  auto effective = effective_class_distribution(model);
  auto independent = effective_class_distribution_independent(model);
  json p_cond = json::array();
  for (Eigen::Index i = 0; i < model.p_cond.rows(); ++i) {
    p_cond.push_back(std::vector<double>(model.p_cond.row(i).begin(), model.p_cond.row(i).end()));
  }
  json report = {{"config", resolved},
                 {"tau", tau},
                 {"names", catalog.names},
                 {"counts", catalog.counts},
                 {"gamma", imbalance_factor(counts)},
                 {"p_first", model.p_first},
                 {"p_cond", std::move(p_cond)},
                 {"p_effective", effective},
                 {"gamma_effective", imbalance_factor(effective)},
                 {"p_effective_independent", independent},
                 {"gamma_effective_independent", imbalance_factor(independent)}};

  fs::path out = prepare_out(options);
  io::write_json(out / "analysis.json", report);
  io::write_json(out / "resolved_config.json", resolved);
  if (csv) {
    std::ostringstream text;
    text << std::setprecision(17);
    for (Eigen::Index i = 0; i < model.p_cond.rows(); ++i) {
      for (Eigen::Index j = 0; j < model.p_cond.cols(); ++j) {
        text << (j ? "," : "") << model.p_cond(i, j);
      }
      text << '\n';
    }
    write_text(out / "p_cond.csv", text.str());
  }
  log << "gamma " << imbalance_factor(counts) << " -> effective " << imbalance_factor(effective)
      << " (tau " << tau << ")\n";
  return kOk;
}

int cmd_train(const Options& options, std::ostream& log) {
  RunContext ctx = load(options);
  TrainConfig config = resolve_train(ctx, options);
  EvalSettings eval_settings = resolve_eval(ctx);
  ClassCatalog catalog = io::read_catalog(require_path(ctx, "catalog"));
  EmbeddingSet data = io::read_embeddings(require_path(ctx, "train"));
  check_catalog_matches(data, catalog, "train");
  EmbeddingSet val;
  val.dim = data.dim;
  val.split = SplitTag::val;
  if (auto p = data_path(ctx, "val")) {
    val = io::read_embeddings(*p, SplitTag::val);
    check_catalog_matches(val, catalog, "val");
  }

  TrainedHead head = train(data, val, catalog, config);

  json resolved = {{"seed", ctx.seed},
                   {"train", train_json(config)},
                   {"eval", eval_json(eval_settings)},
                   {"data", resolved_data(ctx)}};
  json metrics = {{"config", resolved}, {"history", config::head_to_json(head)["history"]}};
  if (val.size() > 0) {
    EvalReport report = evaluate(head, val, catalog,
                                 shot_split(catalog.counts, eval_settings.many_above, eval_settings.few_below));
    metrics["eval"] = report_to_json(report);
    log << to_string(config.arm) << "+" << to_string(config.loss) << ": " << summary_line(report) << '\n';
  }
  fs::path out = prepare_out(options);
  io::write_json(out / "head.json", config::head_to_json(head));
  io::write_json(out / "metrics.json", metrics);
  io::write_json(out / "resolved_config.json", resolved);
  return kOk;
}

int cmd_eval(const Options& options, std::ostream& log) {
  RunContext ctx = load(options);
  EvalSettings settings = resolve_eval(ctx);
  ClassCatalog catalog = io::read_catalog(require_path(ctx, "catalog"));
  EmbeddingSet val = io::read_embeddings(require_path(ctx, "val"), SplitTag::val);
  check_catalog_matches(val, catalog, "val");
  TrainedHead head = TrainedHead::zero_shot(val.dim);
  if (auto p = data_path(ctx, "head")) head = config::head_from_json(io::read_json(*p));
  if (head.dim != val.dim) throw DataError("head dimension differs from the validation features");

  EvalReport report =
      evaluate(head, val, catalog, shot_split(catalog.counts, settings.many_above, settings.few_below));
  json resolved = {{"seed", ctx.seed}, {"eval", eval_json(settings)}, {"data", resolved_data(ctx)}};
  json metrics = report_to_json(report);
  metrics["config"] = resolved;

  fs::path out = prepare_out(options);
  io::write_json(out / "metrics.json", metrics);
  io::write_json(out / "resolved_config.json", resolved);
  if (settings.confusion_csv) write_text(out / "confusion.csv", confusion_csv(report, catalog));
  if (settings.dump_features) {
    // Adapted unit features f_I of every validation row, for external plotting.
    std::ostringstream text;
    text << std::setprecision(9) << "label";
    for (std::size_t j = 0; j < head.dim; ++j) text << ",f" << j;
    text << '\n';
    for (std::size_t i = 0; i < val.size(); ++i) {
      Vector f = forward(head, val.features.row(static_cast<Eigen::Index>(i)).transpose());
      text << val.labels[i];
      for (Eigen::Index j = 0; j < f.size(); ++j) text << ',' << f(j);
      text << '\n';
    }
    write_text(out / "features.csv", text.str());
  }
  log << summary_line(report) << '\n';
  return kOk;
}

int cmd_verify(const Options& options, std::ostream& log) {
  RunContext ctx = load(options);
  auto results = verify::run_all(ctx.seed);
  bool ok = true;
  for (const auto& r : results) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  if (options.out) {
    fs::path out = prepare_out(options);
    io::write_json(out / "verify.json", {{"seed", ctx.seed}, {"passed", ok}, {"checks", verify::to_json(results)}});
  }
  return ok ? kOk : kVerificationFailed;
}

int cmd_sweep(const Options& options, std::ostream& log) {
  RunContext ctx = load(options);
  const json& obj = section(ctx, "sweep");
  config::check_keys(obj, {"alphas", "taus", "seeds"}, "sweep");
  TrainConfig base = resolve_train(ctx, options);
  EvalSettings settings = resolve_eval(ctx);
  std::vector<double> alphas{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> taus{base.stage2.tau};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  try {
    alphas = obj.value("alphas", alphas);
    taus = obj.value("taus", taus);
    seeds = obj.value("seeds", seeds);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad sweep section: ") + e.what());
  }
  if (alphas.empty() || taus.empty() || seeds.empty()) throw ConfigError("sweep grids must be non-empty");

  const bool synthetic = ctx.doc.contains("synthetic");
  BenchmarkConfig bench;
  json resolved = {{"seed", ctx.seed},
                   {"train", train_json(base)},
                   {"eval", eval_json(settings)},
                   {"sweep", {{"alphas", alphas}, {"taus", taus}, {"seeds", seeds}}}};
  BenchmarkData files;
  if (synthetic) {
    bench.synthetic = config::synthetic_from_json(section(ctx, "synthetic"));
    LongTailSpec lt = config::longtail_from_json(section(ctx, "longtail"), bench.synthetic.num_classes,
                                                 bench.synthetic.train_per_class);
    if (lt.n_max != bench.synthetic.train_per_class) {
      throw ConfigError("sweep on synthetic data uses n_max = synthetic.train_per_class");
    }
    bench.gamma = lt.gamma;
    resolved["synthetic"] = config::to_json(bench.synthetic);
    resolved["longtail"] = config::to_json(lt);
  } else {
    files.catalog = io::read_catalog(require_path(ctx, "catalog"));
    files.train = io::read_embeddings(require_path(ctx, "train"));
    files.val = io::read_embeddings(require_path(ctx, "val"), SplitTag::val);
    check_catalog_matches(files.train, files.catalog, "train");
    check_catalog_matches(files.val, files.catalog, "val");
    resolved["data"] = resolved_data(ctx);
  }

  std::ostringstream rows;
  rows << "alpha,tau,seed,many,med,few,all\n";
  std::ostringstream summary;
  summary << "alpha,tau,median_many,median_med,median_few,median_all\n";
  for (double alpha : alphas) {
    for (double tau : taus) {
      std::vector<double> many, med, few, all;
      for (auto s : seeds) {
        const std::uint64_t run_seed = derive_seed(ctx.seed, s);
        BenchmarkData generated;
        if (synthetic) generated = make_benchmark_data(bench, run_seed);
        const BenchmarkData& data = synthetic ? generated : files;
        TrainConfig cfg = base;
        cfg.stage1.alpha = cfg.stage2.alpha = alpha;
        cfg.stage1.tau = cfg.stage2.tau = tau;
        cfg.seed = derive_seed(run_seed, stream::kTrain);
        TrainedHead head = train(data.train, data.val, data.catalog, cfg);
        EvalReport r = evaluate(head, data.val, data.catalog,
                                shot_split(data.catalog.counts, settings.many_above, settings.few_below));
        rows << alpha << ',' << tau << ',' << s << ',' << fmt_optional(r.many()) << ','
             << fmt_optional(r.medium()) << ',' << fmt_optional(r.few()) << ','
             << fmt_optional(r.overall()) << '\n';
        if (r.many()) many.push_back(*r.many());
        if (r.medium()) med.push_back(*r.medium());
        if (r.few()) few.push_back(*r.few());
        if (r.overall()) all.push_back(*r.overall());
      }
      auto med_of = [](const std::vector<double>& v) {
        return v.empty() ? std::optional<double>{} : std::optional<double>{stats::median(v)};
      };
      summary << alpha << ',' << tau << ',' << fmt_optional(med_of(many)) << ','
              << fmt_optional(med_of(med)) << ',' << fmt_optional(med_of(few)) << ','
              << fmt_optional(med_of(all)) << '\n';
      log << "alpha " << alpha << " tau " << tau << ": median few " << fmt_optional(med_of(few))
          << ", many " << fmt_optional(med_of(many)) << '\n';
    }
  }
  fs::path out = prepare_out(options);
  write_text(out / "sweep.csv", rows.str());
  write_text(out / "sweep_summary.csv", summary.str());
  io::write_json(out / "resolved_config.json", resolved);
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local feature mixup for long-tailed classification over precomputed embeddings", "lfm"};
  app.require_subcommand(1);

  Options options;
  std::string config_path, out_dir, arm;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool with_arm) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "root seed; every module seed is derived from it");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--force", options.force, "write into a non-empty output directory");
    if (with_arm) sub->add_option("--arm", arm, "mixing arm: none, mixup, remix or lfm");
  };

  using Handler = int (*)(const Options&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Handler, bool>> commands = {
      {"synth", "write a synthetic embedding benchmark", cmd_synth, false},
      {"make-lt", "subset a balanced embedding file to a long-tailed profile", cmd_make_lt, false},
      {"analyze", "local-sampling distribution and effective imbalance factor", cmd_analyze, false},
      {"train", "two-stage training of the cosine head", cmd_train, true},
      {"eval", "shot-split evaluation of a head (zero-shot if none given)", cmd_eval, false},
      {"verify", "run the built-in numerical verification suite", cmd_verify, false},
      {"sweep", "grid over label-shift alpha and sampling temperature", cmd_sweep, true},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& [name, help, handler, with_arm] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, with_arm);
    subs.emplace_back(sub, handler);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  for (const auto& [sub, handler] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--config")) options.config = config_path;
    if (sub->count("--seed")) options.seed = seed;
    if (sub->count("--out")) options.out = out_dir;
    if (auto* opt = sub->get_option_no_throw("--arm"); opt && opt->count()) options.arm = arm;
    try {
      return handler(options, out);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kConfigError;
    } catch (const DataError& e) {
      err << "data error: " << e.what() << '\n';
      return kDataError;
    } catch (const DivergenceError& e) {
      err << "training error: " << e.what() << '\n';
      return kDataError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kFailure;
    }
  }
  return kConfigError;
}

}  // namespace lfm::cli
