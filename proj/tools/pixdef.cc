// pixdef: command-line front end for the deflection defense.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pixdef/attacks.h"
#include "pixdef/classifier.h"
#include "pixdef/dataset.h"
#include "pixdef/deflect.h"
#include "pixdef/error.h"
#include "pixdef/image_io.h"
#include "pixdef/metrics.h"
#include "pixdef/pipeline.h"
#include "pixdef/shrinkage.h"

namespace fs = std::filesystem;
using namespace pixdef;

namespace {

constexpr std::uint64_t kDataStream = 0x64617461;  // "data"

// --seed, else DEFLECT_SEED, else a fresh one that gets printed.
struct SeedFlag {
  std::optional<std::uint64_t> value;

  void add(CLI::App* app) {
    app->add_option("--seed", value, "Random seed (falls back to $DEFLECT_SEED, else drawn and printed)");
  }

  std::uint64_t resolve() const {
    if (value) return *value;
    if (const char* env = std::getenv("DEFLECT_SEED"); env && *env) {
      try {
        std::size_t pos = 0;
        const auto v = std::stoull(env, &pos);
        if (pos == std::string(env).size()) return v;
      } catch (const std::exception&) {
      }
      throw Error("DEFLECT_SEED is not an unsigned integer: '" + std::string(env) + "'");
    }
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    std::cout << "seed: " << seed << '\n';
    return seed;
  }
};

// Defence config flags. Only flags given on the command line override the
// config file; the rest keep the file (or built-in) values.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> given;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App* app, bool with_ensemble) {
    const DefenseConfig d;
    app->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    std::ostringstream sigma;
    sigma << d.shrinkage.sigma;
    flag(app, "--sigma", "sigma", "Noise scale for threshold selection", sigma.str());
    flag(app, "--window", "window", "Deflection window apothem r", std::to_string(d.deflection.window));
    flag(app, "--deflections", "deflections", "Deflection count K",
         std::to_string(d.deflection.deflections));
    flag(app, "--targeted", "targeted", "Gate deflection with an activation map (true/false)", "true");
    flag(app, "--k-top", "k_top", "Classes combined into the robust activation map",
         std::to_string(d.k_top));
    flag(app, "--wavelet", "wavelet", "haar, db1 or db2", "db1");
    flag(app, "--levels", "levels", "Wavelet levels (capped by image size)",
         std::to_string(d.wavelet.levels));
    flag(app, "--threshold,--rule", "threshold", "soft, hard or none", "soft");
    flag(app, "--selector", "selector", "bayes, visu, sure or fixed", "bayes");
    flag(app, "--fixed-threshold", "fixed_threshold", "Threshold for the fixed selector", "0");
    flag(app, "--estimate-sigma", "estimate_sigma", "Estimate sigma from the finest diagonal band", "false");
    if (with_ensemble) {
      flag(app, "--ensemble", "ensemble", "Ensemble size for the voted column",
           std::to_string(d.ensemble_size));
    }
  }

  void flag(CLI::App* app, const std::string& name, const std::string& key,
            const std::string& help, const std::string& def) {
    auto* opt = app->add_option(name, given[key], help)->default_str(def);
    options.emplace_back(key, opt);
  }

  DefenseConfig resolve() const {
    DefenseConfig cfg = config_path.empty() ? DefenseConfig{} : load_config(config_path);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) apply_config_value(cfg, key, given.at(key));
    }
    validate(cfg);
    return cfg;
  }
};

struct AttackFlags {
  std::string kind = "fgsm";
  AttackBudget budget;

  void add(CLI::App* app) {
    app->add_option("--attack", kind, "none, fgsm or igsm")->capture_default_str();
    app->add_option("--epsilon", budget.epsilon, "Max-norm budget")->capture_default_str();
    app->add_option("--step", budget.step, "IGSM step size")->capture_default_str();
    app->add_option("--iterations", budget.max_iterations, "IGSM iterations")->capture_default_str();
  }

  AttackSpec resolve() const {
    const auto k = parse_attack_kind(kind);
    if (!k) throw Error("unknown attack '" + kind + "'");
    validate(budget);
    return {*k, budget};
  }
};

struct DataFlags {
  std::string manifest;
  std::size_t synthetic = 0;
  std::size_t classes = SyntheticSpec{}.classes;

  void add(CLI::App* app) {
    auto* m = app->add_option("--manifest", manifest, "CSV manifest (path,label)")->check(CLI::ExistingFile);
    auto* s = app->add_option("--synthetic", synthetic, "Generate N synthetic images instead");
    m->excludes(s);
    app->add_option("--classes", classes, "Classes for --synthetic")->capture_default_str();
  }

  Dataset resolve(std::uint64_t seed) const {
    if (!manifest.empty()) return load_manifest(manifest);
    if (synthetic == 0) throw Error("give --manifest or --synthetic N");
    SyntheticSpec spec;
    spec.classes = classes;
    return make_synthetic_dataset(spec, synthetic, derive_seed(seed, kDataStream));
  }
};

std::string join_args(int argc, char** argv) {
  std::string out;
  for (int i = 1; i < argc; ++i) out += (i > 1 ? " " : "") + std::string(argv[i]);
  return out;
}

// <output>.config: provenance comments then the effective config, which
// load_config accepts as is.
void write_sidecar(const fs::path& output, const std::string& command,
                   std::optional<std::uint64_t> seed, const std::string& args,
                   const std::string& body) {
  fs::path path = output;
  path += ".config";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "# pixdef " << command << '\n'
      << "# args: " << args << '\n'
      << "# seed=" << (seed ? std::to_string(*seed) : "none") << '\n'
      << body;
}

std::unique_ptr<MapProvider> make_provider(const std::string& map_path,
                                           const LinearSoftmaxClassifier* clf,
                                           const DefenseConfig& cfg) {
  if (!map_path.empty()) return std::make_unique<FileMapProvider>(map_path);
  if (clf) return std::make_unique<ClassifierCamProvider>(*clf, cfg.k_top);
  if (cfg.use_targeted) {
    std::cerr << "note: no --map or --model given; targeted deflection uses an all-zero map\n";
  }
  return std::make_unique<ZeroMapProvider>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

bool wants_json(const fs::path& p) { return p.extension() == ".json"; }

void print_summary(const EvalSummary& s) {
  const auto dr = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("undefined");
  };
  std::cout << "images: " << s.evaluated << " of " << s.total << " clean-correct\n"
            << "attacked accuracy: " << s.attacked_acc << '\n'
            << "defended accuracy: " << s.defended_acc << '\n'
            << "destruction rate: " << dr(s.destruction_rate) << '\n';
  if (s.has_ensemble) {
    std::cout << "defended accuracy (ensemble): " << s.defended_ens_acc << '\n'
              << "destruction rate (ensemble): " << dr(s.destruction_rate_ens) << '\n';
  }
  std::cout << "defended clean accuracy: " << s.defended_clean_acc << '\n'
            << "mean normalized rmse: " << s.mean_l2 << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pixel deflection and wavelet denoising defense"};
  app.require_subcommand(1);
  app.fallthrough();
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "Threads (evaluation runs images in parallel)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  const std::string args = join_args(argc, argv);

  // deflect
  auto* deflect_cmd = app.add_subcommand("deflect", "Pixel deflection on one image");
  std::string d_in, d_out, d_map, d_trace;
  DeflectionParams d_params;
  SeedFlag d_seed;
  deflect_cmd->add_option("-i,--input", d_in, "Input image (PNG or f32grid)")->required()->check(CLI::ExistingFile);
  deflect_cmd->add_option("-o,--output", d_out, "Output image (.png, else f32grid)")->required();
  deflect_cmd->add_option("--window", d_params.window, "Window apothem r")->capture_default_str();
  deflect_cmd->add_option("--deflections", d_params.deflections, "Deflection count K")->capture_default_str();
  deflect_cmd->add_option("--map", d_map, "Activation map (f32grid, values in [0,1]) for targeted deflection");
  deflect_cmd->add_option("--trace", d_trace, "Write the per-iteration trace CSV");
  d_seed.add(deflect_cmd);

  // denoise
  auto* denoise_cmd = app.add_subcommand("denoise", "Wavelet denoising in YCbCr");
  std::string n_in, n_out;
  ConfigFlags n_flags;
  denoise_cmd->add_option("-i,--input", n_in, "Input image")->required()->check(CLI::ExistingFile);
  denoise_cmd->add_option("-o,--output", n_out, "Output image")->required();
  n_flags.add(denoise_cmd, false);

  // defend
  auto* defend_cmd = app.add_subcommand("defend", "Full defense: deflect, denoise");
  std::string f_in, f_out, f_map, f_model;
  ConfigFlags f_flags;
  SeedFlag f_seed;
  defend_cmd->add_option("-i,--input", f_in, "Input image")->required()->check(CLI::ExistingFile);
  defend_cmd->add_option("-o,--output", f_out, "Output image")->required();
  defend_cmd->add_option("--map", f_map, "Activation map file (f32grid)")->check(CLI::ExistingFile);
  defend_cmd->add_option("--model", f_model, "Classifier header; its activation map gates deflection")
      ->check(CLI::ExistingFile);
  f_flags.add(defend_cmd, false);
  f_seed.add(defend_cmd);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Attack, defend and score a dataset");
  DataFlags e_data;
  AttackFlags e_attack;
  ConfigFlags e_flags;
  SeedFlag e_seed;
  std::string e_model, e_report, e_records;
  bool e_no_ensemble = false, e_runtime = false;
  e_data.add(eval_cmd);
  eval_cmd->add_option("--model", e_model, "Classifier header")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", e_report, "Report path (.json for JSON, else CSV)")->required();
  eval_cmd->add_option("--records", e_records, "Per-image records CSV");
  eval_cmd->add_flag("--no-ensemble", e_no_ensemble, "Skip the ensemble column");
  eval_cmd->add_flag("--runtime", e_runtime, "Include wall-clock runtime in the report");
  e_attack.add(eval_cmd);
  e_flags.add(eval_cmd, true);
  e_seed.add(eval_cmd);

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "Sweep sigma x window x deflections");
  DataFlags g_data;
  AttackFlags g_attack;
  ConfigFlags g_flags;
  SeedFlag g_seed;
  std::string g_model, g_report;
  GridAxes axes{{0.02, 0.04, 0.06}, {5, 10, 15}, {50, 100, 200}};
  bool g_ensemble = false, g_runtime = false;
  g_data.add(grid_cmd);
  grid_cmd->add_option("--model", g_model, "Classifier header")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--report", g_report, "Report path (.json for JSON, else CSV)")->required();
  grid_cmd->add_option("--sigma-grid", axes.sigmas, "Sigma values")->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--window-grid", axes.windows, "Window values")->delimiter(',')->capture_default_str();
  grid_cmd->add_option("--deflection-grid", axes.deflections, "Deflection counts")
      ->delimiter(',')
      ->capture_default_str();
  grid_cmd->add_flag("--ensemble-column", g_ensemble, "Also compute the ensemble column (slow)");
  grid_cmd->add_flag("--runtime", g_runtime, "Include wall-clock runtime in the report");
  g_attack.add(grid_cmd);
  g_flags.add(grid_cmd, true);
  g_seed.add(grid_cmd);

  // train-toy
  auto* train_cmd = app.add_subcommand("train-toy", "Train the linear-softmax toy classifier");
  DataFlags t_data;
  TrainOptions t_opts;
  SeedFlag t_seed;
  std::string t_out;
  t_data.add(train_cmd);
  train_cmd->add_option("--epochs", t_opts.epochs, "Full-batch epochs")->capture_default_str();
  train_cmd->add_option("--lr", t_opts.learning_rate, "Step size (0 = automatic)")->capture_default_str();
  train_cmd->add_option("--weight-decay", t_opts.weight_decay, "L2 penalty")->capture_default_str();
  train_cmd->add_option("-o,--output", t_out, "Classifier header path")->required();
  t_seed.add(train_cmd);

  // gen-synthetic
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write the synthetic shapes dataset");
  SyntheticSpec s_spec;
  std::size_t s_count = 200;
  std::string s_out;
  SeedFlag s_seed;
  gen_cmd->add_option("--count", s_count, "Images")->capture_default_str();
  gen_cmd->add_option("--classes", s_spec.classes, "Classes (2..10)")->capture_default_str();
  gen_cmd->add_option("--size", s_spec.size, "Image side")->capture_default_str();
  gen_cmd->add_option("--noise", s_spec.noise, "Gaussian noise sd")->capture_default_str();
  gen_cmd->add_option("-o,--output", s_out, "Output directory")->required();
  s_seed.add(gen_cmd);

  CLI11_PARSE(app, argc, argv);
  omp_set_num_threads(jobs);

  try {
    if (*deflect_cmd) {
      const std::uint64_t seed = d_seed.resolve();
      validate(d_params);
      const Image img = load_image(d_in);
      RandomSource rng(seed);
      DeflectionTrace trace;
      DeflectionTrace* tp = d_trace.empty() ? nullptr : &trace;
      Image out;
      if (d_map.empty()) {
        out = deflect_uniform(img, d_params, rng, tp);
      } else {
        const ActivationMap map = FileMapProvider(d_map).map_for(img);
        out = deflect_targeted(img, map, d_params, rng, tp);
      }
      save_image(out, d_out);
      if (tp) {
        std::ofstream t(d_trace, std::ios::trunc);
        if (!t) throw Error("cannot write " + d_trace);
        write_trace_csv(trace, t);
      }
      write_sidecar(d_out, "deflect", seed, args,
                    "window=" + std::to_string(d_params.window) + "\ndeflections=" +
                        std::to_string(d_params.deflections) + "\ntargeted=" +
                        (d_map.empty() ? "false" : "true") + "\n");
      std::cout << "changed pixels: " << changed_pixel_count(img, out) << '\n';
    } else if (*denoise_cmd) {
      const DefenseConfig cfg = n_flags.resolve();
      const Image out = denoise_image(load_image(n_in), cfg.wavelet, cfg.shrinkage);
      save_image(out, n_out);
      write_sidecar(n_out, "denoise", std::nullopt, args, format_config(cfg));
    } else if (*defend_cmd) {
      const std::uint64_t seed = f_seed.resolve();
      const DefenseConfig cfg = f_flags.resolve();
      const Image img = load_image(f_in);
      std::optional<LinearSoftmaxClassifier> clf;
      if (!f_model.empty()) clf = load_classifier(f_model);
      const auto provider = make_provider(f_map, clf ? &*clf : nullptr, cfg);
      const Image out = defend(img, cfg, *provider, seed);
      save_image(out, f_out);
      write_sidecar(f_out, "defend", seed, args, format_config(cfg));
      std::cout << "changed pixels: " << changed_pixel_count(img, out) << '\n';
    } else if (*eval_cmd) {
      const std::uint64_t seed = e_seed.resolve();
      const DefenseConfig cfg = e_flags.resolve();
      const AttackSpec attack = e_attack.resolve();
      const auto clf = load_classifier(e_model);
      const Dataset data = e_data.resolve(seed);
      EvalOptions opts;
      opts.jobs = jobs;
      opts.ensemble = !e_no_ensemble;
      const auto report = evaluate_defense(data, clf, attack, cfg, seed, opts);
      if (wants_json(e_report)) {
        write_text(e_report, report_json(report.summary, e_runtime));
      } else {
        std::ostringstream out;
        write_report_csv_header(out);
        write_report_csv_row(out, report.summary, e_runtime);
        write_text(e_report, out.str());
      }
      if (!e_records.empty()) {
        std::ostringstream out;
        write_records_csv(out, report.records);
        write_text(e_records, out.str());
      }
      write_sidecar(e_report, "evaluate", seed, args, format_config(cfg));
      print_summary(report.summary);
    } else if (*grid_cmd) {
      const std::uint64_t seed = g_seed.resolve();
      const DefenseConfig cfg = g_flags.resolve();
      const AttackSpec attack = g_attack.resolve();
      const auto clf = load_classifier(g_model);
      const Dataset data = g_data.resolve(seed);
      EvalOptions opts;
      opts.jobs = jobs;
      opts.ensemble = g_ensemble;
      const auto rows = grid_search(data, clf, attack, cfg, axes, seed, opts);
      if (wants_json(g_report)) {
        write_text(g_report, grid_json(rows, g_runtime));
      } else {
        std::ostringstream out;
        write_grid_csv(out, rows, g_runtime);
        write_text(g_report, out.str());
      }
      write_sidecar(g_report, "grid", seed, args, format_config(cfg));
      std::size_t failed = 0;
      for (const auto& r : rows) {
        if (!r.summary) {
          ++failed;
          std::cerr << "grid point sigma=" << r.sigma << " window=" << r.window
                    << " deflections=" << r.deflections << ": " << r.error << '\n';
        }
      }
      std::cout << rows.size() << " grid points, " << failed << " failed\n";
    } else if (*train_cmd) {
      const std::uint64_t seed = t_seed.resolve();
      t_opts.seed = seed;
      const Dataset data = t_data.resolve(seed);
      const auto result = train_toy_classifier(data, class_count(data), t_opts);
      save_classifier(result.classifier, t_out);
      std::cout << "train accuracy: " << accuracy(result.classifier, data) << '\n'
                << "final loss: " << result.loss_history.back() << '\n';
    } else if (*gen_cmd) {
      const std::uint64_t seed = s_seed.resolve();
      const fs::path manifest = write_dataset(make_synthetic_dataset(s_spec, s_count, seed), s_out);
      std::cout << "wrote " << s_count << " images, manifest " << manifest.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
