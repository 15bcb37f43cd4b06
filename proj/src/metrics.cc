#include "pixdef/metrics.h"

#include <chrono>
#include <charconv>
#include <json.hpp>
#include <ostream>

#include "pixdef/error.h"
#include "pixdef/random.h"

namespace pixdef {
namespace {

// Seed stream for the defended-clean column, kept apart from the
// attacked-image runs.
constexpr std::uint64_t kCleanStream = 0x636c65616eULL;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("undefined");
}

nlohmann::ordered_json summary_json(const EvalSummary& s, bool with_runtime) {
  nlohmann::ordered_json j;
  j["sigma"] = s.sigma;
  j["window"] = s.window;
  j["deflections"] = s.deflections;
  j["clean_acc"] = s.clean_acc;
  j["attacked_acc"] = s.attacked_acc;
  j["defended_acc"] = s.defended_acc;
  j["defended_ens_acc"] = s.has_ensemble ? nlohmann::ordered_json(s.defended_ens_acc)
                                         : nlohmann::ordered_json(nullptr);
  j["destruction_rate"] = s.destruction_rate ? nlohmann::ordered_json(*s.destruction_rate)
                                             : nlohmann::ordered_json(nullptr);
  j["mean_l2"] = s.mean_l2;
  j["runtime_ms"] = with_runtime ? nlohmann::ordered_json(s.runtime_ms)
                                 : nlohmann::ordered_json(nullptr);
  j["defended_clean_acc"] = s.defended_clean_acc;
  j["destruction_rate_ens"] = s.has_ensemble && s.destruction_rate_ens
                                  ? nlohmann::ordered_json(*s.destruction_rate_ens)
                                  : nlohmann::ordered_json(nullptr);
  j["evaluated"] = s.evaluated;
  j["total"] = s.total;
  return j;
}

template <typename Fn>
void parallel_over(std::size_t n, int jobs, Fn&& body) {
  std::string failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
#pragma omp critical
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw Error(failure);
}

}  // namespace

std::size_t prediction(const EvalRecord& r, PredictionField field) {
  switch (field) {
    case PredictionField::clean: return r.clean_prediction;
    case PredictionField::attacked: return r.attacked_prediction;
    case PredictionField::defended: return r.defended_prediction;
    case PredictionField::ensemble: return r.ensemble_prediction;
    case PredictionField::defended_clean: return r.defended_clean_prediction;
  }
  return r.clean_prediction;
}

double top1_accuracy(std::span<const EvalRecord> records, PredictionField field) {
  if (records.empty()) throw Error("top1_accuracy: no records");
  std::size_t correct = 0;
  for (const auto& r : records) correct += prediction(r, field) == r.label;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::optional<double> destruction_rate(std::span<const EvalRecord> records,
                                       PredictionField field) {
  std::size_t eligible = 0;
  std::size_t recovered = 0;
  for (const auto& r : records) {
    if (r.clean_prediction != r.label || r.attacked_prediction == r.label) continue;
    ++eligible;
    recovered += prediction(r, field) == r.label;
  }
  if (eligible == 0) return std::nullopt;
  return static_cast<double>(recovered) / static_cast<double>(eligible);
}

EvalSummary summarize(std::span<const EvalRecord> records, std::size_t total) {
  EvalSummary s;
  s.total = total;
  s.evaluated = records.size();
  s.clean_acc = top1_accuracy(records, PredictionField::clean);
  s.attacked_acc = top1_accuracy(records, PredictionField::attacked);
  s.defended_acc = top1_accuracy(records, PredictionField::defended);
  s.defended_ens_acc = top1_accuracy(records, PredictionField::ensemble);
  s.defended_clean_acc = top1_accuracy(records, PredictionField::defended_clean);
  s.destruction_rate = destruction_rate(records, PredictionField::defended);
  s.destruction_rate_ens = destruction_rate(records, PredictionField::ensemble);
  double l2 = 0.0;
  for (const auto& r : records) l2 += r.perturbation_rmse;
  s.mean_l2 = l2 / static_cast<double>(records.size());
  return s;
}

AttackedSet prepare_attacks(const Dataset& data, const LinearSoftmaxClassifier& clf,
                            const AttackSpec& attack, int jobs) {
  if (data.empty()) throw Error("evaluate: empty dataset");
  if (attack.kind != AttackKind::none) validate(attack.budget);
  std::vector<std::optional<AttackedSample>> slots(data.size());
  parallel_over(data.size(), jobs, [&](std::size_t i) {
    const auto& item = data[i];
    const std::size_t clean_pred = clf.predict(item.image).top1();
    if (clean_pred != item.label) return;
    AttackedSample s;
    s.index = i;
    s.id = item.id;
    s.label = item.label;
    s.clean = item.image;
    s.clean_prediction = clean_pred;
    s.attacked = run_attack(clf, item.image, item.label, attack);
    s.attacked_prediction = clf.predict(s.attacked).top1();
    s.rmse = normalized_rmse(s.clean, s.attacked);
    slots[i] = std::move(s);
  });
  AttackedSet set;
  set.total = data.size();
  for (auto& s : slots) {
    if (s) set.samples.push_back(std::move(*s));
  }
  if (set.samples.empty()) {
    throw Error("evaluate: the classifier gets no image of the dataset right");
  }
  return set;
}

EvalReport evaluate_prepared(const AttackedSet& set, const LinearSoftmaxClassifier& clf,
                             const DefenseConfig& cfg, std::uint64_t seed,
                             const EvalOptions& options) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  const ClassifierCamProvider cam(clf, cfg.k_top);
  const ZeroMapProvider zero;
  const MapProvider& provider =
      options.provider ? *options.provider
                       : (cfg.use_targeted ? static_cast<const MapProvider&>(cam) : zero);

  EvalReport report;
  report.records.resize(set.samples.size());
  parallel_over(set.samples.size(), options.jobs, [&](std::size_t i) {
    const auto& s = set.samples[i];
    const std::uint64_t image_seed = derive_seed(seed, s.index);
    EvalRecord r;
    r.id = s.id;
    r.label = s.label;
    r.clean_prediction = s.clean_prediction;
    r.attacked_prediction = s.attacked_prediction;
    r.perturbation_rmse = s.rmse;
    r.defended_prediction = clf.predict(defend(s.attacked, cfg, provider, image_seed)).top1();
    r.ensemble_prediction =
        options.ensemble
            ? ensemble_classify(clf, s.attacked, cfg, provider, image_seed).label
            : r.defended_prediction;
    r.defended_clean_prediction =
        clf.predict(defend(s.clean, cfg, provider, derive_seed(image_seed, kCleanStream)))
            .top1();
    report.records[i] = std::move(r);
  });

  report.summary = summarize(report.records, set.total);
  report.summary.has_ensemble = options.ensemble;
  report.summary.sigma = cfg.shrinkage.sigma;
  report.summary.window = cfg.deflection.window;
  report.summary.deflections = cfg.deflection.deflections;
  report.summary.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

EvalReport evaluate_defense(const Dataset& data, const LinearSoftmaxClassifier& clf,
                            const AttackSpec& attack, const DefenseConfig& cfg,
                            std::uint64_t seed, const EvalOptions& options) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  EvalReport report =
      evaluate_prepared(prepare_attacks(data, clf, attack, options.jobs), clf, cfg, seed, options);
  report.summary.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

void write_report_csv_header(std::ostream& out) {
  out << "sigma,window,deflections,clean_acc,attacked_acc,defended_acc,"
         "defended_ens_acc,destruction_rate,mean_l2,runtime_ms,"
         "defended_clean_acc,destruction_rate_ens,evaluated,total,status\n";
}

void write_report_csv_row(std::ostream& out, const EvalSummary& s, bool with_runtime,
                          const std::string& status) {
  out << format_double(s.sigma) << ',' << s.window << ',' << s.deflections << ','
      << format_double(s.clean_acc) << ',' << format_double(s.attacked_acc) << ','
      << format_double(s.defended_acc) << ','
      << (s.has_ensemble ? format_double(s.defended_ens_acc) : std::string("NA")) << ','
      << format_optional(s.destruction_rate) << ',' << format_double(s.mean_l2) << ','
      << (with_runtime ? format_double(s.runtime_ms) : std::string("NA")) << ','
      << format_double(s.defended_clean_acc) << ','
      << (s.has_ensemble ? format_optional(s.destruction_rate_ens) : std::string("NA"))
      << ',' << s.evaluated << ',' << s.total
      << ',' << status << '\n';
}

std::string report_json(const EvalSummary& s, bool with_runtime) {
  return summary_json(s, with_runtime).dump(2) + "\n";
}

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records) {
  out << "id,label,clean_pred,attacked_pred,defended_pred,ensemble_pred,"
         "defended_clean_pred,rmse\n";
  for (const auto& r : records) {
    out << r.id << ',' << r.label << ',' << r.clean_prediction << ','
        << r.attacked_prediction << ',' << r.defended_prediction << ','
        << r.ensemble_prediction << ',' << r.defended_clean_prediction << ','
        << format_double(r.perturbation_rmse) << '\n';
  }
}

std::vector<GridRow> grid_search(const Dataset& data, const LinearSoftmaxClassifier& clf,
                                 const AttackSpec& attack, const DefenseConfig& base,
                                 const GridAxes& axes, std::uint64_t seed,
                                 const EvalOptions& options) {
  if (axes.sigmas.empty() || axes.windows.empty() || axes.deflections.empty()) {
    throw Error("grid: every axis needs at least one value");
  }
  const AttackedSet set = prepare_attacks(data, clf, attack, options.jobs);
  std::vector<GridRow> rows;
  rows.reserve(axes.sigmas.size() * axes.windows.size() * axes.deflections.size());
  for (double sigma : axes.sigmas) {
    for (int window : axes.windows) {
      for (int k : axes.deflections) {
        GridRow row{sigma, window, k, std::nullopt, {}};
        DefenseConfig cfg = base;
        cfg.shrinkage.sigma = sigma;
        cfg.deflection.window = window;
        cfg.deflection.deflections = k;
        try {
          row.summary = evaluate_prepared(set, clf, cfg, seed, options).summary;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace {

std::string csv_status(const std::string& error) {
  std::string s = "error: " + error;
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '"') c = ';';
  }
  return s;
}

}  // namespace

void write_grid_csv(std::ostream& out, std::span<const GridRow> rows, bool with_runtime) {
  write_report_csv_header(out);
  for (const auto& row : rows) {
    if (row.summary) {
      write_report_csv_row(out, *row.summary, with_runtime);
    } else {
      out << format_double(row.sigma) << ',' << row.window << ',' << row.deflections
          << ",,,,,,,,,,,," << csv_status(row.error) << '\n';
    }
  }
}

std::string grid_json(std::span<const GridRow> rows, bool with_runtime) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    if (row.summary) {
      auto j = summary_json(*row.summary, with_runtime);
      j["status"] = "ok";
      arr.push_back(std::move(j));
    } else {
      nlohmann::ordered_json j;
      j["sigma"] = row.sigma;
      j["window"] = row.window;
      j["deflections"] = row.deflections;
      j["status"] = "error";
      j["error"] = row.error;
      arr.push_back(std::move(j));
    }
  }
  return arr.dump(2) + "\n";
}

}  // namespace pixdef
