#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pixdef/attacks.h"
#include "pixdef/classifier.h"
#include "pixdef/pipeline.h"

namespace pixdef {

struct EvalRecord {
  std::string id;
  std::size_t label = 0;
  std::size_t clean_prediction = 0;
  std::size_t attacked_prediction = 0;
  std::size_t defended_prediction = 0;        // single defended run
  std::size_t ensemble_prediction = 0;        // ensemble vote on the attacked image
  std::size_t defended_clean_prediction = 0;  // single defended run on the clean image
  double perturbation_rmse = 0.0;
};

enum class PredictionField { clean, attacked, defended, ensemble, defended_clean };

std::size_t prediction(const EvalRecord& r, PredictionField field);

double top1_accuracy(std::span<const EvalRecord> records, PredictionField field);

// Among records that are clean-correct and attack-flipped, the fraction whose
// `field` prediction is correct again. nullopt when that set is empty.
std::optional<double> destruction_rate(std::span<const EvalRecord> records,
                                       PredictionField field = PredictionField::defended);

struct EvalSummary {
  double sigma = 0.0;
  int window = 0;
  int deflections = 0;
  double clean_acc = 0.0;
  double attacked_acc = 0.0;
  double defended_acc = 0.0;
  double defended_ens_acc = 0.0;  // meaningful only when has_ensemble
  std::optional<double> destruction_rate;
  std::optional<double> destruction_rate_ens;
  double defended_clean_acc = 0.0;
  double mean_l2 = 0.0;
  std::size_t total = 0;      // images in the dataset
  std::size_t evaluated = 0;  // clean-correct images kept for evaluation
  double runtime_ms = 0.0;
  bool has_ensemble = true;
};

struct EvalReport {
  EvalSummary summary;
  std::vector<EvalRecord> records;
};

struct EvalOptions {
  int jobs = 1;            // threads across images
  bool ensemble = true;    // compute the ensemble column
  const MapProvider* provider = nullptr;  // default: classifier CAM / zero map
};

// Clean-correct images with their attacked versions; shared by every grid
// point of a sweep.
struct AttackedSample {
  std::size_t index = 0;  // position in the original dataset
  std::string id;
  std::size_t label = 0;
  Image clean;
  Image attacked;
  std::size_t clean_prediction = 0;
  std::size_t attacked_prediction = 0;
  double rmse = 0.0;
};

struct AttackedSet {
  std::size_t total = 0;
  std::vector<AttackedSample> samples;
};

AttackedSet prepare_attacks(const Dataset& data, const LinearSoftmaxClassifier& clf,
                            const AttackSpec& attack, int jobs = 1);

EvalReport evaluate_prepared(const AttackedSet& set, const LinearSoftmaxClassifier& clf,
                             const DefenseConfig& cfg, std::uint64_t seed,
                             const EvalOptions& options = {});

// Keeps only images the classifier gets right when clean, attacks them,
// defends them, and aggregates. Image i uses defence seed derive_seed(seed, i);
// its ensemble uses that seed plus the run index.
EvalReport evaluate_defense(const Dataset& data, const LinearSoftmaxClassifier& clf,
                            const AttackSpec& attack, const DefenseConfig& cfg,
                            std::uint64_t seed, const EvalOptions& options = {});

// Aggregates records into a summary (the config columns are left at zero).
EvalSummary summarize(std::span<const EvalRecord> records, std::size_t total);

// Report serialisation. Column order:
//   sigma,window,deflections,clean_acc,attacked_acc,defended_acc,
//   defended_ens_acc,destruction_rate,mean_l2,runtime_ms,
//   defended_clean_acc,destruction_rate_ens,evaluated,total,status
// Undefined destruction rates print as "undefined" (null in JSON). Ensemble
// columns print as "NA" (null) when the ensemble was skipped. Runtime
// prints as "NA" unless `with_runtime`, so reports are reproducible by default.
void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const EvalSummary& s, bool with_runtime,
                          const std::string& status = "ok");
std::string report_json(const EvalSummary& s, bool with_runtime);
void write_records_csv(std::ostream& out, std::span<const EvalRecord> records);

struct GridAxes {
  std::vector<double> sigmas;
  std::vector<int> windows;
  std::vector<int> deflections;
};

struct GridRow {
  double sigma = 0.0;
  int window = 0;
  int deflections = 0;
  std::optional<EvalSummary> summary;  // empty when the point failed
  std::string error;
};

// Attacks once, then evaluates every (sigma, window, deflections) point in
// that nesting order. A failing point becomes an error row.
std::vector<GridRow> grid_search(const Dataset& data, const LinearSoftmaxClassifier& clf,
                                 const AttackSpec& attack, const DefenseConfig& base,
                                 const GridAxes& axes, std::uint64_t seed,
                                 const EvalOptions& options = {});

void write_grid_csv(std::ostream& out, std::span<const GridRow> rows, bool with_runtime);
std::string grid_json(std::span<const GridRow> rows, bool with_runtime);

}  // namespace pixdef
