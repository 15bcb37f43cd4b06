#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pixdef/activation_map.h"
#include "pixdef/classifier.h"
#include "pixdef/deflect.h"
#include "pixdef/rcam.h"
#include "pixdef/image.h"
#include "pixdef/shrinkage.h"
#include "pixdef/wavelet.h"

namespace pixdef {

// Defaults: sigma 0.04, window 10, 100 deflections, soft BayesShrink on db1,
// activation-map targeting with the top 5 classes, 10-run ensemble.
struct DefenseConfig {
  DeflectionParams deflection;
  bool use_targeted = true;
  std::size_t k_top = 5;
  WaveletSpec wavelet;
  ShrinkageRule shrinkage;
  std::size_t ensemble_size = 10;
};

void validate(const DefenseConfig& cfg);

// Flat "key = value" text, '#' starts a comment. Keys:
//   sigma window deflections targeted k_top wavelet levels threshold
//   selector fixed_threshold estimate_sigma ensemble
DefenseConfig parse_config(std::string_view text);
DefenseConfig load_config(const std::filesystem::path& path);
// Applies one key; throws on unknown keys or malformed values.
void apply_config_value(DefenseConfig& cfg, std::string_view key, std::string_view value);
// Canonical key=value dump of every field, in a fixed order.
std::string format_config(const DefenseConfig& cfg);

// Supplies the activation map used to gate deflection. Implementations must
// be safe to call concurrently.
class MapProvider {
 public:
  virtual ~MapProvider() = default;
  virtual ActivationMap map_for(const Image& img) const = 0;
};

// All-zero map: targeted deflection degenerates to uniform deflection.
class ZeroMapProvider final : public MapProvider {
 public:
  ActivationMap map_for(const Image& img) const override;
};

// Map read once from an f32grid file and bilinearly resized to each image.
class FileMapProvider final : public MapProvider {
 public:
  explicit FileMapProvider(const std::filesystem::path& path);
  explicit FileMapProvider(ActivationMap map);
  ActivationMap map_for(const Image& img) const override;

 private:
  ActivationMap map_;
};

// Robust activation map from a linear-softmax classifier. Each class's
// feature map is its evidence map sum_ch W_c(y,x,ch) * img(y,x,ch); the maps
// of the k top-scoring classes are combined with 1/2^i weights and
// max-normalised. k_top is capped at the class count.
class ClassifierCamProvider final : public MapProvider {
 public:
  ClassifierCamProvider(const LinearSoftmaxClassifier& clf, std::size_t k_top);
  ActivationMap map_for(const Image& img) const override;

  FeatureStack evidence_features(const Image& img) const;

 private:
  const LinearSoftmaxClassifier& clf_;
  std::size_t k_top_;
};

enum class Stage { deflect, to_ycbcr, denoise, to_rgb };
std::string_view to_string(Stage stage);
using StageObserver = std::function<void(Stage, const Image&)>;

// Deflection (map-gated when cfg.use_targeted) -> RGB to YCbCr ->
// per-channel wavelet denoise -> YCbCr to RGB. Grey images skip the colour
// conversions. Errors are rethrown prefixed with the failing stage.
Image defend(const Image& img, const DefenseConfig& cfg, const MapProvider& provider,
             std::uint64_t seed, const StageObserver& observer = {});

struct VoteResult {
  std::size_t label = 0;
  std::vector<std::size_t> votes;            // per class
  std::vector<double> mean_probabilities;    // per class
};

// Plurality over per-run top-1 labels; ties go to the highest mean
// probability, then to the lowest class index.
VoteResult plurality_vote(const std::vector<ClassScores>& runs);

// Runs defend() ensemble_size times with seeds seed+0 .. seed+n-1 and votes.
VoteResult ensemble_classify(const Classifier& clf, const Image& img,
                             const DefenseConfig& cfg, const MapProvider& provider,
                             std::uint64_t seed);

}  // namespace pixdef
