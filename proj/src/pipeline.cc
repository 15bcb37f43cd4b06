#include "pixdef/pipeline.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "pixdef/error.h"
#include "pixdef/image_io.h"
#include "pixdef/random.h"
#include "pixdef/rcam.h"

namespace pixdef {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw Error("config: bad value for '" + std::string(key) + "': '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw Error("config: bad boolean for '" + std::string(key) + "': '" + std::string(value) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename Fn>
auto with_stage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error(std::string(to_string(stage)) + ": " + e.what());
  }
}

}  // namespace

void validate(const DefenseConfig& cfg) {
  validate(cfg.deflection);
  validate(cfg.shrinkage);
  if (cfg.wavelet.levels < 1) throw Error("config: levels must be >= 1");
  if (cfg.ensemble_size < 1) throw Error("config: ensemble must be >= 1");
  if (cfg.k_top < 1) throw Error("config: k_top must be >= 1");
}

void apply_config_value(DefenseConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "sigma") {
    cfg.shrinkage.sigma = parse_number<double>(key, value);
  } else if (key == "window") {
    cfg.deflection.window = parse_number<int>(key, value);
  } else if (key == "deflections") {
    cfg.deflection.deflections = parse_number<int>(key, value);
  } else if (key == "targeted") {
    cfg.use_targeted = parse_bool(key, value);
  } else if (key == "k_top") {
    cfg.k_top = parse_number<std::size_t>(key, value);
  } else if (key == "wavelet") {
    const auto fam = parse_wavelet_family(value);
    if (!fam) throw Error("config: unknown wavelet '" + std::string(value) + "'");
    cfg.wavelet.family = *fam;
  } else if (key == "levels") {
    cfg.wavelet.levels = parse_number<int>(key, value);
  } else if (key == "threshold") {
    const auto mode = parse_threshold_mode(value);
    if (!mode) throw Error("config: unknown threshold mode '" + std::string(value) + "'");
    cfg.shrinkage.mode = *mode;
  } else if (key == "selector") {
    const auto sel = parse_threshold_selector(value);
    if (!sel) throw Error("config: unknown threshold selector '" + std::string(value) + "'");
    cfg.shrinkage.selector = *sel;
  } else if (key == "fixed_threshold") {
    cfg.shrinkage.fixed_threshold = parse_number<double>(key, value);
  } else if (key == "estimate_sigma") {
    cfg.shrinkage.estimate_sigma = parse_bool(key, value);
  } else if (key == "ensemble") {
    cfg.ensemble_size = parse_number<std::size_t>(key, value);
  } else {
    throw Error("config: unknown key '" + std::string(key) + "'");
  }
}

DefenseConfig parse_config(std::string_view text) {
  DefenseConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

DefenseConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const DefenseConfig& cfg) {
  std::ostringstream out;
  out << "sigma=" << format_double(cfg.shrinkage.sigma) << '\n'
      << "window=" << cfg.deflection.window << '\n'
      << "deflections=" << cfg.deflection.deflections << '\n'
      << "targeted=" << (cfg.use_targeted ? "true" : "false") << '\n'
      << "k_top=" << cfg.k_top << '\n'
      << "wavelet=" << to_string(cfg.wavelet.family) << '\n'
      << "levels=" << cfg.wavelet.levels << '\n'
      << "threshold=" << to_string(cfg.shrinkage.mode) << '\n'
      << "selector=" << to_string(cfg.shrinkage.selector) << '\n'
      << "fixed_threshold=" << format_double(cfg.shrinkage.fixed_threshold) << '\n'
      << "estimate_sigma=" << (cfg.shrinkage.estimate_sigma ? "true" : "false") << '\n'
      << "ensemble=" << cfg.ensemble_size << '\n';
  return out.str();
}

ActivationMap ZeroMapProvider::map_for(const Image& img) const {
  return ActivationMap(img.height(), img.width(), 0.0);
}

FileMapProvider::FileMapProvider(const std::filesystem::path& path) {
  const Grid g = read_f32grid(path);
  if (g.channels() != 1) throw Error("map file " + path.string() + " must have 1 channel");
  map_ = ActivationMap(g.height(), g.width(),
                       std::vector<double>(g.values().begin(), g.values().end()));
  for (double v : map_.values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error("map file " + path.string() + " has values outside [0,1]");
    }
  }
}

FileMapProvider::FileMapProvider(ActivationMap map) : map_(std::move(map)) {}

ActivationMap FileMapProvider::map_for(const Image& img) const {
  return resize_map(map_, img.height(), img.width());
}

ClassifierCamProvider::ClassifierCamProvider(const LinearSoftmaxClassifier& clf,
                                             std::size_t k_top)
    : clf_(clf), k_top_(std::min(k_top, clf.num_classes())) {
  if (k_top == 0) throw Error("cam provider: k_top must be >= 1");
}

FeatureStack ClassifierCamProvider::evidence_features(const Image& img) const {
  const std::size_t classes = clf_.num_classes();
  const std::size_t ch = img.channels();
  FeatureStack f(img.height(), img.width(), classes);
  auto dst = f.values();
  const auto x = img.values();
  for (std::size_t c = 0; c < classes; ++c) {
    const auto w = clf_.weight_row(c);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
      double acc = 0.0;
      for (std::size_t k = 0; k < ch; ++k) acc += w[p * ch + k] * x[p * ch + k];
      dst[p * classes + c] = acc;
    }
  }
  return f;
}

ActivationMap ClassifierCamProvider::map_for(const Image& img) const {
  const auto scores = clf_.predict(img);
  const auto top = top_k_classes(scores.probabilities, k_top_);
  const FeatureStack features = evidence_features(img);
  // Class c's CAM is feature channel c: one-hot class weights.
  ClassWeights onehot(clf_.num_classes(), std::vector<double>(clf_.num_classes(), 0.0));
  for (std::size_t c = 0; c < onehot.size(); ++c) onehot[c][c] = 1.0;
  std::vector<ActivationMap> maps;
  maps.reserve(top.size());
  for (std::size_t c : top) maps.push_back(cam_from_features(features, onehot, c));
  return robust_map(maps);
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::deflect: return "deflect";
    case Stage::to_ycbcr: return "to_ycbcr";
    case Stage::denoise: return "denoise";
    case Stage::to_rgb: return "to_rgb";
  }
  return "unknown";
}

Image defend(const Image& img, const DefenseConfig& cfg, const MapProvider& provider,
             std::uint64_t seed, const StageObserver& observer) {
  validate(cfg);
  const auto notify = [&](Stage s, const Image& im) {
    if (observer) observer(s, im);
  };

  RandomSource rng(seed);
  Image current = with_stage(Stage::deflect, [&] {
    if (!cfg.use_targeted) return deflect_uniform(img, cfg.deflection, rng);
    const ActivationMap map = provider.map_for(img);
    return deflect_targeted(img, map, cfg.deflection, rng);
  });
  notify(Stage::deflect, current);

  const bool color = current.channels() == 3;
  if (color) {
    current = with_stage(Stage::to_ycbcr, [&] { return rgb_to_ycbcr(current); });
    notify(Stage::to_ycbcr, current);
  }

  current = with_stage(Stage::denoise, [&] {
    return denoise_channels(current, cfg.wavelet, cfg.shrinkage);
  });
  notify(Stage::denoise, current);

  if (color) {
    current = with_stage(Stage::to_rgb, [&] { return ycbcr_to_rgb(current); });
    notify(Stage::to_rgb, current);
  }
  return current;
}

VoteResult plurality_vote(const std::vector<ClassScores>& runs) {
  if (runs.empty()) throw Error("vote: no runs");
  const std::size_t classes = runs.front().probabilities.size();
  VoteResult r;
  r.votes.assign(classes, 0);
  r.mean_probabilities.assign(classes, 0.0);
  for (const auto& s : runs) {
    if (s.probabilities.size() != classes) throw Error("vote: inconsistent class counts");
    ++r.votes[s.top1()];
    for (std::size_t c = 0; c < classes; ++c) r.mean_probabilities[c] += s.probabilities[c];
  }
  for (double& p : r.mean_probabilities) p /= static_cast<double>(runs.size());
  r.label = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (r.votes[c] > r.votes[r.label] ||
        (r.votes[c] == r.votes[r.label] &&
         r.mean_probabilities[c] > r.mean_probabilities[r.label])) {
      r.label = c;
    }
  }
  return r;
}

VoteResult ensemble_classify(const Classifier& clf, const Image& img,
                             const DefenseConfig& cfg, const MapProvider& provider,
                             std::uint64_t seed) {
  validate(cfg);
  std::vector<ClassScores> runs;
  runs.reserve(cfg.ensemble_size);
  for (std::size_t i = 0; i < cfg.ensemble_size; ++i) {
    runs.push_back(clf.predict(defend(img, cfg, provider, seed + i)));
  }
  return plurality_vote(runs);
}

}  // namespace pixdef
