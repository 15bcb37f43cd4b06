#include <doctest.h>

#include <cmath>

#include "pixdef/dataset.h"
#include "pixdef/error.h"
#include "pixdef/image_io.h"
#include "pixdef/pipeline.h"
#include "test_util.h"

using namespace pixdef;
using namespace pixdef::testing;

namespace {

// Returns pre-set scores in turn, ignoring the image.
class ScriptedClassifier final : public Classifier {
 public:
  explicit ScriptedClassifier(std::vector<std::vector<double>> probs) : probs_(std::move(probs)) {}
  ClassScores predict(const Image&) const override {
    const auto& p = probs_[next_++ % probs_.size()];
    return {p, p};
  }
  std::size_t num_classes() const override { return probs_.front().size(); }

 private:
  std::vector<std::vector<double>> probs_;
  mutable std::size_t next_ = 0;
};

ClassScores scores(std::vector<double> p) { return {p, p}; }

DefenseConfig passthrough() {
  DefenseConfig cfg;
  cfg.deflection.deflections = 0;
  cfg.shrinkage.mode = ThresholdMode::none;
  return cfg;
}

}  // namespace

TEST_CASE("config defaults and parsing") {
  const DefenseConfig d;
  CHECK(d.shrinkage.sigma == 0.04);
  CHECK(d.deflection.window == 10);
  CHECK(d.deflection.deflections == 100);
  CHECK(d.wavelet.family == WaveletFamily::db1);
  CHECK(d.shrinkage.mode == ThresholdMode::soft);
  CHECK(d.shrinkage.selector == ThresholdSelector::bayes);
  CHECK(d.ensemble_size == 10);

  const auto cfg = parse_config("# comment\nsigma = 0.02\nwindow=5\n\ndeflections=200 # trailing\n"
                                "wavelet=db2\nselector=sure\ntargeted=false\nensemble=3\n");
  CHECK(cfg.shrinkage.sigma == 0.02);
  CHECK(cfg.deflection.window == 5);
  CHECK(cfg.deflection.deflections == 200);
  CHECK(cfg.wavelet.family == WaveletFamily::db2);
  CHECK(cfg.shrinkage.selector == ThresholdSelector::sure);
  CHECK_FALSE(cfg.use_targeted);
  CHECK(cfg.ensemble_size == 3);

  CHECK(parse_config(format_config(cfg)).deflection.window == 5);
  CHECK(format_config(parse_config(format_config(cfg))) == format_config(cfg));

  CHECK_THROWS_AS(parse_config("bogus=1"), Error);
  CHECK_THROWS_AS(parse_config("window=0"), Error);
  CHECK_THROWS_AS(parse_config("sigma=-1"), Error);
  CHECK_THROWS_AS(parse_config("sigma=abc"), Error);
  CHECK_THROWS_AS(parse_config("ensemble=0"), Error);
  CHECK_THROWS_AS(parse_config("window"), Error);
}

TEST_CASE("no deflection and no thresholding is the identity") {
  const Image img = random_image(32, 32, 3, 5);
  const Image out = defend(img, passthrough(), ZeroMapProvider(), 1);
  CHECK(max_abs_diff(out.values(), img.values()) < 1e-6);
  const Image grey = random_image(20, 24, 1, 6);
  CHECK(max_abs_diff(defend(grey, passthrough(), ZeroMapProvider(), 1).values(), grey.values()) < 1e-6);
}

TEST_CASE("defend is deterministic under a seed") {
  const Image img = random_image(40, 40, 3, 9);
  const DefenseConfig cfg;
  const ZeroMapProvider zero;
  CHECK(defend(img, cfg, zero, 77) == defend(img, cfg, zero, 77));
  CHECK_FALSE(defend(img, cfg, zero, 77) == defend(img, cfg, zero, 78));
}

TEST_CASE("stages run in order") {
  std::vector<Stage> seen;
  const auto obs = [&](Stage s, const Image&) { seen.push_back(s); };
  defend(random_image(16, 16, 3, 1), DefenseConfig{}, ZeroMapProvider(), 1, obs);
  CHECK(seen == std::vector<Stage>{Stage::deflect, Stage::to_ycbcr, Stage::denoise, Stage::to_rgb});
  seen.clear();
  defend(random_image(16, 16, 1, 1), DefenseConfig{}, ZeroMapProvider(), 1, obs);
  CHECK(seen == std::vector<Stage>{Stage::deflect, Stage::denoise});
}

TEST_CASE("stage output matches the standalone operations") {
  const Image img = random_image(24, 24, 3, 2);
  DefenseConfig cfg;
  cfg.use_targeted = false;
  Image deflected, denoised;
  const auto obs = [&](Stage s, const Image& im) {
    if (s == Stage::deflect) deflected = im;
    if (s == Stage::denoise) denoised = im;
  };
  const Image out = defend(img, cfg, ZeroMapProvider(), 5, obs);
  RandomSource rng(5);
  CHECK(deflected == deflect_uniform(img, cfg.deflection, rng));
  CHECK(denoise_image(deflected, cfg.wavelet, cfg.shrinkage) == out);
}

TEST_CASE("zero map and uniform deflection agree") {
  // v = 0 < u except when u is exactly 0, but the gate draw shifts the stream,
  // so only the change statistics are comparable.
  const Image img = random_image(32, 32, 3, 3);
  DefenseConfig targeted = passthrough(), uniform = passthrough();
  targeted.deflection.deflections = uniform.deflection.deflections = 50;
  uniform.use_targeted = false;
  double a = 0, b = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    a += changed_pixel_count(img, defend(img, targeted, ZeroMapProvider(), s));
    b += changed_pixel_count(img, defend(img, uniform, ZeroMapProvider(), s));
  }
  CHECK(std::abs(a - b) / b < 0.1);
}

TEST_CASE("errors name the failing stage") {
  const Image img = random_image(16, 16, 3, 3);
  FileMapProvider bad_shape(ActivationMap(0, 0));
  DefenseConfig cfg;
  try {
    defend(img, cfg, bad_shape, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("deflect:", 0) == 0);
  }
  try {
    defend(Image(1, 16, 3), cfg, ZeroMapProvider(), 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("denoise:", 0) == 0);
  }
}

TEST_CASE("file map provider") {
  const auto dir = temp_dir("pipeline");
  write_f32grid(Grid(2, 1, 1, std::vector<double>{0.0, 1.0}), dir / "map.f32g");
  const FileMapProvider p(dir / "map.f32g");
  const auto m = p.map_for(Image(3, 2, 3));
  CHECK(m.values == std::vector<double>{0, 0, 0.5, 0.5, 1, 1});
  write_f32grid(Grid(2, 1, 1, std::vector<double>{0.0, 2.0}), dir / "bad.f32g");
  CHECK_THROWS_AS(FileMapProvider(dir / "bad.f32g"), Error);
}

TEST_CASE("classifier cam provider") {
  RandomSource rng(4);
  std::vector<double> w(3 * 8 * 8 * 3), b{0.1, -0.2, 0.3};
  for (double& v : w) v = rng.normal();
  const LinearSoftmaxClassifier clf({8, 8, 3}, w, b);
  const Image img = random_image(8, 8, 3, 5);
  const ClassifierCamProvider cam(clf, 2);

  // Evidence maps sum to the logits minus the bias.
  const FeatureStack f = cam.evidence_features(img);
  const auto s = clf.predict(img);
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 64; ++i) sum += f.values()[i * 3 + c];
    CHECK(sum == doctest::Approx(s.logits[c] - b[c]).epsilon(1e-12));
  }

  const auto top = top_k_classes(s.probabilities, 2);
  ClassWeights onehot(3, std::vector<double>(3, 0.0));
  for (std::size_t c = 0; c < 3; ++c) onehot[c][c] = 1.0;
  const std::vector<ActivationMap> maps{cam_from_features(f, onehot, top[0]),
                                        cam_from_features(f, onehot, top[1])};
  CHECK(cam.map_for(img) == robust_map(maps));
  CHECK(ClassifierCamProvider(clf, 7).map_for(img) == ClassifierCamProvider(clf, 3).map_for(img));
  CHECK_THROWS_AS(ClassifierCamProvider(clf, 0), Error);
}

TEST_CASE("plurality vote") {
  SUBCASE("majority wins") {
    const auto r = plurality_vote({scores({0.6, 0.4}), scores({0.3, 0.7}), scores({0.45, 0.55})});
    CHECK(r.label == 1);
    CHECK(r.votes == std::vector<std::size_t>{1, 2});
  }
  SUBCASE("vote tie goes to the higher mean probability") {
    const auto r = plurality_vote({scores({0.9, 0.1}), scores({0.4, 0.6})});
    CHECK(r.label == 0);
    const auto s = plurality_vote({scores({0.55, 0.45}), scores({0.1, 0.9})});
    CHECK(s.label == 1);
  }
  SUBCASE("full tie goes to the lower index") {
    const auto r = plurality_vote({scores({0.2, 0.3, 0.5}), scores({0.5, 0.3, 0.2})});
    CHECK(r.label == 0);
  }
  CHECK_THROWS_AS(plurality_vote({}), Error);
}

TEST_CASE("ensemble classify") {
  const Image img = random_image(16, 16, 3, 1);
  DefenseConfig cfg;
  cfg.ensemble_size = 4;
  const ScriptedClassifier scripted({{0.2, 0.8}, {0.7, 0.3}, {0.9, 0.1}, {0.4, 0.6}});
  const auto r = ensemble_classify(scripted, img, cfg, ZeroMapProvider(), 3);
  CHECK(r.votes == std::vector<std::size_t>{2, 2});
  CHECK(r.label == 0);  // mean 0.55 vs 0.45

  // Size one is a single defend + predict with the same seed.
  RandomSource wr(2);
  std::vector<double> w(2 * 16 * 16 * 3);
  for (double& v : w) v = wr.normal();
  const LinearSoftmaxClassifier clf({16, 16, 3}, w, {0.0, 0.0});
  cfg.ensemble_size = 1;
  const auto one = ensemble_classify(clf, img, cfg, ZeroMapProvider(), 11);
  const auto direct = clf.predict(defend(img, cfg, ZeroMapProvider(), 11));
  CHECK(one.label == direct.top1());
  CHECK(one.mean_probabilities == direct.probabilities);
}

TEST_CASE("a few deflections rarely change a trained model's prediction") {
  SyntheticSpec spec;
  const auto clf = train_toy_classifier(make_synthetic_dataset(spec, 160, 1), spec.classes,
                                        {150, 0.0, 0.0, true, 0})
                       .classifier;
  const Dataset eval = make_synthetic_dataset(spec, 200, 2);
  DefenseConfig cfg;
  cfg.use_targeted = false;
  cfg.deflection = {10, 10};
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    RandomSource rng(i);
    const Image d = deflect_uniform(eval[i].image, cfg.deflection, rng);
    flipped += clf.predict(d).top1() != clf.predict(eval[i].image).top1();
  }
  CHECK(flipped <= 20);
}
