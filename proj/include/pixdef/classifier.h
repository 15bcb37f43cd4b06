#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pixdef/image.h"

namespace pixdef {

struct ClassScores {
  std::vector<double> logits;
  std::vector<double> probabilities;

  std::size_t top1() const;  // lowest index among equal maxima
};

// Numerically stable softmax (shifts by the max logit).
std::vector<double> softmax(const std::vector<double>& logits);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassScores predict(const Image& img) const = 0;
  virtual std::size_t num_classes() const = 0;
};

struct InputShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t size() const { return height * width * channels; }
  bool matches(const Image& img) const {
    return img.height() == height && img.width() == width && img.channels() == channels;
  }
  bool operator==(const InputShape&) const = default;
};

// logits = W * flatten(img) + b, probabilities = softmax(logits).
// W is classes x (H*W*C), flattened in image memory order.
class LinearSoftmaxClassifier final : public Classifier {
 public:
  LinearSoftmaxClassifier(InputShape shape, std::size_t classes);
  LinearSoftmaxClassifier(InputShape shape, std::vector<double> weights,
                          std::vector<double> bias);

  ClassScores predict(const Image& img) const override;
  std::size_t num_classes() const override { return bias_.size(); }

  // Gradient of -ln p_label w.r.t. every pixel: W^T (p - onehot(label)).
  Grid loss_gradient(const Image& img, std::size_t label) const;
  double loss(const Image& img, std::size_t label) const;

  const InputShape& shape() const { return shape_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> weight_row(std::size_t cls) const;
  std::span<const double> bias() const { return bias_; }
  std::span<double> mutable_weights() { return weights_; }
  std::span<double> mutable_bias() { return bias_; }

  bool operator==(const LinearSoftmaxClassifier& o) const {
    return shape_ == o.shape_ && weights_ == o.weights_ && bias_ == o.bias_;
  }

 private:
  void check_input(const Image& img) const;
  std::vector<double> logits(const Image& img) const;

  InputShape shape_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

struct LabeledImage {
  std::string id;
  Image image;
  std::size_t label = 0;
};
using Dataset = std::vector<LabeledImage>;

struct TrainOptions {
  int epochs = 600;
  // Step size for full-batch gradient descent. 0 selects
  // 1 / (max_i |z_i|^2 / 2 + weight_decay), z_i the (standardised) input with
  // a trailing 1 for the bias. That is 1/L for the mean cross-entropy, so the
  // objective never increases.
  double learning_rate = 0.0;
  double weight_decay = 0.0;
  // Run the descent on per-pixel standardised inputs (x - mean) / std and
  // fold the affine map back into W and b afterwards. Same model family,
  // much better conditioning.
  bool standardize = true;
  std::uint64_t seed = 0;
};

struct TrainResult {
  LinearSoftmaxClassifier classifier;
  std::vector<double> loss_history;  // mean loss before each epoch, then final
};

// Full-batch gradient descent on mean cross-entropy from a zero
// initialisation. Serial and deterministic; no step consumes randomness, so
// the seed only identifies the run.
TrainResult train_toy_classifier(const Dataset& data, std::size_t classes,
                                 const TrainOptions& options);

double mean_loss(const LinearSoftmaxClassifier& clf, const Dataset& data);
double accuracy(const Classifier& clf, const Dataset& data);

// Model files: a key=value header (classes, height, width, channels, bias,
// weights=<f32grid file relative to the header>) plus the f32grid holding W
// as a classes x (H*W*C) x 1 grid.
void save_classifier(const LinearSoftmaxClassifier& clf,
                     const std::filesystem::path& header_path);
LinearSoftmaxClassifier load_classifier(const std::filesystem::path& header_path);

}  // namespace pixdef
