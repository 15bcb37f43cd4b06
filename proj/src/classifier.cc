#include "pixdef/classifier.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pixdef/error.h"
#include "pixdef/image_io.h"

namespace pixdef {

std::size_t ClassScores::top1() const {
  if (probabilities.empty()) throw Error("top1: empty scores");
  return static_cast<std::size_t>(
      std::max_element(probabilities.begin(), probabilities.end()) -
      probabilities.begin());
}

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) return {};
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - shift);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

LinearSoftmaxClassifier::LinearSoftmaxClassifier(InputShape shape, std::size_t classes)
    : shape_(shape), weights_(classes * shape.size(), 0.0), bias_(classes, 0.0) {
  if (classes < 2) throw Error("classifier: need at least 2 classes");
  if (shape.size() == 0) throw Error("classifier: empty input shape");
}

LinearSoftmaxClassifier::LinearSoftmaxClassifier(InputShape shape,
                                                 std::vector<double> weights,
                                                 std::vector<double> bias)
    : shape_(shape), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (bias_.size() < 2) throw Error("classifier: need at least 2 classes");
  if (shape.size() == 0) throw Error("classifier: empty input shape");
  if (weights_.size() != bias_.size() * shape.size()) {
    throw Error("classifier: weight matrix does not match classes x input size");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(weights_.begin(), weights_.end(), finite) ||
      !std::all_of(bias_.begin(), bias_.end(), finite)) {
    throw Error("classifier: non-finite parameter");
  }
}

std::span<const double> LinearSoftmaxClassifier::weight_row(std::size_t cls) const {
  if (cls >= num_classes()) throw Error("classifier: class index out of range");
  return std::span<const double>(weights_).subspan(cls * shape_.size(), shape_.size());
}

void LinearSoftmaxClassifier::check_input(const Image& img) const {
  if (!shape_.matches(img)) {
    throw Error("classifier: input " + std::to_string(img.height()) + "x" +
                std::to_string(img.width()) + "x" + std::to_string(img.channels()) +
                " does not match " + std::to_string(shape_.height) + "x" +
                std::to_string(shape_.width) + "x" + std::to_string(shape_.channels));
  }
}

std::vector<double> LinearSoftmaxClassifier::logits(const Image& img) const {
  check_input(img);
  const auto x = img.values();
  const std::size_t d = shape_.size();
  const auto classes = static_cast<std::ptrdiff_t>(num_classes());
  std::vector<double> z(bias_);
#pragma omp parallel for schedule(static) if (d * bias_.size() > (1u << 18))
  for (std::ptrdiff_t c = 0; c < classes; ++c) {
    const double* w = weights_.data() + c * d;
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += w[i] * x[i];
    z[c] += acc;
  }
  return z;
}

ClassScores LinearSoftmaxClassifier::predict(const Image& img) const {
  ClassScores s;
  s.logits = logits(img);
  s.probabilities = softmax(s.logits);
  return s;
}

double LinearSoftmaxClassifier::loss(const Image& img, std::size_t label) const {
  if (label >= num_classes()) throw Error("loss: invalid label");
  const auto z = logits(img);
  const double shift = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - shift);
  return std::log(total) + shift - z[label];
}

Grid LinearSoftmaxClassifier::loss_gradient(const Image& img, std::size_t label) const {
  if (label >= num_classes()) {
    throw Error("loss_gradient: invalid label " + std::to_string(label));
  }
  const auto p = predict(img).probabilities;
  const std::size_t d = shape_.size();
  Grid grad(shape_.height, shape_.width, shape_.channels);
  auto g = grad.values();
  for (std::size_t c = 0; c < num_classes(); ++c) {
    const double coef = p[c] - (c == label ? 1.0 : 0.0);
    if (coef == 0.0) continue;
    const double* w = weights_.data() + c * d;
    for (std::size_t i = 0; i < d; ++i) g[i] += coef * w[i];
  }
  return grad;
}

namespace {

// Per-pixel affine map applied before training: z = (x - offset) * scale.
struct FeatureMap {
  std::vector<double> offset;
  std::vector<double> scale;
};

constexpr double kMinStd = 0.02;

FeatureMap fit_feature_map(const Dataset& data, std::size_t d, bool standardize) {
  FeatureMap f{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (!standardize) return f;
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (const auto& s : data) {
    const auto x = s.image.values();
    for (std::size_t i = 0; i < d; ++i) f.offset[i] += x[i] * inv_n;
  }
  std::vector<double> var(d, 0.0);
  for (const auto& s : data) {
    const auto x = s.image.values();
    for (std::size_t i = 0; i < d; ++i) {
      const double c = x[i] - f.offset[i];
      var[i] += c * c * inv_n;
    }
  }
  for (std::size_t i = 0; i < d; ++i) f.scale[i] = 1.0 / std::max(std::sqrt(var[i]), kMinStd);
  return f;
}

}  // namespace

TrainResult train_toy_classifier(const Dataset& data, std::size_t classes,
                                 const TrainOptions& options) {
  if (data.empty()) throw Error("train: empty dataset");
  if (options.epochs < 0) throw Error("train: epochs must be >= 0");
  if (options.learning_rate < 0.0 || options.weight_decay < 0.0) {
    throw Error("train: learning rate and weight decay must be >= 0");
  }
  const Image& first = data.front().image;
  const InputShape shape{first.height(), first.width(), first.channels()};
  for (const auto& s : data) {
    if (!shape.matches(s.image)) throw Error("train: inconsistent image shapes");
    if (s.label >= classes) throw Error("train: label out of range");
  }
  const std::size_t d = shape.size();
  const std::size_t n = data.size();
  const FeatureMap fmap = fit_feature_map(data, d, options.standardize);

  // Transformed inputs, one row per sample.
  std::vector<double> z(n * d);
  double max_norm_sq = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto x = data[s].image.values();
    double norm = 1.0;  // bias input
    for (std::size_t i = 0; i < d; ++i) {
      const double v = (x[i] - fmap.offset[i]) * fmap.scale[i];
      z[s * d + i] = v;
      norm += v * v;
    }
    max_norm_sq = std::max(max_norm_sq, norm);
  }
  // The mean cross-entropy gradient is L-Lipschitz with
  // L <= max|z~|^2 / 2 + weight_decay, so 1/L guarantees descent.
  const double lr = options.learning_rate > 0.0
                        ? options.learning_rate
                        : 1.0 / (0.5 * max_norm_sq + options.weight_decay);

  std::vector<double> w(classes * d, 0.0);
  std::vector<double> b(classes, 0.0);
  std::vector<double> grad_w(classes * d);
  std::vector<double> grad_b(classes);
  std::vector<double> logits(classes);
  const double inv_n = 1.0 / static_cast<double>(n);
  TrainResult result{LinearSoftmaxClassifier(shape, classes), {}};

  for (int epoch = 0; epoch <= options.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    double total_loss = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double* x = z.data() + s * d;
      for (std::size_t c = 0; c < classes; ++c) {
        const double* wc = w.data() + c * d;
        double acc = b[c];
        for (std::size_t i = 0; i < d; ++i) acc += wc[i] * x[i];
        logits[c] = acc;
      }
      const auto p = softmax(logits);
      const std::size_t label = data[s].label;
      total_loss -= std::log(std::max(p[label], 1e-300));
      for (std::size_t c = 0; c < classes; ++c) {
        const double coef = (p[c] - (c == label ? 1.0 : 0.0)) * inv_n;
        grad_b[c] += coef;
        double* g = grad_w.data() + c * d;
        for (std::size_t i = 0; i < d; ++i) g[i] += coef * x[i];
      }
    }
    double objective = total_loss * inv_n;
    if (options.weight_decay > 0.0) {
      double sq = 0.0;
      for (double v : w) sq += v * v;
      objective += 0.5 * options.weight_decay * sq;
    }
    result.loss_history.push_back(objective);
    if (epoch == options.epochs) break;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= lr * (grad_w[i] + options.weight_decay * w[i]);
    }
    for (std::size_t c = 0; c < classes; ++c) b[c] -= lr * grad_b[c];
  }

  // Fold z = (x - offset) * scale into raw-pixel parameters.
  auto raw_w = result.classifier.mutable_weights();
  auto raw_b = result.classifier.mutable_bias();
  for (std::size_t c = 0; c < classes; ++c) {
    double shift = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double v = w[c * d + i] * fmap.scale[i];
      raw_w[c * d + i] = v;
      shift += v * fmap.offset[i];
    }
    raw_b[c] = b[c] - shift;
  }
  return result;
}

double mean_loss(const LinearSoftmaxClassifier& clf, const Dataset& data) {
  if (data.empty()) throw Error("mean_loss: empty dataset");
  double total = 0.0;
  for (const auto& s : data) total += clf.loss(s.image, s.label);
  return total / static_cast<double>(data.size());
}

double accuracy(const Classifier& clf, const Dataset& data) {
  if (data.empty()) throw Error("accuracy: empty dataset");
  std::size_t correct = 0;
  for (const auto& s : data) {
    if (clf.predict(s.image).top1() == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("classifier header: bad number for " + what + ": '" + s + "'");
  }
  return v;
}

std::size_t parse_count(const std::map<std::string, std::string>& kv,
                        const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error("classifier header: missing key '" + key + "'");
  std::size_t v = 0;
  const auto& s = it->second;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("classifier header: bad count for " + key);
  }
  return v;
}

}  // namespace

void save_classifier(const LinearSoftmaxClassifier& clf,
                     const std::filesystem::path& header_path) {
  std::filesystem::path weights_path = header_path;
  weights_path.replace_extension(".weights.f32g");
  const InputShape& s = clf.shape();
  write_f32grid(Grid(clf.num_classes(), s.size(), 1,
                     std::vector<double>(clf.weights().begin(), clf.weights().end())),
                weights_path);
  std::ofstream out(header_path, std::ios::trunc);
  if (!out) throw Error("cannot write " + header_path.string());
  out << "# linear-softmax classifier\n";
  out << "classes=" << clf.num_classes() << '\n';
  out << "height=" << s.height << '\n';
  out << "width=" << s.width << '\n';
  out << "channels=" << s.channels << '\n';
  out << "bias=";
  for (std::size_t c = 0; c < clf.num_classes(); ++c) {
    out << (c ? "," : "") << format_double(clf.bias()[c]);
  }
  out << '\n';
  out << "weights=" << weights_path.filename().string() << '\n';
  if (!out) throw Error("cannot write " + header_path.string());
}

LinearSoftmaxClassifier load_classifier(const std::filesystem::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw Error("cannot open " + header_path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("classifier header: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const InputShape shape{parse_count(kv, "height"), parse_count(kv, "width"),
                         parse_count(kv, "channels")};
  const std::size_t classes = parse_count(kv, "classes");
  std::vector<double> bias;
  {
    std::stringstream ss(kv["bias"]);
    std::string tok;
    while (std::getline(ss, tok, ',')) bias.push_back(parse_double(tok, "bias"));
  }
  if (bias.size() != classes) throw Error("classifier header: bias length != classes");
  if (!kv.count("weights")) throw Error("classifier header: missing key 'weights'");
  const Grid w = read_f32grid(header_path.parent_path() / kv["weights"]);
  if (w.height() != classes || w.width() != shape.size() || w.channels() != 1) {
    throw Error("classifier: weight grid shape does not match header");
  }
  return LinearSoftmaxClassifier(shape, std::vector<double>(w.values().begin(), w.values().end()),
                                 std::move(bias));
}

}  // namespace pixdef
