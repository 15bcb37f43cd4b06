#include "pixdef/attacks.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "pixdef/error.h"

namespace pixdef {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// x + eps can round above the true sum; step back an ulp at a time so that
// |v - x| <= eps also holds in floating point.
double into_ball(double v, double x, double eps) {
  while (std::abs(v - x) > eps) v = std::nextafter(v, x);
  return v;
}

void check_label(const LinearSoftmaxClassifier& clf, std::size_t label) {
  if (label >= clf.num_classes()) throw Error("attack: invalid label " + std::to_string(label));
}

}  // namespace

void validate(const AttackBudget& budget) {
  if (!(budget.epsilon >= 0.0)) throw Error("attack: epsilon must be >= 0");
  if (!(budget.step > 0.0)) throw Error("attack: step must be > 0");
  if (budget.max_iterations < 1) throw Error("attack: max_iterations must be >= 1");
}

Image fgsm(const LinearSoftmaxClassifier& clf, const Image& img,
           std::size_t label, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error("fgsm: epsilon must be >= 0");
  check_label(clf, label);
  const Grid grad = clf.loss_gradient(img, label);
  Grid out = img.grid();
  auto v = out.values();
  const auto g = grad.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = into_ball(v[i] + epsilon * sign(g[i]), v[i], epsilon);
  }
  return Image::clamped(std::move(out));
}

IgsmResult igsm(const LinearSoftmaxClassifier& clf, const Image& img,
                std::size_t label, const AttackBudget& budget) {
  validate(budget);
  check_label(clf, label);
  const auto x = img.values();
  Image current = img;
  IgsmResult result{img, false, 0};
  for (int m = 0; m < budget.max_iterations; ++m) {
    const Grid grad = clf.loss_gradient(current, label);
    Grid next = current.grid();
    auto v = next.values();
    const auto g = grad.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double stepped = v[i] + budget.step * sign(g[i]);
      v[i] = into_ball(std::min(std::max(stepped, x[i] - budget.epsilon), x[i] + budget.epsilon),
                       x[i], budget.epsilon);
    }
    current = Image::clamped(std::move(next));
    result.iterations = m + 1;
    if (clf.predict(current).top1() != label) {
      result.success = true;
      break;
    }
  }
  result.image = std::move(current);
  return result;
}

std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  if (name == "none") return AttackKind::none;
  if (name == "fgsm") return AttackKind::fgsm;
  if (name == "igsm") return AttackKind::igsm;
  return std::nullopt;
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::igsm: return "igsm";
  }
  return "unknown";
}

Image run_attack(const LinearSoftmaxClassifier& clf, const Image& img,
                 std::size_t label, const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::none: return img;
    case AttackKind::fgsm: return fgsm(clf, img, label, spec.budget.epsilon);
    case AttackKind::igsm: return igsm(clf, img, label, spec.budget).image;
  }
  return img;
}

}  // namespace pixdef
