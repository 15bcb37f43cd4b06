#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "pixdef/classifier.h"
#include "pixdef/image.h"

namespace pixdef {

struct AttackBudget {
  double epsilon = 0.03;  // max-norm bound in intensity units
  double step = 0.01;     // per-iteration step alpha
  int max_iterations = 10;
};

void validate(const AttackBudget& budget);

// x + eps * sign(grad loss), clamped to [0,1]. sign(0) = 0.
Image fgsm(const LinearSoftmaxClassifier& clf, const Image& img,
           std::size_t label, double epsilon);

struct IgsmResult {
  Image image;
  bool success = false;  // prediction left `label` within the budget
  int iterations = 0;
};

// x' <- Clip_{x,eps}(x' + alpha * sign(grad loss(x'))), also clamped to [0,1].
// Checks the prediction after every step and stops at the first
// misclassification.
IgsmResult igsm(const LinearSoftmaxClassifier& clf, const Image& img,
                std::size_t label, const AttackBudget& budget);

enum class AttackKind { none, fgsm, igsm };
std::optional<AttackKind> parse_attack_kind(std::string_view name);
std::string_view to_string(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::fgsm;
  AttackBudget budget;
};

Image run_attack(const LinearSoftmaxClassifier& clf, const Image& img,
                 std::size_t label, const AttackSpec& spec);

}  // namespace pixdef
