#include "gem/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gem/oracle.hpp"

namespace gem {

double xent_from_probs(const ProbVector& p, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= p.size()) {
    throw ArgumentError("xent_from_probs: class index out of range");
  }
  return -std::log(std::max(p[y], 1e-12));
}

int runner_up(const LogitVector& phi, int excluded) {
  if (phi.size() < 2) throw ArgumentError("runner_up: need at least 2 classes");
  int best = -1;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (static_cast<int>(i) == excluded) continue;
    if (best < 0 || phi[i] > phi[best]) best = static_cast<int>(i);
  }
  return best;
}

double logit_loss(const LogitVector& phi, const LossSpec& spec) {
  if (phi.size() < 2) throw ArgumentError("logit_loss: need at least 2 classes");
  if (spec.class_index < 0 || static_cast<std::size_t>(spec.class_index) >= phi.size()) {
    throw ArgumentError("logit_loss: class index out of range");
  }
  if (spec.mode == AttackMode::kUntargeted) {
    const int y = spec.class_index;
    return std::max(phi[y] - phi[runner_up(phi, y)], -spec.kappa);
  }
  const int target = spec.class_index;
  return phi[runner_up(phi, target)] - phi[target];
}

AttackDrive attack_objective(Oracle& oracle, const LossSpec& spec) {
  if (spec.class_index < 0 || spec.class_index >= oracle.num_classes()) {
    throw ArgumentError("attack_objective: class index out of range for this oracle");
  }

  AttackDrive drive;
  if (spec.kind == LossKind::kXent) {
    const int cls = spec.class_index;
    drive.g = [&oracle, cls](const Vec& x) { return oracle.query_probs(x)[cls]; };
    drive.step_sign = spec.targeted() ? 1.0 : -1.0;
    return drive;
  }

  if (spec.mode == AttackMode::kUntargeted) {
    const int y = spec.class_index;
    // y' is re-resolved at every evaluation point; frozen mode pins it from
    // the first evaluation instead.
    auto frozen = std::make_shared<int>(-1);
    const bool freeze = spec.freeze_runner_up;
    drive.g = [&oracle, y, freeze, frozen](const Vec& x) {
      const LogitVector phi = recover_logits(oracle.query_probs(x));
      int yp;
      if (freeze) {
        if (*frozen < 0) *frozen = runner_up(phi, y);
        yp = *frozen;
      } else {
        yp = runner_up(phi, y);
      }
      return phi[yp] - phi[y];
    };
    drive.step_sign = 1.0;
    return drive;
  }

  const int target = spec.class_index;
  drive.g = [&oracle, target](const Vec& x) {
    const LogitVector phi = recover_logits(oracle.query_probs(x));
    return phi[runner_up(phi, target)] - phi[target];
  };
  drive.step_sign = -1.0;
  return drive;
}

}  // namespace gem
