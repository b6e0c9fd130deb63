#ifndef GEM_LOSSES_HPP
#define GEM_LOSSES_HPP

#include "gem/numerics.hpp"

namespace gem {

class Oracle;

using ProbVector = std::vector<double>;
using LogitVector = std::vector<double>;

enum class LossKind { kXent, kLogit };
enum class AttackMode { kUntargeted, kTargeted };

/// Which loss an attack drives, and against which class.
/// class_index is the true label y for untargeted attacks and the target T
/// for targeted ones. kappa is the logit-loss confidence margin.
struct LossSpec {
  LossKind kind = LossKind::kLogit;
  AttackMode mode = AttackMode::kUntargeted;
  int class_index = 0;
  double kappa = 0.0;
  // Ablation switch: resolve the runner-up class y' once at the benign point
  // instead of at every evaluation point.
  bool freeze_runner_up = false;

  bool targeted() const { return mode == AttackMode::kTargeted; }
};

/// Cross-entropy from probabilities: -log(max(p_y, 1e-12)).
double xent_from_probs(const ProbVector& p, int y);

/// Logit loss. Untargeted: max(phi_y - max_{i!=y} phi_i, -kappa).
/// Targeted: max_{i!=T} phi_i - phi_T (unclamped drive term).
double logit_loss(const LogitVector& phi, const LossSpec& spec);

/// Index of the largest logit excluding `excluded`; ties broken low.
int runner_up(const LogitVector& phi, int excluded);

/// The scalar function an estimation attack differentiates, plus the sign
/// with which the attack steps along the estimated gradient:
///
///   untargeted xent   g = p_y                      step -sign(FD g)
///   targeted   xent   g = p_T                      step +sign(FD g)
///   untargeted logit  g = phi_{y'} - phi_y         step +sign(FD g)
///   targeted   logit  g = max_{i!=T} phi_i - phi_T step -sign(FD g)
///
/// Each evaluation costs exactly one oracle query. For the untargeted logit
/// drive, y' is re-resolved at every evaluation point unless the spec
/// freezes it.
struct AttackDrive {
  ScalarFn g;
  double step_sign = 1.0;
};

AttackDrive attack_objective(Oracle& oracle, const LossSpec& spec);

}  // namespace gem

#endif  // GEM_LOSSES_HPP
