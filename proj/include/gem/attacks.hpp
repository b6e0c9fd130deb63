#ifndef GEM_ATTACKS_HPP
#define GEM_ATTACKS_HPP

#include <functional>
#include <optional>

#include "gem/losses.hpp"
#include "gem/model.hpp"
#include "gem/numerics.hpp"
#include "gem/oracle.hpp"
#include "gem/query_reduction.hpp"

namespace gem {

struct AttackBudget {
  double epsilon = 0.3;  // L-inf radius in data units
  double lo = 0.0, hi = 1.0;
};

enum class ReductionKind { kNone, kRandomGroup, kPca };

struct Reduction {
  ReductionKind kind = ReductionKind::kNone;
  std::size_t k = 1;
  const PcaBasis* basis = nullptr;  // required for kPca
  bool exact_residual_divisor = false;
};

struct AttackConfig {
  AttackBudget budget;
  LossSpec loss;
  double delta = 0.01;        // estimation step
  double alpha = 0.01;        // iteration step size
  std::size_t iterations = 1;  // t
  Reduction reduction;
  double init_rand_magnitude = 0.0;
  std::uint64_t seed = 0;
};

struct AttackResult {
  Vec x_adv;
  bool success = false;
  int predicted = -1;
  std::uint64_t queries = 0;             // total oracle evaluations consumed
  std::uint64_t estimation_queries = 0;  // gradient-estimation share
  double l2_distortion = 0.0;
  double linf_distortion = 0.0;
};

/// clip(x + eps * sign(p)) with p ~ N(0, I_d).
Vec random_perturbation(const Vec& x, const AttackBudget& budget, Rng& rng);

/// clip(x + eps * sign(mu_T - mu_y)). Untargeted attacks pick the class
/// whose mean is L2-closest to the original class's mean (ties to the
/// lowest index).
Vec diff_of_means(const Vec& x, int y, const std::vector<Vec>& means,
                  const AttackBudget& budget, std::optional<int> target = std::nullopt);

/// Single gradient-sign step on the model's own gradients, then one
/// re-classification on the model. No oracle queries.
AttackResult fgs_whitebox(const MlpModel& model, const Vec& x, const AttackConfig& cfg);

/// Projected iterative gradient-sign: t steps of size alpha, each projected
/// onto the eps-box around x intersected with the data bounds.
AttackResult ifgs_whitebox(const MlpModel& model, const Vec& x, const AttackConfig& cfg);

/// Single-step estimation attack: estimates the drive's gradient with
/// two-sided finite differences (or the configured reduction scheme), takes
/// one signed eps-step, then spends one verification query.
AttackResult fd_attack(Oracle& oracle, const Vec& x, const AttackConfig& cfg);

/// Iterative estimation attack: t projected steps of size alpha, each with
/// a fresh gradient estimate at the current iterate (random-grouping
/// partitions are redrawn every iteration), plus one verification query.
AttackResult ifd_attack(Oracle& oracle, const Vec& x, const AttackConfig& cfg);

/// Random-direction two-point estimation: per step draws a Rademacher
/// direction v, estimates the directional derivative, and steps along
/// sign(estimate * v). 2 queries per step, one final verification query
/// (none when steps == 0).
AttackResult spsa_attack(Oracle& oracle, const Vec& x, const AttackConfig& cfg,
                         std::size_t steps);

using SingleStepAttack = std::function<AttackResult(const Vec& x, const AttackConfig& cfg)>;

/// Gradient-masking escape: moves to x' = clip(x + m * sign(N(0,I))) and
/// runs the wrapped single-step attack from x' with the remaining budget
/// eps - m, so total displacement from x never exceeds eps. Distortions in
/// the returned result are measured from the original x.
AttackResult rand_init_then(const SingleStepAttack& attack, const Vec& x,
                            const AttackConfig& cfg);

/// Crafts the sample on the surrogate ensemble with FGS (iterations == 1)
/// or IFGS using the weighted ensemble loss, then spends exactly one target
/// query to judge success. Empty weights default to uniform.
AttackResult transfer_attack(const std::vector<const MlpModel*>& surrogates,
                             const std::vector<double>& weights, Oracle& target, const Vec& x,
                             const AttackConfig& cfg);

}  // namespace gem

#endif  // GEM_ATTACKS_HPP
