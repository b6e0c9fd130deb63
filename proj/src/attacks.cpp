#include "gem/attacks.hpp"

#include <algorithm>
#include <cmath>

namespace gem {

namespace {

int argmax_class(const ProbVector& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

bool goal_met(const LossSpec& spec, int predicted) {
  return spec.targeted() ? predicted == spec.class_index : predicted != spec.class_index;
}

void set_distortions(AttackResult& res, const Vec& x) {
  res.l2_distortion = l2_dist(res.x_adv, x);
  res.linf_distortion = linf_dist(res.x_adv, x);
}

// Elementwise projection onto the eps-box around the original x intersected
// with the data bounds. The two box constraints commute.
void project_box(Vec& v, const Vec& x, const AttackBudget& budget) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double lo_i = std::max(budget.lo, x[i] - budget.epsilon);
    const double hi_i = std::min(budget.hi, x[i] + budget.epsilon);
    v[i] = std::clamp(v[i], lo_i, hi_i);
  }
}

// Gradient of the quantity the attack ascends, so every attack steps along
// +sign of this vector. Mirrors the estimation drives exactly:
//   xent  untargeted  +grad(-log p_y)
//   xent  targeted    -grad(-log p_T)
//   logit untargeted  grad(phi_{y'} - phi_y), y' resolved at the point
//   logit targeted    grad(phi_T - max_{i!=T} phi_i)
Vec whitebox_ascent_direction(const MlpModel& model, const Vec& x, const LossSpec& spec) {
  if (spec.kind == LossKind::kXent) {
    Vec g = model.grad_xent(x, spec.class_index);
    if (spec.targeted()) {
      for (double& v : g) v = -v;
    }
    return g;
  }
  const ForwardResult r = model.forward(x);
  if (spec.mode == AttackMode::kUntargeted) {
    const int y = spec.class_index;
    return model.grad_logit_diff(x, runner_up(r.logits, y), y);
  }
  const int target = spec.class_index;
  return model.grad_logit_diff(x, target, runner_up(r.logits, target));
}

GradientEstimate estimate_gradient(const ScalarFn& g, const Vec& x, const AttackConfig& cfg,
                                   Rng& rng) {
  switch (cfg.reduction.kind) {
    case ReductionKind::kNone: {
      GradientEstimate est;
      est.entries = two_sided_fd(g, x, cfg.delta);
      est.queries_used = 2 * x.size();
      return est;
    }
    case ReductionKind::kRandomGroup:
      return estimate_rg(g, x, cfg.reduction.k, cfg.delta, rng,
                         cfg.reduction.exact_residual_divisor);
    case ReductionKind::kPca:
      if (!cfg.reduction.basis) throw ArgumentError("attack: PCA reduction needs a basis");
      return estimate_pca(g, x, *cfg.reduction.basis, cfg.delta);
  }
  throw ArgumentError("attack: unknown reduction kind");
}

void check_attack_args(const Oracle& oracle, const Vec& x, const AttackConfig& cfg) {
  if (x.size() != oracle.input_dim()) throw ArgumentError("attack: input length mismatch");
  if (cfg.loss.class_index < 0 || cfg.loss.class_index >= oracle.num_classes()) {
    throw ArgumentError("attack: class index out of range");
  }
  if (cfg.delta <= 0.0) throw ArgumentError("attack: delta must be positive");
  if (cfg.budget.epsilon < 0.0) throw ArgumentError("attack: epsilon must be >= 0");
}

}  // namespace

Vec random_perturbation(const Vec& x, const AttackBudget& budget, Rng& rng) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(x[i] + budget.epsilon * sign(rng.normal()), budget.lo, budget.hi);
  }
  return out;
}

Vec diff_of_means(const Vec& x, int y, const std::vector<Vec>& means,
                  const AttackBudget& budget, std::optional<int> target) {
  if (means.size() < 2) throw ArgumentError("diff_of_means: need at least 2 class means");
  if (y < 0 || static_cast<std::size_t>(y) >= means.size()) {
    throw ArgumentError("diff_of_means: class index out of range");
  }
  int t;
  if (target) {
    t = *target;
    if (t < 0 || static_cast<std::size_t>(t) >= means.size()) {
      throw ArgumentError("diff_of_means: target out of range");
    }
  } else {
    t = -1;
    double best = 0.0;
    for (std::size_t c = 0; c < means.size(); ++c) {
      if (static_cast<int>(c) == y) continue;
      const double dist = l2_dist(means[c], means[y]);
      if (t < 0 || dist < best) {
        t = static_cast<int>(c);
        best = dist;
      }
    }
  }
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(x[i] + budget.epsilon * sign(means[t][i] - means[y][i]), budget.lo,
                        budget.hi);
  }
  return out;
}

AttackResult fgs_whitebox(const MlpModel& model, const Vec& x, const AttackConfig& cfg) {
  const Vec dir = whitebox_ascent_direction(model, x, cfg.loss);
  AttackResult res;
  res.x_adv.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    res.x_adv[i] = std::clamp(x[i] + cfg.budget.epsilon * sign(dir[i]), cfg.budget.lo,
                              cfg.budget.hi);
  }
  res.predicted = model.classify(res.x_adv);
  res.success = goal_met(cfg.loss, res.predicted);
  set_distortions(res, x);
  return res;
}

AttackResult ifgs_whitebox(const MlpModel& model, const Vec& x, const AttackConfig& cfg) {
  if (cfg.iterations < 1) throw ArgumentError("ifgs_whitebox: iterations must be >= 1");
  Vec cur = x;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Vec dir = whitebox_ascent_direction(model, cur, cfg.loss);
    for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += cfg.alpha * sign(dir[i]);
    project_box(cur, x, cfg.budget);
  }
  AttackResult res;
  res.x_adv = std::move(cur);
  res.predicted = model.classify(res.x_adv);
  res.success = goal_met(cfg.loss, res.predicted);
  set_distortions(res, x);
  return res;
}

AttackResult fd_attack(Oracle& oracle, const Vec& x, const AttackConfig& cfg) {
  check_attack_args(oracle, x, cfg);
  CountingOracle counted(oracle);
  const AttackDrive drive = attack_objective(counted, cfg.loss);
  Rng rng(cfg.seed);

  counted.set_phase("estimate");
  if (cfg.loss.kind == LossKind::kLogit && !cfg.loss.targeted() &&
      cfg.loss.freeze_runner_up) {
    drive.g(x);  // pin y' at the benign point (one extra query)
  }
  const GradientEstimate est = estimate_gradient(drive.g, x, cfg, rng);

  AttackResult res;
  res.x_adv.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    res.x_adv[i] = std::clamp(x[i] + cfg.budget.epsilon * drive.step_sign * sign(est.entries[i]),
                              cfg.budget.lo, cfg.budget.hi);
  }

  counted.set_phase("verify");
  res.predicted = argmax_class(counted.query_probs(res.x_adv));
  res.success = goal_met(cfg.loss, res.predicted);
  res.queries = counted.ledger()->total();
  res.estimation_queries = counted.ledger()->phase("estimate");
  set_distortions(res, x);
  return res;
}

AttackResult ifd_attack(Oracle& oracle, const Vec& x, const AttackConfig& cfg) {
  check_attack_args(oracle, x, cfg);
  if (cfg.iterations < 1) throw ArgumentError("ifd_attack: iterations must be >= 1");
  CountingOracle counted(oracle);
  const AttackDrive drive = attack_objective(counted, cfg.loss);
  Rng rng(cfg.seed);

  counted.set_phase("estimate");
  if (cfg.loss.kind == LossKind::kLogit && !cfg.loss.targeted() &&
      cfg.loss.freeze_runner_up) {
    drive.g(x);
  }
  Vec cur = x;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const GradientEstimate est = estimate_gradient(drive.g, cur, cfg, rng);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      cur[i] += cfg.alpha * drive.step_sign * sign(est.entries[i]);
    }
    project_box(cur, x, cfg.budget);
  }

  AttackResult res;
  res.x_adv = std::move(cur);
  counted.set_phase("verify");
  res.predicted = argmax_class(counted.query_probs(res.x_adv));
  res.success = goal_met(cfg.loss, res.predicted);
  res.queries = counted.ledger()->total();
  res.estimation_queries = counted.ledger()->phase("estimate");
  set_distortions(res, x);
  return res;
}

AttackResult spsa_attack(Oracle& oracle, const Vec& x, const AttackConfig& cfg,
                         std::size_t steps) {
  check_attack_args(oracle, x, cfg);
  if (steps == 0) {
    AttackResult res;
    res.x_adv = x;
    return res;
  }
  CountingOracle counted(oracle);
  const AttackDrive drive = attack_objective(counted, cfg.loss);
  Rng rng(cfg.seed);

  counted.set_phase("estimate");
  Vec cur = x;
  Vec v(x.size());
  for (std::size_t step = 0; step < steps; ++step) {
    for (double& vi : v) vi = rng.rademacher();
    const double deriv = directional_fd(drive.g, cur, v, cfg.delta);
    // sign(deriv * v_i) with v_i = +-1; the drive sign keeps the step
    // loss-ascending.
    const double s = drive.step_sign * sign(deriv);
    for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += cfg.alpha * s * v[i];
    project_box(cur, x, cfg.budget);
  }

  AttackResult res;
  res.x_adv = std::move(cur);
  counted.set_phase("verify");
  res.predicted = argmax_class(counted.query_probs(res.x_adv));
  res.success = goal_met(cfg.loss, res.predicted);
  res.queries = counted.ledger()->total();
  res.estimation_queries = counted.ledger()->phase("estimate");
  set_distortions(res, x);
  return res;
}

AttackResult rand_init_then(const SingleStepAttack& attack, const Vec& x,
                            const AttackConfig& cfg) {
  const double m = cfg.init_rand_magnitude;
  if (m < 0.0) throw ArgumentError("rand_init_then: magnitude must be >= 0");
  if (m > cfg.budget.epsilon) {
    throw ArgumentError("rand_init_then: magnitude exceeds the attack budget");
  }
  if (m == 0.0) return attack(x, cfg);

  Rng rng(cfg.seed);
  Vec start(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    start[i] = std::clamp(x[i] + m * sign(rng.normal()), cfg.budget.lo, cfg.budget.hi);
  }
  AttackConfig inner = cfg;
  inner.budget.epsilon = cfg.budget.epsilon - m;
  inner.init_rand_magnitude = 0.0;

  AttackResult res = attack(start, inner);
  set_distortions(res, x);  // measure displacement from the original point
  return res;
}

AttackResult transfer_attack(const std::vector<const MlpModel*>& surrogates,
                             const std::vector<double>& weights, Oracle& target, const Vec& x,
                             const AttackConfig& cfg) {
  if (surrogates.empty()) throw ArgumentError("transfer_attack: need at least one surrogate");
  std::vector<double> w = weights;
  if (w.empty()) w.assign(surrogates.size(), 1.0 / static_cast<double>(surrogates.size()));
  if (w.size() != surrogates.size()) {
    throw ArgumentError("transfer_attack: weight count mismatch");
  }

  auto ensemble_direction = [&](const Vec& z) {
    Vec dir(z.size(), 0.0);
    for (std::size_t m = 0; m < surrogates.size(); ++m) {
      const Vec g = whitebox_ascent_direction(*surrogates[m], z, cfg.loss);
      for (std::size_t i = 0; i < z.size(); ++i) dir[i] += w[m] * g[i];
    }
    return dir;
  };

  Vec cur = x;
  if (cfg.iterations <= 1) {
    const Vec dir = ensemble_direction(x);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      cur[i] = std::clamp(x[i] + cfg.budget.epsilon * sign(dir[i]), cfg.budget.lo,
                          cfg.budget.hi);
    }
  } else {
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      const Vec dir = ensemble_direction(cur);
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += cfg.alpha * sign(dir[i]);
      project_box(cur, x, cfg.budget);
    }
  }

  CountingOracle counted(target);
  counted.set_phase("verify");
  AttackResult res;
  res.x_adv = std::move(cur);
  res.predicted = argmax_class(counted.query_probs(res.x_adv));
  res.success = goal_met(cfg.loss, res.predicted);
  res.queries = counted.ledger()->total();
  set_distortions(res, x);
  return res;
}

}  // namespace gem
