#ifndef GEM_METRICS_HPP
#define GEM_METRICS_HPP

#include <vector>

#include "gem/attacks.hpp"

namespace gem {

/// Outcome of one attacked sample, with enough context for both the plain
/// and the conditioned success metric.
struct SampleRecord {
  std::size_t index = 0;  // position in the attacked subset
  int true_label = -1;
  int original_pred = -1;  // classification of the benign sample
  int target = -1;         // -1 for untargeted attacks
  AttackResult result;
};

/// 100 * (samples meeting the adversary's goal) / (all attacked samples).
double success_rate(const std::vector<SampleRecord>& records);

/// Same, restricted to samples the classifier got right before the attack;
/// both numerator and denominator exclude originally misclassified inputs.
double conditioned_success_rate(const std::vector<SampleRecord>& records);

/// Mean L2 distance between paired benign and adversarial samples.
double avg_distortion(const std::vector<Vec>& benign, const std::vector<Vec>& adversarial);

}  // namespace gem

#endif  // GEM_METRICS_HPP
