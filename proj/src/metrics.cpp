#include "gem/metrics.hpp"

namespace gem {

double success_rate(const std::vector<SampleRecord>& records) {
  if (records.empty()) throw ArgumentError("success_rate: no results");
  std::size_t hits = 0;
  for (const SampleRecord& r : records) {
    if (r.result.success) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

double conditioned_success_rate(const std::vector<SampleRecord>& records) {
  if (records.empty()) throw ArgumentError("conditioned_success_rate: no results");
  std::size_t hits = 0, considered = 0;
  for (const SampleRecord& r : records) {
    if (r.original_pred != r.true_label) continue;
    ++considered;
    if (r.result.success) ++hits;
  }
  if (considered == 0) return 0.0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(considered);
}

double avg_distortion(const std::vector<Vec>& benign, const std::vector<Vec>& adversarial) {
  if (benign.size() != adversarial.size() || benign.empty()) {
    throw ArgumentError("avg_distortion: sample count mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < benign.size(); ++i) {
    if (benign[i].size() != adversarial[i].size()) {
      throw ArgumentError("avg_distortion: dimension mismatch at sample " + std::to_string(i));
    }
    sum += l2_dist(benign[i], adversarial[i]);
  }
  return sum / static_cast<double>(benign.size());
}

}  // namespace gem
