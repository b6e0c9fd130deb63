#ifndef GEM_ORACLE_HPP
#define GEM_ORACLE_HPP

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gem/losses.hpp"
#include "gem/model.hpp"
#include "gem/numerics.hpp"

namespace gem {

/// Exact count of oracle evaluations, optionally split into labeled phases.
/// Increments are atomic; totals stay exact under parallel attack workers.
class QueryLedger {
 public:
  void add(const std::string& phase) {
    total_.fetch_add(1, std::memory_order_relaxed);
    if (!phase.empty()) {
      std::lock_guard lock(mu_);
      ++per_phase_[phase];
    }
  }

  std::uint64_t total() const { return total_.load(std::memory_order_relaxed); }

  std::uint64_t phase(const std::string& name) const {
    std::lock_guard lock(mu_);
    const auto it = per_phase_.find(name);
    return it == per_phase_.end() ? 0 : it->second;
  }

  std::map<std::string, std::uint64_t> phases() const {
    std::lock_guard lock(mu_);
    return per_phase_;
  }

 private:
  std::atomic<std::uint64_t> total_{0};
  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> per_phase_;
};

/// The black-box boundary: one probability vector per query.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::size_t input_dim() const = 0;
  virtual int num_classes() const = 0;
  virtual ProbVector query_probs(const Vec& x) = 0;
};

/// In-process adapter over an MlpModel; bit-identical to model.forward.
class LocalOracle : public Oracle {
 public:
  explicit LocalOracle(const MlpModel& model) : model_(&model) {}
  std::size_t input_dim() const override { return model_->input_dim; }
  int num_classes() const override { return model_->num_classes; }
  ProbVector query_probs(const Vec& x) override { return model_->forward(x).probs; }

 private:
  const MlpModel* model_;
};

/// Transparent wrapper counting every query into a shared ledger. The phase
/// label applies to subsequent queries; set it only from the thread driving
/// this wrapper (each attack worker owns its own wrapper).
class CountingOracle : public Oracle {
 public:
  explicit CountingOracle(Oracle& inner)
      : inner_(&inner), ledger_(std::make_shared<QueryLedger>()) {}

  std::size_t input_dim() const override { return inner_->input_dim(); }
  int num_classes() const override { return inner_->num_classes(); }
  ProbVector query_probs(const Vec& x) override {
    ledger_->add(phase_);
    return inner_->query_probs(x);
  }

  void set_phase(std::string phase) { phase_ = std::move(phase); }
  const std::shared_ptr<QueryLedger>& ledger() const { return ledger_; }

 private:
  Oracle* inner_;
  std::shared_ptr<QueryLedger> ledger_;
  std::string phase_;
};

inline CountingOracle with_counter(Oracle& inner) { return CountingOracle(inner); }

/// Entrywise log with a 1e-12 probability floor; recovers logits up to the
/// softmax's additive constant without -inf poisoning.
LogitVector recover_logits(const ProbVector& p);

/// Remote classification endpoint configuration. category_order pins the
/// class indexing when the server reports named scores.
struct OracleEndpoint {
  std::string base_url;
  int timeout_ms = 5000;
  int retry_limit = 2;
  std::string auth_token;
  std::vector<std::string> category_order;
};

struct RemoteStats {
  std::uint64_t retries = 0;
};

/// POST the feature vector to /v1/classify and parse the probabilities.
/// Accepts either the ordered "probabilities" array or a named "scores"
/// object resolved through endpoint.category_order. Scores are renormalized
/// when their sum falls inside [0.99, 1.01]; anything outside that band is a
/// protocol error. Non-2xx responses are retried with exponential backoff
/// (base 250 ms, factor 2) up to retry_limit times.
ProbVector remote_classify(const OracleEndpoint& endpoint, const Vec& x,
                           RemoteStats* stats = nullptr);

/// Oracle over a remote gem-infer-v1 server; fetches /v1/meta once.
class RemoteOracle : public Oracle {
 public:
  explicit RemoteOracle(OracleEndpoint endpoint);
  std::size_t input_dim() const override { return input_dim_; }
  int num_classes() const override { return num_classes_; }
  ProbVector query_probs(const Vec& x) override;

  std::uint64_t total_retries() const { return stats_.retries; }
  std::pair<double, double> data_range() const { return {lo_, hi_}; }

 private:
  OracleEndpoint endpoint_;
  std::size_t input_dim_ = 0;
  int num_classes_ = 0;
  double lo_ = 0.0, hi_ = 1.0;
  RemoteStats stats_;
};

}  // namespace gem

#endif  // GEM_ORACLE_HPP
