#ifndef GEM_EXPERIMENT_HPP
#define GEM_EXPERIMENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "gem/attacks.hpp"
#include "gem/dataset.hpp"
#include "gem/metrics.hpp"
#include "gem/model.hpp"
#include "gem/oracle.hpp"

namespace gem {

/// One attack catalog entry.
struct AttackEntry {
  std::string name;            // optional display override
  std::string method = "fd";   // rand | dom | fgs | ifgs | fd | ifd | spsa | transfer
  LossKind loss = LossKind::kLogit;
  AttackMode mode = AttackMode::kUntargeted;
  double kappa = 0.0;
  double epsilon = 0.3;
  double delta = 0.01;
  double alpha = 0.01;
  std::size_t iterations = 1;
  std::string reduction = "none";  // none | rg | pca
  std::size_t k = 1;
  bool exact_residual_divisor = false;
  double init_rand_magnitude = 0.0;
  std::size_t spsa_steps = 0;
  std::vector<std::string> surrogates;  // model paths for transfer attacks
};

/// Taxonomy-style display name, e.g. "FD-logit", "IGE-QR (RG-8, xent)-T".
std::string catalog_name(const AttackEntry& entry);

struct DatasetSpec {
  std::string kind = "synth-digits";  // mnist | synth-digits | blobs
  std::string images_path, labels_path;
  std::uint64_t seed = 7;
  std::size_t count = 2000;
  std::size_t dim = 16;   // blobs only
  int classes = 4;        // blobs only
  double spread = 0.08;   // blobs only
};

struct ModelSpec {
  std::string path;  // load when set, otherwise train below
  std::string arch = "mlp-128";
  TrainConfig train;
  std::size_t train_count = 0;  // samples used for training (0 = all minus eval)
};

struct OracleSpec {
  std::string kind = "local";  // local | remote
  OracleEndpoint endpoint;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelSpec model;
  OracleSpec oracle;
  std::string selection = "first";  // first | random
  std::size_t sample_count = 100;
  std::uint64_t selection_seed = 1;
  std::uint64_t target_seed = 2;
  std::uint64_t seed = 42;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::vector<AttackEntry> attacks;
  std::string csv_path, json_path;
};

/// Parse the JSON experiment file; unknown keys are rejected at every level.
ExperimentConfig load_experiment_config(const std::string& path);

struct AttackRow {
  AttackEntry entry;
  std::string name;
  std::string error;  // non-empty when the row aborted
  double success_rate = 0.0;
  double conditioned_success_rate = 0.0;
  double avg_l2 = 0.0;
  double avg_queries = 0.0;
  double sec_per_sample = 0.0;
  std::vector<SampleRecord> records;
};

struct ExperimentReport {
  std::vector<AttackRow> rows;
  std::size_t sample_count = 0;
  double model_accuracy = -1.0;  // accuracy on the attacked subset (local oracle only)
};

/// Run every catalog entry over the selected subset, optionally fanning
/// samples out across GEM_THREADS workers. Per-sample attack seeds are
/// derived as row_seed ^ sample index, so parallel and sequential runs
/// produce identical records. Writes the CSV/JSON reports when paths are
/// set; the JSON report carries no timing so reruns are byte-identical.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Environment defaults: GEM_SEED and GEM_THREADS.
std::uint64_t env_seed(std::uint64_t fallback);
std::size_t env_threads(std::size_t fallback);

/// gem-pca-v1 on-disk basis format (JSON, value-exact numbers).
void save_pca_basis(const PcaBasis& basis, const std::string& path);
PcaBasis load_pca_basis(const std::string& path);

}  // namespace gem

#endif  // GEM_EXPERIMENT_HPP
