// gem: black-box gradient-estimation attack toolkit CLI.

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "gem/attacks.hpp"
#include "gem/dataset.hpp"
#include "gem/experiment.hpp"
#include "gem/model.hpp"
#include "gem/server.hpp"

namespace {

struct DatasetFlags {
  std::string kind = "synth-digits";
  std::string images, labels;
  std::uint64_t seed = 7;
  std::size_t count = 2000;
  std::size_t dim = 16;
  int classes = 4;
  double spread = 0.08;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", kind, "Dataset kind: mnist | synth-digits | blobs")
        ->check(CLI::IsMember({"mnist", "synth-digits", "blobs"}));
    cmd->add_option("--images", images, "IDX images path (mnist)");
    cmd->add_option("--labels", labels, "IDX labels path (mnist)");
    cmd->add_option("--data-seed", seed, "Synthetic dataset seed");
    cmd->add_option("--count", count, "Synthetic dataset size");
    cmd->add_option("--dim", dim, "Blob dimensionality");
    cmd->add_option("--classes", classes, "Blob class count");
    cmd->add_option("--spread", spread, "Blob standard deviation");
  }

  gem::DatasetSpec spec() const {
    gem::DatasetSpec s;
    s.kind = kind;
    s.images_path = images;
    s.labels_path = labels;
    s.seed = seed;
    s.count = count;
    s.dim = dim;
    s.classes = classes;
    s.spread = spread;
    return s;
  }

  gem::Dataset build() const {
    if (kind == "mnist") return gem::load_mnist_idx(images, labels);
    if (kind == "blobs") return gem::synth_blobs(seed, count, dim, classes, spread);
    return gem::synth_digits(seed, count);
  }
};

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

int run_train(const DatasetFlags& data_flags, const std::string& arch,
              const gem::TrainConfig& tc, std::size_t holdout, const std::string& out,
              const gem::AdvTrainKind* adv, const std::vector<std::string>& source_paths) {
  gem::Dataset data = data_flags.build();
  gem::Dataset eval;
  const gem::Dataset* eval_ptr = nullptr;
  if (holdout > 0 && holdout < data.size()) {
    eval = data.slice(data.size() - holdout, holdout);
    data = data.slice(0, data.size() - holdout);
    eval_ptr = &eval;
  }

  gem::TrainStats stats;
  gem::MlpModel model;
  if (adv) {
    std::vector<gem::MlpModel> sources;
    gem::AdvTrainKind kind = *adv;
    for (const std::string& path : source_paths) sources.push_back(gem::load_model(path));
    for (const gem::MlpModel& m : sources) kind.sources.push_back(&m);
    model = gem::adversarial_train(data, gem::arch_from_name(arch), tc, kind, eval_ptr, &stats);
  } else {
    model = gem::train(data, gem::arch_from_name(arch), tc, eval_ptr, &stats);
  }

  std::cout << "train accuracy: " << 100.0 * stats.train_accuracy << "%\n";
  if (eval_ptr) std::cout << "eval accuracy:  " << 100.0 * stats.eval_accuracy << "%\n";
  if (!out.empty()) {
    gem::save_model(model, out);
    std::cout << "model written to " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gem: query-based black-box adversarial attack toolkit"};
  app.require_subcommand(1);

  // --- train / adv-train ---------------------------------------------------
  DatasetFlags train_data;
  std::string arch = "mlp-128";
  gem::TrainConfig tc;
  tc.seed = gem::env_seed(1);
  std::size_t holdout = 0;
  std::string model_out;

  auto* cmd_train = app.add_subcommand("train", "Train a softmax MLP classifier");
  train_data.attach(cmd_train);
  cmd_train->add_option("--arch", arch, "mlp-128 | mlp-d | widths like 256-64");
  cmd_train->add_option("--epochs", tc.epochs, "Training epochs");
  cmd_train->add_option("--batch", tc.batch_size, "Minibatch size");
  cmd_train->add_option("--lr", tc.learning_rate, "Learning rate");
  cmd_train->add_option("--seed", tc.seed, "Training seed");
  cmd_train->add_option("--dropout", tc.dropout_rate, "Dropout rate (0 disables)");
  cmd_train->add_option("--holdout", holdout, "Held-out eval samples from the tail");
  cmd_train->add_option("--out", model_out, "Output model path (gem-model-v1)");

  std::string adv_variant = "standard";
  gem::AdvTrainKind adv_kind;
  std::vector<std::string> adv_sources;
  auto* cmd_adv = app.add_subcommand("adv-train", "Adversarial training (FGS defenses)");
  train_data.attach(cmd_adv);
  cmd_adv->add_option("--arch", arch, "mlp-128 | mlp-d | widths like 256-64");
  cmd_adv->add_option("--epochs", tc.epochs, "Training epochs");
  cmd_adv->add_option("--batch", tc.batch_size, "Minibatch size");
  cmd_adv->add_option("--lr", tc.learning_rate, "Learning rate");
  cmd_adv->add_option("--seed", tc.seed, "Training seed");
  cmd_adv->add_option("--dropout", tc.dropout_rate, "Dropout rate");
  cmd_adv->add_option("--holdout", holdout, "Held-out eval samples from the tail");
  cmd_adv->add_option("--out", model_out, "Output model path");
  cmd_adv->add_option("--variant", adv_variant, "standard | ensemble | iterative")
      ->check(CLI::IsMember({"standard", "ensemble", "iterative"}));
  cmd_adv->add_option("--adv-eps", adv_kind.epsilon, "L-inf budget of training-time samples");
  cmd_adv->add_option("--mix", adv_kind.mix, "Benign loss weight");
  cmd_adv->add_option("--sources", adv_sources, "Source model paths (ensemble)");
  cmd_adv->add_option("--adv-t", adv_kind.iterations, "IFGS iterations (iterative)");
  cmd_adv->add_option("--adv-alpha", adv_kind.step, "IFGS step size (iterative)");

  // --- attack ---------------------------------------------------------------
  DatasetFlags attack_data;
  gem::ExperimentConfig exp;
  exp.seed = gem::env_seed(42);
  exp.threads = gem::env_threads(0);
  gem::AttackEntry entry;
  std::string loss_name = "logit", mode_name = "untargeted";
  std::string model_path, remote_url, remote_auth;

  auto* cmd_attack = app.add_subcommand("attack", "Run one attack over a sample set");
  attack_data.attach(cmd_attack);
  cmd_attack->add_option("--model", model_path, "Model path (local oracle / white-box)");
  cmd_attack->add_option("--remote", remote_url, "Remote oracle base URL (gem-infer-v1)");
  cmd_attack->add_option("--auth", remote_auth, "Bearer token for the remote oracle");
  cmd_attack
      ->add_option("--method", entry.method,
                   "rand | dom | fgs | ifgs | fd | ifd | spsa | transfer")
      ->check(CLI::IsMember({"rand", "dom", "fgs", "ifgs", "fd", "ifd", "spsa", "transfer"}));
  cmd_attack->add_option("--loss", loss_name, "xent | logit")
      ->check(CLI::IsMember({"xent", "logit"}));
  cmd_attack->add_option("--mode", mode_name, "untargeted | targeted")
      ->check(CLI::IsMember({"untargeted", "targeted"}));
  cmd_attack->add_option("--eps", entry.epsilon, "L-inf budget");
  cmd_attack->add_option("--delta", entry.delta, "Finite-difference step");
  cmd_attack->add_option("--alpha", entry.alpha, "Iteration step size");
  cmd_attack->add_option("--iterations", entry.iterations, "Iterations t");
  cmd_attack->add_option("--reduction", entry.reduction, "none | rg | pca")
      ->check(CLI::IsMember({"none", "rg", "pca"}));
  cmd_attack->add_option("--k", entry.k, "Group size (rg) / component count (pca)");
  cmd_attack->add_option("--kappa", entry.kappa, "Logit-loss confidence margin");
  cmd_attack->add_option("--rand-init", entry.init_rand_magnitude,
                         "Initial random L-inf perturbation magnitude");
  cmd_attack->add_option("--spsa-steps", entry.spsa_steps, "SPSA step count");
  cmd_attack->add_option("--surrogates", entry.surrogates, "Surrogate model paths (transfer)");
  cmd_attack->add_option("--samples", exp.sample_count, "Number of attacked samples");
  cmd_attack->add_option("--selection", exp.selection, "first | random")
      ->check(CLI::IsMember({"first", "random"}));
  cmd_attack->add_option("--selection-seed", exp.selection_seed, "Subset selection seed");
  cmd_attack->add_option("--target-seed", exp.target_seed, "Target sampling seed");
  cmd_attack->add_option("--seed", exp.seed, "Attack seed");
  cmd_attack->add_option("--threads", exp.threads, "Worker count (0 = auto)");
  cmd_attack->add_option("--csv", exp.csv_path, "CSV report path");
  cmd_attack->add_option("--json", exp.json_path, "JSON report path");

  // --- eval -----------------------------------------------------------------
  std::string eval_config;
  auto* cmd_eval = app.add_subcommand("eval", "Run a full experiment config (JSON)");
  cmd_eval->add_option("--config", eval_config, "Experiment config path")->required();

  // --- serve ----------------------------------------------------------------
  std::string serve_model, serve_host = "127.0.0.1", serve_auth;
  int serve_port = 8080, fail_first = 0;
  bool named_scores = false, quiet = false;
  auto* cmd_serve = app.add_subcommand("serve", "Serve a model over gem-infer-v1 HTTP");
  cmd_serve->add_option("--model", serve_model, "Model path")->required();
  cmd_serve->add_option("--host", serve_host, "Bind address");
  cmd_serve->add_option("--port", serve_port, "Port (0 picks a free one)");
  cmd_serve->add_option("--auth", serve_auth, "Require this bearer token");
  cmd_serve->add_option("--fail-first", fail_first, "Answer the first N queries with 503");
  cmd_serve->add_flag("--named-scores", named_scores, "Reply with named scores");
  cmd_serve->add_flag("--quiet", quiet, "No per-query log lines");

  // --- pca-fit ----------------------------------------------------------------
  DatasetFlags pca_data;
  std::size_t pca_k = 100;
  std::string pca_out;
  auto* cmd_pca = app.add_subcommand("pca-fit", "Fit principal components of a dataset");
  pca_data.attach(cmd_pca);
  cmd_pca->add_option("--k", pca_k, "Component count");
  cmd_pca->add_option("--out", pca_out, "Output basis path (gem-pca-v1)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cmd_train->parsed()) {
      return run_train(train_data, arch, tc, holdout, model_out, nullptr, {});
    }
    if (cmd_adv->parsed()) {
      adv_kind.variant = adv_variant == "ensemble"  ? gem::AdvTrainKind::Variant::kEnsemble
                         : adv_variant == "iterative"
                             ? gem::AdvTrainKind::Variant::kIterativeIfgs
                             : gem::AdvTrainKind::Variant::kStandardFgs;
      return run_train(train_data, arch, tc, holdout, model_out, &adv_kind, adv_sources);
    }
    if (cmd_attack->parsed()) {
      if (model_path.empty() && remote_url.empty()) {
        std::cerr << "attack: --model (or --remote) is required\n";
        return 1;
      }
      entry.loss = loss_name == "xent" ? gem::LossKind::kXent : gem::LossKind::kLogit;
      entry.mode = mode_name == "targeted" ? gem::AttackMode::kTargeted
                                           : gem::AttackMode::kUntargeted;
      exp.dataset = attack_data.spec();
      exp.model.path = model_path;
      if (!remote_url.empty()) {
        exp.oracle.kind = "remote";
        exp.oracle.endpoint.base_url = remote_url;
        exp.oracle.endpoint.auth_token = remote_auth;
      }
      exp.attacks.push_back(entry);
      const gem::ExperimentReport report = gem::run_experiment(exp);
      for (const gem::AttackRow& row : report.rows) {
        if (!row.error.empty()) {
          std::cerr << row.name << ": error: " << row.error << "\n";
          return 2;
        }
        std::cout << row.name << ": success " << row.success_rate << "% (conditioned "
                  << row.conditioned_success_rate << "%), avg L2 " << row.avg_l2
                  << ", avg queries " << row.avg_queries << "\n";
      }
      if (!exp.csv_path.empty()) std::cout << "csv report: " << exp.csv_path << "\n";
      if (!exp.json_path.empty()) std::cout << "json report: " << exp.json_path << "\n";
      return 0;
    }
    if (cmd_eval->parsed()) {
      const gem::ExperimentConfig cfg = gem::load_experiment_config(eval_config);
      const gem::ExperimentReport report = gem::run_experiment(cfg);
      for (const gem::AttackRow& row : report.rows) {
        if (!row.error.empty()) {
          std::cout << row.name << ": error: " << row.error << "\n";
        } else {
          std::cout << row.name << ": success " << row.success_rate << "% (conditioned "
                    << row.conditioned_success_rate << "%), avg L2 " << row.avg_l2
                    << ", avg queries " << row.avg_queries << "\n";
        }
      }
      return 0;
    }
    if (cmd_serve->parsed()) {
      const gem::MlpModel model = gem::load_model(serve_model);
      gem::MockServerOptions opts;
      opts.host = serve_host;
      opts.port = serve_port;
      opts.auth_token = serve_auth;
      opts.fail_first_n = fail_first;
      opts.named_scores = named_scores;
      opts.log_queries = !quiet;
      auto server = gem::serve_mock(model, opts);
      std::cout << "serving gem-infer-v1 on " << server->base_url() << " (ctrl-c to stop)\n";
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server->stop();
      std::cout << "served " << server->ledger()->total() << " queries\n";
      return 0;
    }
    if (cmd_pca->parsed()) {
      const gem::Dataset data = pca_data.build();
      gem::Mat cols(data.input_dim, data.size());
      for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t r = 0; r < data.input_dim; ++r) cols(r, i) = data.samples[i].x[r];
      const gem::PcaBasis basis = gem::pca_fit(cols, pca_k);
      gem::save_pca_basis(basis, pca_out);
      std::cout << "wrote " << basis.count() << " components of dimension " << basis.dim()
                << " to " << pca_out << "\n";
      return 0;
    }
  } catch (const gem::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gem::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
