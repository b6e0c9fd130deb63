#include "gem/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "json.hpp"

namespace gem {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw FormatError("experiment config: unknown key '" + key + "' in " + context);
    }
  }
}

LossKind parse_loss(const std::string& s) {
  if (s == "xent") return LossKind::kXent;
  if (s == "logit") return LossKind::kLogit;
  throw FormatError("experiment config: unknown loss '" + s + "'");
}

AttackMode parse_mode(const std::string& s) {
  if (s == "untargeted") return AttackMode::kUntargeted;
  if (s == "targeted") return AttackMode::kTargeted;
  throw FormatError("experiment config: unknown mode '" + s + "'");
}

}  // namespace

std::uint64_t env_seed(std::uint64_t fallback) {
  const char* v = std::getenv("GEM_SEED");
  if (!v || !*v) return fallback;
  std::uint64_t out = 0;
  const auto res = std::from_chars(v, v + std::string_view(v).size(), out);
  if (res.ec != std::errc{}) throw ArgumentError("GEM_SEED is not an integer");
  return out;
}

std::size_t env_threads(std::size_t fallback) {
  const char* v = std::getenv("GEM_THREADS");
  if (!v || !*v) return fallback;
  std::size_t out = 0;
  const auto res = std::from_chars(v, v + std::string_view(v).size(), out);
  if (res.ec != std::errc{}) throw ArgumentError("GEM_THREADS is not an integer");
  return out;
}

std::string catalog_name(const AttackEntry& entry) {
  if (!entry.name.empty()) return entry.name;
  const std::string loss = entry.loss == LossKind::kXent ? "xent" : "logit";
  std::string base;
  if (entry.method == "rand") {
    base = "Rand.";
  } else if (entry.method == "dom") {
    base = "D. of M.";
  } else if (entry.method == "spsa") {
    base = "SPSA";
  } else if (entry.method == "fgs") {
    base = "WB FGS-" + loss;
  } else if (entry.method == "ifgs") {
    base = "WB IFGS-" + loss;
  } else if (entry.method == "transfer") {
    base = entry.iterations > 1 ? "Transfer IFGS-" + loss : "Transfer FGS-" + loss;
  } else if (entry.method == "fd" || entry.method == "ifd") {
    const bool iter = entry.method == "ifd";
    if (entry.reduction == "rg") {
      base = (iter ? "IGE-QR (RG-" : "GE-QR (RG-") + std::to_string(entry.k) + ", " + loss + ")";
    } else if (entry.reduction == "pca") {
      base =
          (iter ? "IGE-QR (PCA-" : "GE-QR (PCA-") + std::to_string(entry.k) + ", " + loss + ")";
    } else {
      base = (iter ? "IFD-" : "FD-") + loss;
    }
  } else {
    base = entry.method;
  }
  if (entry.mode == AttackMode::kTargeted) base += "-T";
  if (entry.init_rand_magnitude > 0.0) {
    base += " (rand-init " + fmt_double(entry.init_rand_magnitude) + ")";
  }
  return base;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }

  try {
    check_keys(j,
               {"dataset", "model", "oracle", "selection", "sample_count", "selection_seed",
                "target_seed", "seed", "threads", "attacks", "csv_path", "json_path"},
               "top level");
    ExperimentConfig cfg;
    cfg.seed = env_seed(42);
    cfg.threads = env_threads(0);

    if (j.contains("dataset")) {
      const auto& jd = j.at("dataset");
      check_keys(jd, {"kind", "images_path", "labels_path", "seed", "count", "dim", "classes",
                      "spread"},
                 "dataset");
      DatasetSpec& d = cfg.dataset;
      if (jd.contains("kind")) d.kind = jd.at("kind").get<std::string>();
      if (jd.contains("images_path")) d.images_path = jd.at("images_path").get<std::string>();
      if (jd.contains("labels_path")) d.labels_path = jd.at("labels_path").get<std::string>();
      if (jd.contains("seed")) d.seed = jd.at("seed").get<std::uint64_t>();
      if (jd.contains("count")) d.count = jd.at("count").get<std::size_t>();
      if (jd.contains("dim")) d.dim = jd.at("dim").get<std::size_t>();
      if (jd.contains("classes")) d.classes = jd.at("classes").get<int>();
      if (jd.contains("spread")) d.spread = jd.at("spread").get<double>();
    }
    if (j.contains("model")) {
      const auto& jm = j.at("model");
      check_keys(jm, {"path", "arch", "epochs", "batch_size", "learning_rate", "seed",
                      "dropout_rate", "train_count"},
                 "model");
      ModelSpec& m = cfg.model;
      if (jm.contains("path")) m.path = jm.at("path").get<std::string>();
      if (jm.contains("arch")) m.arch = jm.at("arch").get<std::string>();
      if (jm.contains("epochs")) m.train.epochs = jm.at("epochs").get<std::size_t>();
      if (jm.contains("batch_size")) m.train.batch_size = jm.at("batch_size").get<std::size_t>();
      if (jm.contains("learning_rate")) {
        m.train.learning_rate = jm.at("learning_rate").get<double>();
      }
      if (jm.contains("seed")) m.train.seed = jm.at("seed").get<std::uint64_t>();
      if (jm.contains("dropout_rate")) m.train.dropout_rate = jm.at("dropout_rate").get<double>();
      if (jm.contains("train_count")) m.train_count = jm.at("train_count").get<std::size_t>();
    }
    if (j.contains("oracle")) {
      const auto& jo = j.at("oracle");
      check_keys(jo, {"kind", "base_url", "timeout_ms", "retry_limit", "auth_token",
                      "category_order"},
                 "oracle");
      OracleSpec& o = cfg.oracle;
      if (jo.contains("kind")) o.kind = jo.at("kind").get<std::string>();
      if (jo.contains("base_url")) o.endpoint.base_url = jo.at("base_url").get<std::string>();
      if (jo.contains("timeout_ms")) o.endpoint.timeout_ms = jo.at("timeout_ms").get<int>();
      if (jo.contains("retry_limit")) o.endpoint.retry_limit = jo.at("retry_limit").get<int>();
      if (jo.contains("auth_token")) o.endpoint.auth_token = jo.at("auth_token").get<std::string>();
      if (jo.contains("category_order")) {
        o.endpoint.category_order = jo.at("category_order").get<std::vector<std::string>>();
      }
      if (o.kind != "local" && o.kind != "remote") {
        throw FormatError("experiment config: oracle kind must be 'local' or 'remote'");
      }
    }
    if (j.contains("selection")) {
      cfg.selection = j.at("selection").get<std::string>();
      if (cfg.selection != "first" && cfg.selection != "random") {
        throw FormatError("experiment config: selection must be 'first' or 'random'");
      }
    }
    if (j.contains("sample_count")) cfg.sample_count = j.at("sample_count").get<std::size_t>();
    if (j.contains("selection_seed")) {
      cfg.selection_seed = j.at("selection_seed").get<std::uint64_t>();
    }
    if (j.contains("target_seed")) cfg.target_seed = j.at("target_seed").get<std::uint64_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<std::size_t>();
    if (j.contains("csv_path")) cfg.csv_path = j.at("csv_path").get<std::string>();
    if (j.contains("json_path")) cfg.json_path = j.at("json_path").get<std::string>();

    if (!j.contains("attacks") || !j.at("attacks").is_array()) {
      throw FormatError("experiment config: missing 'attacks' array");
    }
    for (const auto& ja : j.at("attacks")) {
      check_keys(ja,
                 {"name", "method", "loss", "mode", "kappa", "epsilon", "delta", "alpha",
                  "iterations", "reduction", "k", "exact_residual_divisor",
                  "init_rand_magnitude", "spsa_steps", "surrogates"},
                 "attack entry");
      AttackEntry e;
      if (ja.contains("name")) e.name = ja.at("name").get<std::string>();
      if (ja.contains("method")) e.method = ja.at("method").get<std::string>();
      if (ja.contains("loss")) e.loss = parse_loss(ja.at("loss").get<std::string>());
      if (ja.contains("mode")) e.mode = parse_mode(ja.at("mode").get<std::string>());
      if (ja.contains("kappa")) e.kappa = ja.at("kappa").get<double>();
      if (ja.contains("epsilon")) e.epsilon = ja.at("epsilon").get<double>();
      if (ja.contains("delta")) e.delta = ja.at("delta").get<double>();
      if (ja.contains("alpha")) e.alpha = ja.at("alpha").get<double>();
      if (ja.contains("iterations")) e.iterations = ja.at("iterations").get<std::size_t>();
      if (ja.contains("reduction")) e.reduction = ja.at("reduction").get<std::string>();
      if (ja.contains("k")) e.k = ja.at("k").get<std::size_t>();
      if (ja.contains("exact_residual_divisor")) {
        e.exact_residual_divisor = ja.at("exact_residual_divisor").get<bool>();
      }
      if (ja.contains("init_rand_magnitude")) {
        e.init_rand_magnitude = ja.at("init_rand_magnitude").get<double>();
      }
      if (ja.contains("spsa_steps")) e.spsa_steps = ja.at("spsa_steps").get<std::size_t>();
      if (ja.contains("surrogates")) {
        e.surrogates = ja.at("surrogates").get<std::vector<std::string>>();
      }
      if (e.reduction != "none" && e.reduction != "rg" && e.reduction != "pca") {
        throw FormatError("experiment config: unknown reduction '" + e.reduction + "'");
      }
      cfg.attacks.push_back(std::move(e));
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

namespace {

Dataset build_dataset(const DatasetSpec& spec) {
  if (spec.kind == "mnist") return load_mnist_idx(spec.images_path, spec.labels_path);
  if (spec.kind == "synth-digits") return synth_digits(spec.seed, spec.count);
  if (spec.kind == "blobs") {
    return synth_blobs(spec.seed, spec.count, spec.dim, spec.classes, spec.spread);
  }
  throw ArgumentError("experiment: unknown dataset kind '" + spec.kind + "'");
}

struct RowResources {
  const std::vector<Sample>* subset;
  const std::vector<int>* targets;
  const std::vector<int>* original_preds;
  const std::vector<Vec>* means;
  const MlpModel* model;  // may be null for remote oracles
  Oracle* oracle;
  const PcaBasis* basis;  // set for pca rows
  std::uint64_t row_seed;
};

SampleRecord attack_one(const AttackEntry& entry, const RowResources& rc, std::size_t i) {
  const Sample& s = (*rc.subset)[i];
  const bool targeted = entry.mode == AttackMode::kTargeted;

  SampleRecord rec;
  rec.index = i;
  rec.true_label = s.label;
  rec.original_pred = (*rc.original_preds)[i];
  rec.target = targeted ? (*rc.targets)[i] : -1;

  AttackConfig cfg;
  cfg.budget.epsilon = entry.epsilon;
  if (rc.model) {
    cfg.budget.lo = rc.model->lo;
    cfg.budget.hi = rc.model->hi;
  }
  cfg.loss.kind = entry.loss;
  cfg.loss.mode = entry.mode;
  cfg.loss.class_index = targeted ? rec.target : s.label;
  cfg.loss.kappa = entry.kappa;
  cfg.delta = entry.delta;
  cfg.alpha = entry.alpha;
  cfg.iterations = entry.iterations;
  cfg.init_rand_magnitude = entry.init_rand_magnitude;
  cfg.seed = rc.row_seed ^ static_cast<std::uint64_t>(i);
  if (entry.reduction == "rg") {
    cfg.reduction = {ReductionKind::kRandomGroup, entry.k, nullptr,
                     entry.exact_residual_divisor};
  } else if (entry.reduction == "pca") {
    cfg.reduction = {ReductionKind::kPca, entry.k, rc.basis, false};
  }

  auto verify_only = [&](Vec x_adv) {
    CountingOracle counted(*rc.oracle);
    AttackResult res;
    res.x_adv = std::move(x_adv);
    const ProbVector p = counted.query_probs(res.x_adv);
    res.predicted = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    res.success = targeted ? res.predicted == rec.target : res.predicted != s.label;
    res.queries = counted.ledger()->total();
    res.l2_distortion = l2_dist(res.x_adv, s.x);
    res.linf_distortion = linf_dist(res.x_adv, s.x);
    return res;
  };

  if (entry.method == "rand") {
    Rng rng(cfg.seed);
    rec.result = verify_only(random_perturbation(s.x, cfg.budget, rng));
  } else if (entry.method == "dom") {
    const std::optional<int> target = targeted ? std::optional<int>(rec.target) : std::nullopt;
    rec.result = verify_only(diff_of_means(s.x, s.label, *rc.means, cfg.budget, target));
  } else if (entry.method == "fd") {
    if (cfg.init_rand_magnitude > 0.0) {
      rec.result = rand_init_then(
          [&](const Vec& x0, const AttackConfig& c) { return fd_attack(*rc.oracle, x0, c); },
          s.x, cfg);
    } else {
      rec.result = fd_attack(*rc.oracle, s.x, cfg);
    }
  } else if (entry.method == "ifd") {
    rec.result = ifd_attack(*rc.oracle, s.x, cfg);
  } else if (entry.method == "spsa") {
    rec.result = spsa_attack(*rc.oracle, s.x, cfg, entry.spsa_steps);
  } else if (entry.method == "fgs" || entry.method == "ifgs") {
    if (!rc.model) throw ArgumentError("white-box attack needs a local model");
    if (entry.method == "ifgs") {
      rec.result = ifgs_whitebox(*rc.model, s.x, cfg);
    } else if (cfg.init_rand_magnitude > 0.0) {
      rec.result = rand_init_then(
          [&](const Vec& x0, const AttackConfig& c) { return fgs_whitebox(*rc.model, x0, c); },
          s.x, cfg);
    } else {
      rec.result = fgs_whitebox(*rc.model, s.x, cfg);
    }
  } else {
    throw ArgumentError("experiment: unknown attack method '" + entry.method + "'");
  }
  return rec;
}

void write_csv(const ExperimentConfig& config, const ExperimentReport& report) {
  if (config.csv_path.empty()) return;
  std::ofstream out(config.csv_path);
  if (!out) throw FormatError(config.csv_path + ": cannot open for writing");
  out << "attack,loss,mode,epsilon,delta,alpha,iterations,reduction,k,success_rate,"
         "conditioned_success_rate,avg_l2,avg_queries,sec_per_sample\n";
  for (const AttackRow& row : report.rows) {
    const AttackEntry& e = row.entry;
    out << '"' << row.name << "\"," << (e.loss == LossKind::kXent ? "xent" : "logit") << ','
        << (e.mode == AttackMode::kTargeted ? "targeted" : "untargeted") << ','
        << fmt_double(e.epsilon) << ',' << fmt_double(e.delta) << ',' << fmt_double(e.alpha)
        << ',' << e.iterations << ',' << e.reduction << ','
        << (e.reduction == "none" ? 0 : e.k) << ',';
    if (row.error.empty()) {
      out << fmt_fixed(row.success_rate, 1) << ',' << fmt_fixed(row.conditioned_success_rate, 1)
          << ',' << fmt_fixed(row.avg_l2, 1) << ',' << fmt_fixed(row.avg_queries, 1) << ','
          << fmt_fixed(row.sec_per_sample, 4) << '\n';
    } else {
      out << ",,,,\n";
    }
  }
}

void write_json(const ExperimentConfig& config, const ExperimentReport& report) {
  if (config.json_path.empty()) return;
  nlohmann::ordered_json j;
  j["dataset"] = {{"kind", config.dataset.kind},
                  {"sample_count", report.sample_count},
                  {"selection", config.selection},
                  {"selection_seed", config.selection_seed},
                  {"target_seed", config.target_seed}};
  j["seed"] = config.seed;
  if (report.model_accuracy >= 0.0) j["model_accuracy_on_subset"] = report.model_accuracy;
  j["rows"] = nlohmann::ordered_json::array();
  for (const AttackRow& row : report.rows) {
    const AttackEntry& e = row.entry;
    nlohmann::ordered_json jr;
    jr["attack"] = row.name;
    jr["method"] = e.method;
    jr["loss"] = e.loss == LossKind::kXent ? "xent" : "logit";
    jr["mode"] = e.mode == AttackMode::kTargeted ? "targeted" : "untargeted";
    jr["epsilon"] = e.epsilon;
    jr["delta"] = e.delta;
    jr["alpha"] = e.alpha;
    jr["iterations"] = e.iterations;
    jr["reduction"] = e.reduction;
    jr["k"] = e.reduction == "none" ? 0 : e.k;
    jr["init_rand_magnitude"] = e.init_rand_magnitude;
    if (e.method == "spsa") jr["spsa_steps"] = e.spsa_steps;
    if (!row.error.empty()) {
      jr["error"] = row.error;
    } else {
      jr["success_rate"] = row.success_rate;
      jr["conditioned_success_rate"] = row.conditioned_success_rate;
      jr["avg_l2"] = row.avg_l2;
      jr["avg_queries"] = row.avg_queries;
      jr["samples"] = nlohmann::ordered_json::array();
      for (const SampleRecord& rec : row.records) {
        jr["samples"].push_back({{"index", rec.index},
                                 {"label", rec.true_label},
                                 {"original_pred", rec.original_pred},
                                 {"target", rec.target},
                                 {"success", rec.result.success},
                                 {"predicted", rec.result.predicted},
                                 {"queries", rec.result.queries},
                                 {"l2", rec.result.l2_distortion},
                                 {"linf", rec.result.linf_distortion}});
      }
    }
    j["rows"].push_back(std::move(jr));
  }
  std::ofstream out(config.json_path);
  if (!out) throw FormatError(config.json_path + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const Dataset data = build_dataset(config.dataset);
  if (config.sample_count > data.size()) {
    throw ArgumentError("experiment: sample_count exceeds dataset size");
  }

  // Model: load from disk, or train on the dataset (minus nothing; callers
  // who want a held-out attack set pass a separate train_count).
  MlpModel model_storage;
  const MlpModel* model = nullptr;
  if (!config.model.path.empty()) {
    model_storage = load_model(config.model.path);
    model = &model_storage;
  } else if (config.oracle.kind == "local") {
    Dataset train_set = data;
    if (config.model.train_count > 0 && config.model.train_count < data.size()) {
      train_set = data.slice(0, config.model.train_count);
    }
    model_storage =
        train(train_set, arch_from_name(config.model.arch), config.model.train, nullptr);
    model = &model_storage;
  }

  std::unique_ptr<Oracle> oracle;
  if (config.oracle.kind == "local") {
    if (!model) throw ArgumentError("experiment: local oracle needs a model");
    oracle = std::make_unique<LocalOracle>(*model);
  } else {
    oracle = std::make_unique<RemoteOracle>(config.oracle.endpoint);
  }

  // Attacked subset.
  std::vector<std::size_t> indices(data.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (config.selection == "random") {
    Rng rng(config.selection_seed);
    rng.shuffle(indices);
  }
  std::vector<Sample> subset(config.sample_count);
  for (std::size_t i = 0; i < config.sample_count; ++i) subset[i] = data.samples[indices[i]];

  Rng target_rng(config.target_seed);
  const std::vector<int> targets = sample_targets(subset, data.num_classes, target_rng);

  // Benign predictions (outside any attack's ledger).
  std::vector<int> original_preds(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const ProbVector p = oracle->query_probs(subset[i].x);
    original_preds[i] =
        static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  const std::vector<Vec> means = class_means(data);

  ExperimentReport report;
  report.sample_count = subset.size();
  if (model) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (original_preds[i] == subset[i].label) ++hit;
    }
    report.model_accuracy = static_cast<double>(hit) / static_cast<double>(subset.size());
  }

  const std::size_t threads =
      config.threads > 0 ? config.threads
                         : std::max<std::size_t>(1, std::thread::hardware_concurrency());

  for (std::size_t row_idx = 0; row_idx < config.attacks.size(); ++row_idx) {
    const AttackEntry& entry = config.attacks[row_idx];
    AttackRow row;
    row.entry = entry;
    row.name = catalog_name(entry);

    PcaBasis basis;
    RowResources rc{&subset, &targets, &original_preds, &means, model,
                    oracle.get(),      nullptr,          0};
    rc.row_seed = splitmix64(config.seed ^ (0x9e3779b97f4a7c15ULL * (row_idx + 1)));

    const auto started = std::chrono::steady_clock::now();
    try {
      if (entry.reduction == "pca") {
        // Basis fit on the attack set itself (the samples the adversary
        // holds), not on any training data.
        Mat cols(data.input_dim, subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i)
          for (std::size_t r = 0; r < data.input_dim; ++r) cols(r, i) = subset[i].x[r];
        basis = pca_fit(cols, entry.k);
        rc.basis = &basis;
      }

      row.records.resize(subset.size());
      std::atomic<std::size_t> next{0};
      std::atomic<bool> failed{false};
      std::mutex err_mu;
      std::string first_error;

      auto worker = [&]() {
        for (;;) {
          if (failed.load(std::memory_order_relaxed)) return;
          const std::size_t i = next.fetch_add(1);
          if (i >= subset.size()) return;
          try {
            row.records[i] = attack_one(entry, rc, i);
          } catch (const std::exception& e) {
            std::lock_guard lock(err_mu);
            if (first_error.empty()) first_error = e.what();
            failed.store(true);
            return;
          }
        }
      };

      if (threads <= 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
      }
      if (failed.load()) throw std::runtime_error(first_error);

      row.success_rate = success_rate(row.records);
      row.conditioned_success_rate = conditioned_success_rate(row.records);
      double l2 = 0.0, q = 0.0;
      for (const SampleRecord& rec : row.records) {
        l2 += rec.result.l2_distortion;
        q += static_cast<double>(rec.result.queries);
      }
      row.avg_l2 = l2 / static_cast<double>(row.records.size());
      row.avg_queries = q / static_cast<double>(row.records.size());
    } catch (const std::exception& e) {
      row.error = e.what();
      row.records.clear();
    }
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
    row.sec_per_sample = subset.empty() ? 0.0 : elapsed.count() / double(subset.size());

    report.rows.push_back(std::move(row));
  }

  write_csv(config, report);
  write_json(config, report);
  return report;
}

void save_pca_basis(const PcaBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << "{\n  \"format_version\": \"gem-pca-v1\",\n";
  out << "  \"dim\": " << basis.dim() << ",\n";
  out << "  \"k\": " << basis.count() << ",\n";
  out << "  \"eigenvalues\": [";
  for (std::size_t c = 0; c < basis.count(); ++c) {
    if (c > 0) out << ", ";
    out << fmt_double(basis.eigenvalues[c]);
  }
  out << "],\n  \"components\": [";
  for (std::size_t r = 0; r < basis.dim(); ++r) {
    for (std::size_t c = 0; c < basis.count(); ++c) {
      if (r + c > 0) out << ", ";
      out << fmt_double(basis.components(r, c));
    }
  }
  out << "]\n}\n";
  if (!out) throw FormatError(path + ": write failed");
}

PcaBasis load_pca_basis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format_version").get<std::string>() != "gem-pca-v1") {
      throw FormatError(path + ": unsupported format_version");
    }
    const std::size_t dim = j.at("dim").get<std::size_t>();
    const std::size_t k = j.at("k").get<std::size_t>();
    PcaBasis basis;
    basis.components = Mat(dim, k);
    basis.eigenvalues.resize(k);
    const auto& jev = j.at("eigenvalues");
    const auto& jcomp = j.at("components");
    if (jev.size() != k || jcomp.size() != dim * k) {
      throw FormatError(path + ": array size mismatch");
    }
    for (std::size_t c = 0; c < k; ++c) basis.eigenvalues[c] = jev.at(c).get<double>();
    std::size_t idx = 0;
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < k; ++c) basis.components(r, c) = jcomp.at(idx++).get<double>();
    return basis;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace gem
