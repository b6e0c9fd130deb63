#include "gem/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace gem {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// z = W a + b using the transposed (in x out) layout: every logical column
// of W is contiguous, so the accumulation vectorizes as independent lanes.
void dense_forward(const DenseLayer& layer, const Vec& a, Vec& z) {
  z.assign(layer.biases.begin(), layer.biases.end());
  const std::size_t out = layer.out;
  const double* wt = layer.weights_t.data();
  for (std::size_t i = 0; i < layer.in; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    const double* col = wt + i * out;
    double* zp = z.data();
    for (std::size_t o = 0; o < out; ++o) zp[o] += ai * col[o];
  }
}

// da = W^T g; rows of the transposed layout are contiguous.
void dense_backward_input(const DenseLayer& layer, const Vec& g, Vec& da) {
  const std::size_t out = layer.out;
  da.resize(layer.in);
  const double* wt = layer.weights_t.data();
  for (std::size_t i = 0; i < layer.in; ++i) {
    const double* row = wt + i * out;
    double s = 0.0;
    for (std::size_t o = 0; o < out; ++o) s += row[o] * g[o];
    da[i] = s;
  }
}

void softmax_from_logits(const Vec& logits, Vec& probs) {
  probs.resize(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - m);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
}

}  // namespace

ForwardResult MlpModel::forward(const Vec& x) const {
  if (x.size() != input_dim) throw ArgumentError("forward: input length mismatch");
  ForwardResult r;
  Vec a = x;
  Vec z;
  for (const DenseLayer& layer : layers) {
    dense_forward(layer, a, z);
    if (layer.activation == Activation::kRelu) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    std::swap(a, z);
  }
  r.logits = std::move(a);
  softmax_from_logits(r.logits, r.probs);
  return r;
}

int MlpModel::classify(const Vec& x) const {
  const ForwardResult r = forward(x);
  return static_cast<int>(std::max_element(r.logits.begin(), r.logits.end()) -
                          r.logits.begin());
}

namespace {

// Shared backprop: forward storing activations, then backward from a seed
// gradient on the logits. ReLU subgradient at 0 is 0.
Vec backprop_from_logit_seed(const MlpModel& model, const Vec& x,
                             const std::function<Vec(const Vec& logits)>& seed_fn) {
  std::vector<Vec> acts;  // acts[l] is the input of layer l
  acts.reserve(model.layers.size() + 1);
  acts.push_back(x);
  Vec z;
  for (const DenseLayer& layer : model.layers) {
    dense_forward(layer, acts.back(), z);
    if (layer.activation == Activation::kRelu) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    acts.push_back(z);
  }

  Vec g = seed_fn(acts.back());
  Vec da;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    dense_backward_input(model.layers[l], g, da);
    if (l > 0) {
      // acts[l] is the post-ReLU output of layer l-1; zero output means the
      // unit was inactive (or exactly at the kink, where we take 0).
      for (std::size_t i = 0; i < da.size(); ++i) {
        if (acts[l][i] <= 0.0) da[i] = 0.0;
      }
    }
    std::swap(g, da);
  }
  return g;
}

}  // namespace

Vec MlpModel::grad_xent(const Vec& x, int cls) const {
  if (cls < 0 || cls >= num_classes) throw ArgumentError("grad_xent: class index out of range");
  return backprop_from_logit_seed(*this, x, [&](const Vec& logits) {
    Vec seed;
    softmax_from_logits(logits, seed);
    seed[cls] -= 1.0;
    return seed;
  });
}

Vec MlpModel::grad_logit_diff(const Vec& x, int a, int b) const {
  if (a < 0 || a >= num_classes || b < 0 || b >= num_classes) {
    throw ArgumentError("grad_logit_diff: class index out of range");
  }
  return backprop_from_logit_seed(*this, x, [&](const Vec&) {
    Vec seed(num_classes, 0.0);
    seed[a] += 1.0;
    seed[b] -= 1.0;
    return seed;
  });
}

void MlpModel::validate() const {
  if (layers.empty()) throw ArgumentError("model: no layers");
  std::size_t prev = input_dim;
  for (const DenseLayer& layer : layers) {
    if (layer.in != prev) throw ArgumentError("model: layer dimensions do not chain");
    if (layer.weights_t.size() != layer.in * layer.out || layer.biases.size() != layer.out) {
      throw ArgumentError("model: layer storage size mismatch");
    }
    for (double w : layer.weights_t)
      if (!std::isfinite(w)) throw ArgumentError("model: non-finite weight");
    for (double b : layer.biases)
      if (!std::isfinite(b)) throw ArgumentError("model: non-finite bias");
    prev = layer.out;
  }
  const DenseLayer& head = layers.back();
  if (head.activation != Activation::kIdentity ||
      head.out != static_cast<std::size_t>(num_classes)) {
    throw ArgumentError("model: final layer must be an identity head of num_classes outputs");
  }
  if (lo >= hi) throw ArgumentError("model: empty data range");
}

ArchSpec arch_from_name(const std::string& name) {
  if (name == "mlp-128") return {{128}};
  if (name == "mlp-d") return {{300, 300, 300, 300}};
  ArchSpec spec;
  std::stringstream ss(name);
  std::string tok;
  while (std::getline(ss, tok, '-')) {
    std::size_t width = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), width);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || width == 0) {
      throw ArgumentError("unknown architecture: " + name);
    }
    spec.hidden.push_back(width);
  }
  if (spec.hidden.empty()) throw ArgumentError("unknown architecture: " + name);
  return spec;
}

MlpModel init_mlp(const ArchSpec& arch, std::size_t input_dim, int num_classes,
                  std::pair<double, double> data_range, Rng& rng) {
  MlpModel model;
  model.input_dim = input_dim;
  model.num_classes = num_classes;
  model.lo = data_range.first;
  model.hi = data_range.second;

  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(static_cast<std::size_t>(num_classes));

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.activation = l + 2 == dims.size() ? Activation::kIdentity : Activation::kRelu;
    layer.weights_t.resize(layer.in * layer.out);
    layer.biases.assign(layer.out, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (std::size_t o = 0; o < layer.out; ++o)
      for (std::size_t i = 0; i < layer.in; ++i)
        layer.weight(o, i) = rng.uniform(-limit, limit);
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

Vec grad_input(const MlpModel& model, const Vec& x, const LossSpec& spec) {
  if (spec.class_index < 0 || spec.class_index >= model.num_classes) {
    throw ArgumentError("grad_input: class index out of range");
  }
  if (spec.kind == LossKind::kXent) return model.grad_xent(x, spec.class_index);

  const ForwardResult r = model.forward(x);
  if (spec.mode == AttackMode::kUntargeted) {
    const int y = spec.class_index;
    const int yp = runner_up(r.logits, y);
    const double margin = r.logits[y] - r.logits[yp];
    if (margin <= -spec.kappa) return Vec(x.size(), 0.0);  // clamped branch
    return model.grad_logit_diff(x, y, yp);
  }
  const int target = spec.class_index;
  const int top_other = runner_up(r.logits, target);
  return model.grad_logit_diff(x, top_other, target);
}

namespace {

// Training-time adversarial generators (cross-entropy FGS / IFGS against a
// fixed model state, clipped to the data range and the eps-box).
Vec fgs_xent_sample(const MlpModel& model, const Vec& x, int y, double eps) {
  const Vec g = model.grad_xent(x, y);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(x[i] + eps * sign(g[i]), model.lo, model.hi);
  }
  return out;
}

Vec ifgs_xent_sample(const MlpModel& model, const Vec& x, int y, double eps, std::size_t t,
                     double alpha) {
  Vec cur = x;
  for (std::size_t it = 0; it < t; ++it) {
    const Vec g = model.grad_xent(cur, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double lo_i = std::max(model.lo, x[i] - eps);
      const double hi_i = std::min(model.hi, x[i] + eps);
      cur[i] = std::clamp(cur[i] + alpha * sign(g[i]), lo_i, hi_i);
    }
  }
  return cur;
}

struct Scratch {
  std::vector<Vec> acts;   // acts[l] = input of layer l, acts[L] = logits
  std::vector<Vec> masks;  // dropout masks for hidden activations
  Vec probs;
};

void forward_train(const MlpModel& model, const Vec& x, double dropout, Rng& rng, Scratch& s) {
  s.acts.assign(1, x);
  s.masks.clear();
  Vec z;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const DenseLayer& layer = model.layers[l];
    dense_forward(layer, s.acts.back(), z);
    if (layer.activation == Activation::kRelu) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
    if (dropout > 0.0 && l + 1 < model.layers.size()) {
      Vec mask(z.size());
      const double keep_scale = 1.0 / (1.0 - dropout);
      for (std::size_t i = 0; i < z.size(); ++i) {
        mask[i] = rng.uniform() < dropout ? 0.0 : keep_scale;
        z[i] *= mask[i];
      }
      s.masks.push_back(std::move(mask));
    }
    s.acts.push_back(z);
  }
  softmax_from_logits(s.acts.back(), s.probs);
}

struct GradAccum {
  std::vector<std::vector<double>> wt;  // same layout as DenseLayer::weights_t
  std::vector<Vec> b;

  explicit GradAccum(const MlpModel& model) {
    for (const DenseLayer& layer : model.layers) {
      wt.emplace_back(layer.weights_t.size(), 0.0);
      b.emplace_back(layer.out, 0.0);
    }
  }
  void reset() {
    for (auto& w : wt) std::fill(w.begin(), w.end(), 0.0);
    for (auto& bb : b) std::fill(bb.begin(), bb.end(), 0.0);
  }
};

void backward_accumulate(const MlpModel& model, const Scratch& s, int label, double weight,
                         GradAccum& acc) {
  Vec g = s.probs;
  g[label] -= 1.0;
  for (double& v : g) v *= weight;

  Vec da;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const DenseLayer& layer = model.layers[l];
    const Vec& a_in = s.acts[l];
    double* dwt = acc.wt[l].data();
    for (std::size_t i = 0; i < layer.in; ++i) {
      const double ai = a_in[i];
      if (ai == 0.0) continue;
      double* row = dwt + i * layer.out;
      for (std::size_t o = 0; o < layer.out; ++o) row[o] += ai * g[o];
    }
    for (std::size_t o = 0; o < layer.out; ++o) acc.b[l][o] += g[o];

    if (l > 0) {
      dense_backward_input(layer, g, da);
      const Vec& h = s.acts[l];  // post-ReLU (and post-dropout) activation
      for (std::size_t i = 0; i < da.size(); ++i) {
        if (h[i] <= 0.0) da[i] = 0.0;
      }
      if (!s.masks.empty()) {
        const Vec& mask = s.masks[l - 1];
        for (std::size_t i = 0; i < da.size(); ++i) da[i] *= mask[i];
      }
      std::swap(g, da);
    }
  }
}

void apply_update(MlpModel& model, const GradAccum& acc, double lr) {
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    DenseLayer& layer = model.layers[l];
    const double* dwt = acc.wt[l].data();
    double* wt = layer.weights_t.data();
    for (std::size_t i = 0; i < layer.weights_t.size(); ++i) wt[i] -= lr * dwt[i];
    for (std::size_t o = 0; o < layer.out; ++o) layer.biases[o] -= lr * acc.b[l][o];
  }
}

MlpModel sgd_engine(const Dataset& data, const ArchSpec& arch, const TrainConfig& cfg,
                    const AdvTrainKind* adv, const Dataset* eval_set, TrainStats* stats) {
  if (data.samples.empty()) throw ArgumentError("train: empty dataset");
  if (cfg.batch_size < 1) throw ArgumentError("train: batch_size must be >= 1");
  if (cfg.learning_rate <= 0.0) throw ArgumentError("train: learning_rate must be positive");
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw ArgumentError("train: dropout_rate must be in [0, 1)");
  }
  for (const Sample& s : data.samples) {
    if (s.label < 0 || s.label >= data.num_classes) {
      throw ArgumentError("train: label out of range");
    }
  }
  if (adv && adv->variant == AdvTrainKind::Variant::kEnsemble && adv->sources.empty()) {
    throw ArgumentError("adversarial_train: ensemble variant needs at least one source model");
  }

  Rng rng(cfg.seed);
  MlpModel model = init_mlp(arch, data.input_dim, data.num_classes, {data.lo, data.hi}, rng);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  Scratch scratch;
  GradAccum acc(model);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
      acc.reset();

      if (!adv) {
        const double w = 1.0 / static_cast<double>(bsz);
        for (std::size_t j = 0; j < bsz; ++j) {
          const Sample& s = data.samples[order[start + j]];
          forward_train(model, s.x, cfg.dropout_rate, rng, scratch);
          backward_accumulate(model, scratch, s.label, w, acc);
        }
      } else {
        // Half benign, half adversarial; loss = mix * benign + (1-mix) * adv.
        const std::size_t benign_n = bsz / 2;
        const std::size_t adv_n = bsz - benign_n;

        const MlpModel* source = &model;
        if (adv->variant == AdvTrainKind::Variant::kEnsemble) {
          source = adv->sources[rng.uniform_index(adv->sources.size())];
        }
        std::vector<Vec> adv_x(adv_n);
        std::vector<int> adv_y(adv_n);
        for (std::size_t j = 0; j < adv_n; ++j) {
          const Sample& s = data.samples[order[start + benign_n + j]];
          adv_y[j] = s.label;
          if (adv->variant == AdvTrainKind::Variant::kIterativeIfgs) {
            adv_x[j] = ifgs_xent_sample(model, s.x, s.label, adv->epsilon, adv->iterations,
                                        adv->step);
          } else {
            adv_x[j] = fgs_xent_sample(*source, s.x, s.label, adv->epsilon);
          }
        }

        const double w_benign = benign_n ? adv->mix / static_cast<double>(benign_n) : 0.0;
        const double w_adv = adv_n ? (1.0 - adv->mix) / static_cast<double>(adv_n) : 0.0;
        for (std::size_t j = 0; j < benign_n; ++j) {
          const Sample& s = data.samples[order[start + j]];
          forward_train(model, s.x, cfg.dropout_rate, rng, scratch);
          backward_accumulate(model, scratch, s.label, w_benign, acc);
        }
        for (std::size_t j = 0; j < adv_n; ++j) {
          forward_train(model, adv_x[j], cfg.dropout_rate, rng, scratch);
          backward_accumulate(model, scratch, adv_y[j], w_adv, acc);
        }
      }

      apply_update(model, acc, cfg.learning_rate);
    }
  }

  if (stats) {
    stats->train_accuracy = accuracy(model, data);
    stats->eval_accuracy = eval_set ? accuracy(model, *eval_set) : -1.0;
  }
  return model;
}

}  // namespace

MlpModel train(const Dataset& data, const ArchSpec& arch, const TrainConfig& cfg,
               const Dataset* eval_set, TrainStats* stats) {
  return sgd_engine(data, arch, cfg, nullptr, eval_set, stats);
}

MlpModel adversarial_train(const Dataset& data, const ArchSpec& arch, const TrainConfig& cfg,
                           const AdvTrainKind& kind, const Dataset* eval_set,
                           TrainStats* stats) {
  if (kind.epsilon < 0.0) throw ArgumentError("adversarial_train: epsilon must be >= 0");
  if (kind.mix < 0.0 || kind.mix > 1.0) throw ArgumentError("adversarial_train: mix in [0,1]");
  return sgd_engine(data, arch, cfg, &kind, eval_set, stats);
}

double accuracy(const MlpModel& model, const Dataset& data) {
  if (data.samples.empty()) throw ArgumentError("accuracy: empty dataset");
  std::size_t hit = 0;
  for (const Sample& s : data.samples) {
    if (model.classify(s.x) == s.label) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

void save_model(const MlpModel& model, const std::string& path) {
  model.validate();
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open for writing");
  out << "{\n";
  out << "  \"format_version\": \"gem-model-v1\",\n";
  out << "  \"input_dim\": " << model.input_dim << ",\n";
  out << "  \"num_classes\": " << model.num_classes << ",\n";
  out << "  \"data_range\": [" << fmt_double(model.lo) << ", " << fmt_double(model.hi)
      << "],\n";
  out << "  \"layers\": [\n";
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const DenseLayer& layer = model.layers[l];
    out << "    {\"rows\": " << layer.out << ", \"cols\": " << layer.in
        << ", \"activation\": \""
        << (layer.activation == Activation::kRelu ? "relu" : "identity")
        << "\",\n     \"weights\": [";
    for (std::size_t o = 0; o < layer.out; ++o) {
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (o + i > 0) out << ", ";
        out << fmt_double(layer.weight(o, i));
      }
    }
    out << "],\n     \"biases\": [";
    for (std::size_t o = 0; o < layer.out; ++o) {
      if (o > 0) out << ", ";
      out << fmt_double(layer.biases[o]);
    }
    out << "]}";
    out << (l + 1 < model.layers.size() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
  if (!out) throw FormatError(path + ": write failed");
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  try {
    if (j.at("format_version").get<std::string>() != "gem-model-v1") {
      throw FormatError(path + ": unsupported format_version");
    }
    MlpModel model;
    model.input_dim = j.at("input_dim").get<std::size_t>();
    model.num_classes = j.at("num_classes").get<int>();
    model.lo = j.at("data_range").at(0).get<double>();
    model.hi = j.at("data_range").at(1).get<double>();
    for (const auto& jl : j.at("layers")) {
      DenseLayer layer;
      layer.out = jl.at("rows").get<std::size_t>();
      layer.in = jl.at("cols").get<std::size_t>();
      const std::string act = jl.at("activation").get<std::string>();
      if (act == "relu") {
        layer.activation = Activation::kRelu;
      } else if (act == "identity") {
        layer.activation = Activation::kIdentity;
      } else {
        throw FormatError(path + ": unknown activation '" + act + "'");
      }
      const auto& jw = jl.at("weights");
      const auto& jb = jl.at("biases");
      if (jw.size() != layer.in * layer.out || jb.size() != layer.out) {
        throw FormatError(path + ": layer array size mismatch");
      }
      layer.weights_t.resize(layer.in * layer.out);
      std::size_t idx = 0;
      for (std::size_t o = 0; o < layer.out; ++o)
        for (std::size_t i = 0; i < layer.in; ++i) layer.weight(o, i) = jw.at(idx++).get<double>();
      layer.biases.resize(layer.out);
      for (std::size_t o = 0; o < layer.out; ++o) layer.biases[o] = jb.at(o).get<double>();
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace gem
