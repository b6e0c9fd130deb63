#ifndef GEM_MODEL_HPP
#define GEM_MODEL_HPP

#include <string>
#include <utility>
#include <vector>

#include "gem/dataset.hpp"
#include "gem/losses.hpp"
#include "gem/numerics.hpp"

namespace gem {

enum class Activation { kRelu, kIdentity };

/// One dense layer of the logical out x in weight matrix W. Storage is
/// transposed (in x out) so the forward matvec accumulates independent
/// output lanes; the on-disk format stays row-major out x in.
struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> weights_t;  // in x out
  Vec biases;                     // out
  Activation activation = Activation::kRelu;

  double weight(std::size_t o, std::size_t i) const { return weights_t[i * out + o]; }
  double& weight(std::size_t o, std::size_t i) { return weights_t[i * out + o]; }
};

struct ForwardResult {
  Vec logits;
  Vec probs;
};

/// Dense feed-forward softmax classifier. The final layer is the identity
/// logit head; probabilities come from a max-subtracted softmax.
struct MlpModel {
  std::vector<DenseLayer> layers;
  std::size_t input_dim = 0;
  int num_classes = 0;
  double lo = 0.0, hi = 1.0;  // data range the model was trained on

  ForwardResult forward(const Vec& x) const;
  int classify(const Vec& x) const;

  /// Exact gradient of -log p_cls at x (ReLU subgradient at 0 is 0).
  Vec grad_xent(const Vec& x, int cls) const;

  /// Exact gradient of phi_a - phi_b at x.
  Vec grad_logit_diff(const Vec& x, int a, int b) const;

  void validate() const;
};

/// Hidden layer widths; the logit head is appended automatically.
struct ArchSpec {
  std::vector<std::size_t> hidden;
};

/// "mlp-128" (desk default, one hidden layer) or "mlp-d" (4 x 300), or a
/// dash-separated width list like "256-64".
ArchSpec arch_from_name(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
  double dropout_rate = 0.0;  // 0 disables; inverted scaling at train time
};

struct AdvTrainKind {
  enum class Variant { kStandardFgs, kEnsemble, kIterativeIfgs };
  Variant variant = Variant::kStandardFgs;
  double epsilon = 0.3;  // L-inf budget for the generated samples
  double mix = 0.5;      // weight of the benign loss term
  std::vector<const MlpModel*> sources;  // ensemble FGS sources
  std::size_t iterations = 40;           // iterative variant t
  double step = 0.01;                    // iterative variant alpha
};

struct TrainStats {
  double train_accuracy = 0.0;
  double eval_accuracy = -1.0;  // -1 when no eval set was given
};

MlpModel init_mlp(const ArchSpec& arch, std::size_t input_dim, int num_classes,
                  std::pair<double, double> data_range, Rng& rng);

/// Gradient of the selected attack loss at x:
///   xent:  grad of -log p_c with c = spec.class_index
///   logit untargeted: grad of max(phi_y - max_{i!=y} phi_i, -kappa),
///         zero in the clamped branch
///   logit targeted:   grad of max_{i!=T} phi_i - phi_T
Vec grad_input(const MlpModel& model, const Vec& x, const LossSpec& spec);

/// Plain minibatch SGD with cross-entropy loss. Deterministic given the
/// config seed. Zero epochs returns the initialized model unchanged.
MlpModel train(const Dataset& data, const ArchSpec& arch, const TrainConfig& cfg,
               const Dataset* eval_set = nullptr, TrainStats* stats = nullptr);

/// Adversarial training: each minibatch is half benign, half adversarial,
/// with loss mix * benign + (1 - mix) * adversarial. The standard variant
/// regenerates FGS samples against the current model every batch; the
/// ensemble variant takes each batch's adversarial half from one of the
/// fixed source models chosen uniformly at random; the iterative variant
/// uses IFGS(t, step) against the current model.
MlpModel adversarial_train(const Dataset& data, const ArchSpec& arch, const TrainConfig& cfg,
                           const AdvTrainKind& kind, const Dataset* eval_set = nullptr,
                           TrainStats* stats = nullptr);

double accuracy(const MlpModel& model, const Dataset& data);

/// gem-model-v1 on-disk format: JSON text, numbers in shortest
/// round-trip decimal form so save/load is value-exact.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace gem

#endif  // GEM_MODEL_HPP
