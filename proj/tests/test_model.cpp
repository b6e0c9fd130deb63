#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "gem/model.hpp"

using namespace gem;

namespace {

// Hand-built single-layer softmax model with explicit weights.
MlpModel linear_model(std::size_t in, int classes, const std::vector<std::vector<double>>& w,
                      const Vec& b) {
  MlpModel m;
  m.input_dim = in;
  m.num_classes = classes;
  m.lo = -10.0;
  m.hi = 10.0;
  DenseLayer layer;
  layer.in = in;
  layer.out = static_cast<std::size_t>(classes);
  layer.activation = Activation::kIdentity;
  layer.weights_t.assign(in * classes, 0.0);
  layer.biases = b;
  for (std::size_t o = 0; o < layer.out; ++o)
    for (std::size_t i = 0; i < in; ++i) layer.weight(o, i) = w[o][i];
  m.layers.push_back(std::move(layer));
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("all-zero linear layer yields uniform probabilities") {
  const MlpModel m = linear_model(3, 4, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}},
                                  {0, 0, 0, 0});
  const ForwardResult r = m.forward({0.3, -0.2, 0.7});
  for (double p : r.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax is overflow-stable for huge logits") {
  const MlpModel m = linear_model(1, 2, {{1000.0}, {0.0}}, {0, 0});
  const ForwardResult r = m.forward({1.0});
  CHECK(std::isfinite(r.probs[0]));
  CHECK(r.probs[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.probs[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax of logits (ln7, ln3) is (0.7, 0.3)") {
  const MlpModel m = linear_model(2, 2, {{1, 0}, {0, 1}}, {0, 0});
  const ForwardResult r = m.forward({std::log(7.0), std::log(3.0)});
  CHECK(r.probs[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(r.probs[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("softmax sums to one on random models") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const MlpModel m = init_mlp({{13}}, 6, 5, {0.0, 1.0}, rng);
    Vec x(6);
    for (double& v : x) v = rng.uniform();
    const ForwardResult r = m.forward(x);
    double sum = 0.0;
    for (double p : r.probs) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("xent gradient matches the closed form on a linear softmax") {
  // d(-log p_y)/dx = W^T (p - onehot(y)) for logits = Wx + b.
  const std::vector<std::vector<double>> w = {{0.8, -0.4}, {-0.2, 0.6}};
  const MlpModel m = linear_model(2, 2, w, {0.1, -0.3});
  const Vec x = {0.9, -1.4};
  const ForwardResult r = m.forward(x);
  const Vec g = m.grad_xent(x, 0);
  for (std::size_t i = 0; i < 2; ++i) {
    double expect = 0.0;
    for (std::size_t o = 0; o < 2; ++o) {
      const double resid = r.probs[o] - (o == 0 ? 1.0 : 0.0);
      expect += w[o][i] * resid;
    }
    CHECK(g[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("backprop matches central differences on random MLPs") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const MlpModel m = init_mlp({{9, 7}}, 5, 4, {0.0, 1.0}, rng);
    Vec x(5);
    for (double& v : x) v = rng.uniform();
    const int cls = static_cast<int>(rng.uniform_index(4));

    const Vec analytic = m.grad_xent(x, cls);
    auto loss = [&](const Vec& z) { return xent_from_probs(m.forward(z).probs, cls); };
    const Vec numeric = two_sided_fd(loss, x, 1e-3);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      max_rel = std::max(max_rel, std::abs(analytic[i] - numeric[i]) / scale);
    }
    CHECK(max_rel <= 1e-4);
  }
}

TEST_CASE("logit-loss gradient uses the active branch") {
  const std::vector<std::vector<double>> w = {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}};
  const MlpModel m = linear_model(2, 3, w, {0, 0, 0});
  const Vec x = {2.0, 0.5};  // logits (2.0, 0.5, 1.25): y=0 maximal by margin

  LossSpec spec;
  spec.kind = LossKind::kLogit;
  spec.mode = AttackMode::kUntargeted;
  spec.class_index = 0;
  spec.kappa = 0.0;
  const Vec g = grad_input(m, x, spec);
  // Active branch: grad of (phi_0 - phi_2) since class 2 is the runner-up.
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(g[i] == doctest::Approx(w[0][i] - w[2][i]).epsilon(1e-12));
  }

  // Already misclassified with kappa=0: clamp active, zero gradient.
  spec.class_index = 1;
  const Vec gz = grad_input(m, x, spec);
  for (double v : gz) CHECK(v == 0.0);
}

TEST_CASE("grad_input rejects invalid class indices") {
  const MlpModel m = linear_model(2, 2, {{1, 0}, {0, 1}}, {0, 0});
  LossSpec spec;
  spec.class_index = 5;
  CHECK_THROWS_AS(grad_input(m, {0.0, 0.0}, spec), ArgumentError);
}

TEST_CASE("training separates 2-class blobs") {
  const Dataset data = synth_blobs(41, 400, 2, 2, 0.04);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.5;
  cfg.seed = 3;
  TrainStats stats;
  const MlpModel m = train(data, {{16}}, cfg, nullptr, &stats);
  CHECK(stats.train_accuracy >= 0.99);
}

TEST_CASE("zero epochs returns the initialized model unchanged") {
  const Dataset data = synth_blobs(43, 60, 3, 2, 0.1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 17;
  const MlpModel trained = train(data, {{8}}, cfg);

  Rng rng(17);
  const MlpModel fresh = init_mlp({{8}}, 3, 2, {0.0, 1.0}, rng);
  REQUIRE(trained.layers.size() == fresh.layers.size());
  for (std::size_t l = 0; l < trained.layers.size(); ++l) {
    REQUIRE(trained.layers[l].weights_t == fresh.layers[l].weights_t);
    REQUIRE(trained.layers[l].biases == fresh.layers[l].biases);
  }
}

TEST_CASE("training is bit-reproducible given the seed") {
  const Dataset data = synth_blobs(47, 300, 4, 3, 0.08);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.2;
  cfg.seed = 11;
  cfg.dropout_rate = 0.3;
  const MlpModel a = train(data, {{12}}, cfg);
  const MlpModel b = train(data, {{12}}, cfg);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    REQUIRE(a.layers[l].weights_t == b.layers[l].weights_t);
    REQUIRE(a.layers[l].biases == b.layers[l].biases);
  }
}

TEST_CASE("empty dataset and bad labels are rejected") {
  Dataset empty;
  empty.input_dim = 3;
  empty.num_classes = 2;
  CHECK_THROWS_AS(train(empty, {{4}}, TrainConfig{}), ArgumentError);

  Dataset bad = synth_blobs(1, 10, 3, 2, 0.1);
  bad.samples[0].label = 9;
  CHECK_THROWS_AS(train(bad, {{4}}, TrainConfig{}), ArgumentError);
}

TEST_CASE("adversarial training with epsilon=0 equals plain training") {
  const Dataset data = synth_blobs(53, 240, 4, 3, 0.07);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 24;  // even batches keep the half/half split balanced
  cfg.learning_rate = 0.3;
  cfg.seed = 5;

  AdvTrainKind kind;
  kind.variant = AdvTrainKind::Variant::kStandardFgs;
  kind.epsilon = 0.0;
  kind.mix = 0.5;

  const MlpModel plain = train(data, {{10}}, cfg);
  const MlpModel adv = adversarial_train(data, {{10}}, cfg, kind);
  for (std::size_t l = 0; l < plain.layers.size(); ++l) {
    REQUIRE(plain.layers[l].weights_t == adv.layers[l].weights_t);
    REQUIRE(plain.layers[l].biases == adv.layers[l].biases);
  }
}

TEST_CASE("iterative adversarial training with t=1 equals standard with clipped step") {
  const Dataset data = synth_blobs(59, 160, 4, 2, 0.06);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.25;
  cfg.seed = 21;

  AdvTrainKind iter;
  iter.variant = AdvTrainKind::Variant::kIterativeIfgs;
  iter.epsilon = 0.2;
  iter.iterations = 1;
  iter.step = 0.5;  // larger than epsilon: the projection clips it to 0.2

  AdvTrainKind std_kind;
  std_kind.variant = AdvTrainKind::Variant::kStandardFgs;
  std_kind.epsilon = 0.2;

  const MlpModel a = adversarial_train(data, {{10}}, cfg, iter);
  const MlpModel b = adversarial_train(data, {{10}}, cfg, std_kind);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    REQUIRE(a.layers[l].weights_t == b.layers[l].weights_t);
    REQUIRE(a.layers[l].biases == b.layers[l].biases);
  }
}

TEST_CASE("ensemble variant requires sources") {
  const Dataset data = synth_blobs(61, 40, 3, 2, 0.1);
  AdvTrainKind kind;
  kind.variant = AdvTrainKind::Variant::kEnsemble;
  CHECK_THROWS_AS(adversarial_train(data, {{4}}, TrainConfig{}, kind), ArgumentError);
}

TEST_CASE("model save/load round-trip is value-exact") {
  Rng rng(67);
  const MlpModel m = init_mlp({{7, 5}}, 4, 3, {0.0, 1.0}, rng);
  const std::string path = "/tmp/gem_test_model.json";
  save_model(m, path);
  const MlpModel back = load_model(path);
  std::remove(path.c_str());

  REQUIRE(back.layers.size() == m.layers.size());
  CHECK(back.input_dim == m.input_dim);
  CHECK(back.num_classes == m.num_classes);
  REQUIRE(back.lo == m.lo);
  REQUIRE(back.hi == m.hi);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    REQUIRE(back.layers[l].weights_t == m.layers[l].weights_t);
    REQUIRE(back.layers[l].biases == m.layers[l].biases);
    REQUIRE(back.layers[l].activation == m.layers[l].activation);
  }
}

TEST_CASE("load_model rejects malformed files") {
  const std::string path = "/tmp/gem_test_badmodel.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"format_version\": \"other\"}", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_model(path), FormatError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_model("/tmp/gem_does_not_exist.json"), FormatError);
}
