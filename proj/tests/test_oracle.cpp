#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <thread>

#include "gem/oracle.hpp"

using namespace gem;

namespace {

MlpModel small_model(std::uint64_t seed = 3) {
  Rng rng(seed);
  return init_mlp({{6}}, 4, 3, {0.0, 1.0}, rng);
}

}  // namespace

TEST_CASE("local adapter matches model.forward bit for bit") {
  const MlpModel m = small_model();
  LocalOracle oracle(m);
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    Vec x(4);
    for (double& v : x) v = rng.uniform();
    const ProbVector a = oracle.query_probs(x);
    const ProbVector b = m.forward(x).probs;
    REQUIRE(a == b);
  }
}

TEST_CASE("counting wrapper is transparent and counts exactly") {
  const MlpModel m = small_model();
  LocalOracle inner(m);
  CountingOracle counted = with_counter(inner);

  const Vec x = {0.1, 0.2, 0.3, 0.4};
  const ProbVector p1 = counted.query_probs(x);
  const ProbVector p2 = counted.query_probs(x);
  REQUIRE(p1 == p2);
  REQUIRE(p1 == inner.query_probs(x));
  CHECK(counted.ledger()->total() == 2);
}

TEST_CASE("ledger phases partition the total") {
  const MlpModel m = small_model();
  LocalOracle inner(m);
  CountingOracle counted(inner);
  const Vec x = {0.5, 0.5, 0.5, 0.5};

  counted.set_phase("estimate");
  for (int i = 0; i < 5; ++i) counted.query_probs(x);
  counted.set_phase("verify");
  counted.query_probs(x);

  CHECK(counted.ledger()->total() == 6);
  CHECK(counted.ledger()->phase("estimate") == 5);
  CHECK(counted.ledger()->phase("verify") == 1);
  std::uint64_t sum = 0;
  for (const auto& [name, n] : counted.ledger()->phases()) sum += n;
  CHECK(sum == counted.ledger()->total());
}

TEST_CASE("a d=784 two-sided FD sweep through the wrapper costs 1568 queries") {
  Rng rng(5);
  const MlpModel m = init_mlp({{4}}, 784, 2, {0.0, 1.0}, rng);
  LocalOracle inner(m);
  CountingOracle counted(inner);
  auto g = [&counted](const Vec& z) { return counted.query_probs(z)[0]; };
  two_sided_fd(g, Vec(784, 0.5), 0.01);
  CHECK(counted.ledger()->total() == 1568);
}

TEST_CASE("ledger is exact under concurrent increments") {
  QueryLedger ledger;
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&ledger] {
      for (int i = 0; i < 2500; ++i) ledger.add("phase");
    });
  }
  for (auto& t : pool) t.join();
  CHECK(ledger.total() == 10000);
  CHECK(ledger.phase("phase") == 10000);
}

TEST_CASE("recover_logits reproduces probability ratios") {
  const ProbVector p = {0.7, 0.2, 0.1};
  const LogitVector phi = recover_logits(p);
  CHECK(phi[0] - phi[1] == doctest::Approx(std::log(3.5)).epsilon(1e-12));
  CHECK(phi[0] - phi[1] == doctest::Approx(1.252763).epsilon(1e-5));

  // Softmax of the recovered logits reproduces p.
  double sum = 0.0;
  for (double v : phi) sum += std::exp(v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(std::exp(phi[i]) / sum == doctest::Approx(p[i]).epsilon(1e-9));
  }
}

TEST_CASE("recover_logits of a uniform vector is constant") {
  const LogitVector phi = recover_logits({0.25, 0.25, 0.25, 0.25});
  for (double v : phi) CHECK(v == phi[0]);
}

TEST_CASE("recover_logits clamps exact zeros") {
  const LogitVector phi = recover_logits({1.0, 0.0});
  CHECK(std::isfinite(phi[1]));
  CHECK(phi[1] == doctest::Approx(std::log(1e-12)).epsilon(1e-12));
}

TEST_CASE("pairwise logit differences ignore positive scaling of scores") {
  // Scores scaled by any positive constant keep the same differences after
  // log; the additive constant cancels.
  const ProbVector p = {0.6, 0.3, 0.1};
  ProbVector scaled = p;
  for (double& v : scaled) v *= 3.7;  // no longer normalized
  const LogitVector a = recover_logits(p);
  const LogitVector b = recover_logits(scaled);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      CHECK(a[i] - a[j] == doctest::Approx(b[i] - b[j]).epsilon(1e-12));
    }
  }
}
