#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gem/numerics.hpp"

using namespace gem;

TEST_CASE("two-sided FD is exact on quadratics") {
  auto g = [](const Vec& x) { return x[0] * x[0]; };
  const Vec grad = two_sided_fd(g, {3.0}, 0.1);
  CHECK(grad[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("two-sided FD of a constant is the zero vector") {
  auto g = [](const Vec&) { return 4.25; };
  const Vec grad = two_sided_fd(g, {1.0, -2.0, 0.5}, 0.3);
  for (double v : grad) CHECK(v == 0.0);
}

TEST_CASE("two-sided FD approximates smooth gradients") {
  auto g = [](const Vec& x) { return std::sin(x[0]) + x[1]; };
  const Vec grad = two_sided_fd(g, {0.0, 5.0}, 1e-3);
  CHECK(grad[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(grad[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("two-sided FD makes exactly 2d evaluations") {
  std::size_t calls = 0;
  auto g = [&calls](const Vec& x) {
    ++calls;
    return x[0] + x[1] + x[2] + x[3];
  };
  two_sided_fd(g, {0.0, 0.0, 0.0, 0.0}, 0.5);
  CHECK(calls == 8);
}

TEST_CASE("FD error shrinks ~4x when delta halves on cubics") {
  auto g = [](const Vec& x) { return x[0] * x[0] * x[0]; };
  const double x0 = 1.3;
  const double exact = 3.0 * x0 * x0;
  const double err1 = std::abs(two_sided_fd(g, {x0}, 0.2)[0] - exact);
  const double err2 = std::abs(two_sided_fd(g, {x0}, 0.1)[0] - exact);
  const double ratio = err1 / err2;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("FD rejects bad arguments and non-finite values") {
  auto g = [](const Vec& x) { return x[0]; };
  CHECK_THROWS_AS(two_sided_fd(g, {1.0}, 0.0), ArgumentError);
  CHECK_THROWS_AS(two_sided_fd(g, {1.0}, -1.0), ArgumentError);

  auto bad = [](const Vec& x) { return x[1] > 1.05 ? std::nan("") : x[0]; };
  CHECK_THROWS_AS(two_sided_fd(bad, {0.0, 1.0}, 0.1), NumericError);
  try {
    two_sided_fd(bad, {0.0, 1.0}, 0.1);
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
}

TEST_CASE("directional FD is exact on linear functions") {
  const Vec w = {2.0, -1.0};
  auto g = [&w](const Vec& x) { return dot(w, x); };
  CHECK(directional_fd(g, {7.0, 9.0}, {1.0, 0.0}, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(directional_fd(g, {7.0, 9.0}, {0.6, 0.8}, 0.5) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(directional_fd(g, {7.0, 9.0}, {0.0, 0.0}, 0.5) == 0.0);
}

TEST_CASE("directional FD along e_i equals the i-th two-sided FD entry") {
  auto g = [](const Vec& x) { return std::exp(0.3 * x[0]) + x[1] * x[1] - 0.2 * x[0] * x[1]; };
  const Vec x = {0.4, -1.1};
  const double delta = 0.05;
  const Vec full = two_sided_fd(g, x, delta);
  CHECK(directional_fd(g, x, {1.0, 0.0}, delta) == full[0]);
  CHECK(directional_fd(g, x, {0.0, 1.0}, delta) == full[1]);
}

TEST_CASE("rng determinism and basic ranges") {
  Rng a(123), b(123);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng d(9), e(9);
  for (int i = 0; i < 1000; ++i) REQUIRE(d.normal() == e.normal());
}

TEST_CASE("rng shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 10; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("pca on single-axis data recovers e1") {
  // 10 points along the first axis, zero elsewhere.
  Mat data(3, 10);
  for (std::size_t j = 0; j < 10; ++j) data(0, j) = static_cast<double>(j);
  const PcaBasis basis = pca_fit(data, 1);
  CHECK(std::abs(basis.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(basis.components(1, 0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(basis.components(2, 0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(basis.eigenvalues[0] > 0.0);
}

TEST_CASE("pca on isotropic data yields equal eigenvalues") {
  // Symmetric 4-point configuration in 2d: variance identical on both axes.
  Mat data(2, 4);
  data(0, 0) = 1.0;
  data(0, 1) = -1.0;
  data(1, 2) = 1.0;
  data(1, 3) = -1.0;
  const PcaBasis basis = pca_fit(data, 2);
  CHECK(std::abs(basis.eigenvalues[0] - basis.eigenvalues[1]) < 1e-9);
}

TEST_CASE("pca recovers an anisotropic covariance") {
  // Four points whose empirical covariance is exactly diag(4, 1) * (4/3).
  Mat data(2, 4);
  data(0, 0) = 2.0;
  data(0, 1) = -2.0;
  data(1, 2) = 1.0;
  data(1, 3) = -1.0;
  const PcaBasis basis = pca_fit(data, 2);
  CHECK(basis.eigenvalues[0] / basis.eigenvalues[1] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(std::abs(basis.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pca basis is orthonormal with small eigen-residuals") {
  Rng rng(11);
  const std::size_t d = 12, n = 40;
  Mat data(d, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j) data(i, j) = rng.normal() * (1.0 + 0.3 * double(i));
  const PcaBasis basis = pca_fit(data, 6);  // validation happens inside pca_fit
  for (std::size_t c = 1; c < basis.count(); ++c) {
    CHECK(basis.eigenvalues[c - 1] >= basis.eigenvalues[c]);
  }
  for (double l : basis.eigenvalues) CHECK(l >= 0.0);
}

TEST_CASE("pca is invariant to column order up to sign") {
  Rng rng(13);
  const std::size_t d = 6, n = 25;
  Mat data(d, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j) data(i, j) = rng.normal() * double(i + 1);

  Mat reversed(d, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j) reversed(i, j) = data(i, n - 1 - j);

  const PcaBasis a = pca_fit(data, 3);
  const PcaBasis b = pca_fit(reversed, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(a.eigenvalues[c] == doctest::Approx(b.eigenvalues[c]).epsilon(1e-9));
    for (std::size_t i = 0; i < d; ++i) {
      // Sign convention makes the components directly comparable.
      CHECK(a.components(i, c) == doctest::Approx(b.components(i, c)).epsilon(1e-7));
    }
  }
}

TEST_CASE("pca argument validation") {
  Mat tiny(3, 1);
  CHECK_THROWS_AS(pca_fit(tiny, 1), ArgumentError);
  Mat data(3, 5);
  CHECK_THROWS_AS(pca_fit(data, 0), ArgumentError);
  CHECK_THROWS_AS(pca_fit(data, 4), ArgumentError);
}
