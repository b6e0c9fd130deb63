#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "gem/dataset.hpp"

using namespace gem;

namespace {

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name) : path("/tmp/gem_test_" + name) {}
  ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("hand-crafted one-image IDX file parses byte-exactly") {
  TempPath img("idx_img"), lab("idx_lab");
  {
    std::ofstream f(img.path, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2};
    f.write(reinterpret_cast<const char*>(header), sizeof header);
    const unsigned char pixels[] = {0, 51, 102, 255};
    f.write(reinterpret_cast<const char*>(pixels), sizeof pixels);
  }
  {
    std::ofstream f(lab.path, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 1, 0, 0, 0, 1};
    f.write(reinterpret_cast<const char*>(header), sizeof header);
    const unsigned char label = 7;
    f.write(reinterpret_cast<const char*>(&label), 1);
  }

  const Dataset data = load_mnist_idx(img.path, lab.path);
  REQUIRE(data.size() == 1);
  CHECK(data.input_dim == 4);
  CHECK(data.samples[0].label == 7);
  CHECK(data.samples[0].x[0] == 0.0);
  CHECK(data.samples[0].x[1] == doctest::Approx(51.0 / 255.0).epsilon(1e-15));
  CHECK(data.samples[0].x[2] == doctest::Approx(102.0 / 255.0).epsilon(1e-15));
  CHECK(data.samples[0].x[3] == 1.0);
}

TEST_CASE("IDX count mismatch and bad magic raise format errors") {
  TempPath img("idx_img2"), lab("idx_lab2");
  {
    std::ofstream f(img.path, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1};
    f.write(reinterpret_cast<const char*>(header), sizeof header);
    const unsigned char px = 9;
    f.write(reinterpret_cast<const char*>(&px), 1);
  }
  {
    std::ofstream f(lab.path, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 1, 0, 0, 0, 2};  // two labels, one image
    f.write(reinterpret_cast<const char*>(header), sizeof header);
    const unsigned char labels[] = {1, 2};
    f.write(reinterpret_cast<const char*>(labels), 2);
  }
  CHECK_THROWS_AS(load_mnist_idx(img.path, lab.path), FormatError);

  {
    std::ofstream f(img.path, std::ios::binary);
    const unsigned char header[] = {0, 0, 9, 9, 0, 0, 0, 1};
    f.write(reinterpret_cast<const char*>(header), sizeof header);
  }
  CHECK_THROWS_AS(load_mnist_idx(img.path, lab.path), FormatError);
}

TEST_CASE("IDX write-then-read round-trips a byte-quantized dataset") {
  Dataset data = synth_digits(3, 40);
  // Quantize to the byte grid the format stores.
  for (Sample& s : data.samples) {
    for (double& v : s.x) v = std::round(v * 255.0) / 255.0;
  }
  TempPath img("idx_rt_img"), lab("idx_rt_lab");
  write_mnist_idx(data, img.path, lab.path);
  const Dataset back = load_mnist_idx(img.path, lab.path);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    REQUIRE(back.samples[i].label == data.samples[i].label);
    for (std::size_t j = 0; j < data.input_dim; ++j) {
      REQUIRE(back.samples[i].x[j] == data.samples[i].x[j]);
    }
  }
}

TEST_CASE("synth_blobs is deterministic and respects bounds") {
  const Dataset a = synth_blobs(11, 200, 5, 3, 0.05);
  const Dataset b = synth_blobs(11, 200, 5, 3, 0.05);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].label == b.samples[i].label);
    for (std::size_t j = 0; j < a.input_dim; ++j) {
      REQUIRE(a.samples[i].x[j] == b.samples[i].x[j]);
      REQUIRE(a.samples[i].x[j] >= 0.0);
      REQUIRE(a.samples[i].x[j] <= 1.0);
    }
  }
}

TEST_CASE("per-class averages recover blob means") {
  const double spread = 0.03;
  const Dataset data = synth_blobs(19, 3000, 4, 3, spread);
  const std::vector<Vec> means = class_means(data);
  // Empirical class means of tight blobs concentrate near the generator
  // means; verify cross-class distances dominate within-class noise.
  const double tol = 3.0 * spread / std::sqrt(3000.0 / 3.0);
  const Dataset tight = synth_blobs(19, 3000, 4, 3, 1e-6);
  const std::vector<Vec> centers = class_means(tight);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < 4; ++j) {
      const bool interior = centers[c][j] > 0.05 && centers[c][j] < 0.95;
      if (interior) CHECK(std::abs(means[c][j] - centers[c][j]) < 5.0 * tol);
    }
  }
}

TEST_CASE("synth_digits shape and determinism") {
  const Dataset a = synth_digits(5, 50);
  const Dataset b = synth_digits(5, 50);
  CHECK(a.input_dim == 784);
  CHECK(a.num_classes == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].label == static_cast<int>(i % 10));
    for (std::size_t j = 0; j < a.input_dim; ++j) REQUIRE(a.samples[i].x[j] == b.samples[i].x[j]);
  }
}

TEST_CASE("sample_targets never picks the true class and is near-uniform") {
  const Dataset data = synth_blobs(23, 9000, 3, 6, 0.1);
  Rng rng(99);
  const std::vector<int> targets = sample_targets(data.samples, 6, rng);
  std::vector<std::size_t> counts(6, 0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    REQUIRE(targets[i] != data.samples[i].label);
    ++counts[targets[i]];
  }
  // Chi-squared against uniform across 6 classes (each class is excluded
  // for 1/6 of draws, so expected counts stay uniform overall).
  const double expected = 9000.0 / 6.0;
  double chi2 = 0.0;
  for (std::size_t c = 0; c < 6; ++c) {
    const double diff = static_cast<double>(counts[c]) - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 15.09);  // 99th percentile of chi2 with 5 dof

  SUBCASE("two classes forces the other class") {
    const Dataset two = synth_blobs(29, 100, 3, 2, 0.1);
    Rng r2(1);
    const std::vector<int> t2 = sample_targets(two.samples, 2, r2);
    for (std::size_t i = 0; i < t2.size(); ++i) CHECK(t2[i] == 1 - two.samples[i].label);
  }
}
