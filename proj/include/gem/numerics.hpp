#ifndef GEM_NUMERICS_HPP
#define GEM_NUMERICS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gem/errors.hpp"

namespace gem {

using Vec = std::vector<double>;

using ScalarFn = std::function<double(const Vec&)>;

/// Dense row-major matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }
  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }

  Vec col(std::size_t c) const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Top-k principal components: d x k orthonormal columns plus their
/// covariance eigenvalues in descending order.
struct PcaBasis {
  Mat components;   // d x k
  Vec eigenvalues;  // length k, lambda_1 >= ... >= lambda_k >= 0

  std::size_t dim() const { return components.rows(); }
  std::size_t count() const { return components.cols(); }
};

/// Seedable deterministic generator. All distributions are implemented by
/// hand on top of mt19937_64 so the draw sequence is identical across
/// platforms (std::normal_distribution and friends are not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// +1 or -1 with equal probability.
  double rademacher() { return (gen_() >> 63) ? 1.0 : -1.0; }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
double linf_dist(const Vec& a, const Vec& b);
double l2_dist(const Vec& a, const Vec& b);

/// sign with sign(0) = 0.
inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Two-sided finite-difference gradient estimate: entry i is
/// (g(x + delta e_i) - g(x - delta e_i)) / (2 delta). Costs exactly 2d
/// evaluations of g, in coordinate order (+ then -).
Vec two_sided_fd(const ScalarFn& g, const Vec& x, double delta);

/// Two-sided estimate of the directional derivative of g along v:
/// (g(x + delta v) - g(x - delta v)) / (2 delta). Exactly 2 evaluations.
double directional_fd(const ScalarFn& g, const Vec& x, const Vec& v, double delta);

/// Principal components of n column samples in d dimensions. Columns are
/// centered, the (n-1)-normalized covariance is formed, and the top-k
/// eigenpairs are extracted with a cyclic Jacobi sweep. Component signs are
/// fixed so the largest-magnitude entry of each column is positive; tiny
/// negative eigenvalues from round-off are clamped to zero.
PcaBasis pca_fit(const Mat& data, std::size_t k);

}  // namespace gem

#endif  // GEM_NUMERICS_HPP
