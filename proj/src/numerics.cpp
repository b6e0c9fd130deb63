#include "gem/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gem {

Vec Mat::col(std::size_t c) const {
  Vec out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  return out;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_index: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

double linf_dist(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l2_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vec two_sided_fd(const ScalarFn& g, const Vec& x, double delta) {
  if (delta <= 0.0) throw ArgumentError("two_sided_fd: delta must be positive");
  Vec grad(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + delta;
    const double plus = g(probe);
    probe[i] = x[i] - delta;
    const double minus = g(probe);
    probe[i] = x[i];
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("two_sided_fd: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * delta);
  }
  return grad;
}

double directional_fd(const ScalarFn& g, const Vec& x, const Vec& v, double delta) {
  if (delta <= 0.0) throw ArgumentError("directional_fd: delta must be positive");
  if (v.size() != x.size()) throw ArgumentError("directional_fd: direction length mismatch");
  Vec probe(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] + delta * v[i];
  const double plus = g(probe);
  for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] - delta * v[i];
  const double minus = g(probe);
  if (!std::isfinite(plus) || !std::isfinite(minus)) {
    throw NumericError("directional_fd: non-finite function value");
  }
  return (plus - minus) / (2.0 * delta);
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. On return, `a`
// holds the eigenvalues on its diagonal and the columns of `v` are the
// eigenvectors.
void jacobi_eigen(Mat& a, Mat& v, std::size_t max_sweeps) {
  const std::size_t n = a.rows();
  v = Mat(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  if (n < 2) return;

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a(p, q));
    if (off <= 1e-14 * std::max(1.0, scale) * static_cast<double>(n)) return;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double theta = 0.5 * (aqq - app) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i != p && i != q) {
            const double aip = a(i, p), aiq = a(i, q);
            a(i, p) = aip - s * (aiq + tau * aip);
            a(p, i) = a(i, p);
            a(i, q) = aiq + s * (aip - tau * aiq);
            a(q, i) = a(i, q);
          }
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = vip - s * (viq + tau * vip);
          v(i, q) = viq + s * (vip - tau * viq);
        }
      }
    }
  }
  throw NumericError("pca_fit: Jacobi eigensolver did not converge within sweep cap");
}

}  // namespace

PcaBasis pca_fit(const Mat& data, std::size_t k) {
  const std::size_t d = data.rows();
  const std::size_t n = data.cols();
  if (n < 2) throw ArgumentError("pca_fit: need at least 2 samples");
  if (k < 1 || k > std::min(d, n)) throw ArgumentError("pca_fit: k out of range");
  for (double x : data.data()) {
    if (!std::isfinite(x)) throw ArgumentError("pca_fit: data contains non-finite values");
  }

  // Center columns and form the (n-1)-normalized covariance.
  Vec mean(d, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < d; ++i) mean[i] += data(i, j);
  for (std::size_t i = 0; i < d; ++i) mean[i] /= static_cast<double>(n);

  Mat centered(d, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < d; ++i) centered(i, j) = data(i, j) - mean[i];

  Mat cov(d, d, 0.0);
  const double norm = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      const double* ri = centered.row_ptr(i);
      const double* rj = centered.row_ptr(j);
      for (std::size_t t = 0; t < n; ++t) s += ri[t] * rj[t];
      cov(i, j) = s * norm;
      cov(j, i) = s * norm;
    }
  }

  Mat a = cov;
  Mat eigvecs;
  jacobi_eigen(a, eigvecs, 10 * d * d);

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return a(l, l) > a(r, r); });

  PcaBasis basis;
  basis.components = Mat(d, k);
  basis.eigenvalues.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t src = order[c];
    basis.eigenvalues[c] = std::max(a(src, src), 0.0);

    // Fix sign: largest-magnitude entry positive.
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (std::abs(eigvecs(i, src)) > best) {
        best = std::abs(eigvecs(i, src));
        arg = i;
      }
    }
    const double flip = eigvecs(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i) basis.components(i, c) = flip * eigvecs(i, src);
  }

  // Validate the contract before handing the basis out.
  for (std::size_t c1 = 0; c1 < k; ++c1) {
    for (std::size_t c2 = c1; c2 < k; ++c2) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += basis.components(i, c1) * basis.components(i, c2);
      const double want = c1 == c2 ? 1.0 : 0.0;
      if (std::abs(s - want) > 1e-8) {
        throw NumericError("pca_fit: component columns are not orthonormal");
      }
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double lambda = basis.eigenvalues[c];
    double resid2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double cu = 0.0;
      for (std::size_t j = 0; j < d; ++j) cu += cov(i, j) * basis.components(j, c);
      const double r = cu - lambda * basis.components(i, c);
      resid2 += r * r;
    }
    if (std::sqrt(resid2) > 1e-6 * std::max(1.0, lambda)) {
      throw NumericError("pca_fit: eigenpair residual above tolerance");
    }
  }
  return basis;
}

}  // namespace gem
