#include "gem/query_reduction.hpp"

#include <cmath>
#include <numeric>

namespace gem {

GradientEstimate estimate_rg(const ScalarFn& g, const Vec& x, std::size_t k, double delta,
                             Rng& rng, bool exact_residual_divisor) {
  const std::size_t d = x.size();
  if (k < 1 || k > d) throw ArgumentError("estimate_rg: k must be in [1, d]");
  if (delta <= 0.0) throw ArgumentError("estimate_rg: delta must be positive");

  // Drawing k indices at a time without replacement is a shuffled
  // permutation consumed in chunks.
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);

  GradientEstimate est;
  est.entries.assign(d, 0.0);
  Vec probe(d);

  for (std::size_t start = 0; start < d; start += k) {
    const std::size_t group = std::min(k, d - start);
    for (std::size_t i = 0; i < d; ++i) probe[i] = x[i];
    for (std::size_t j = 0; j < group; ++j) probe[perm[start + j]] = x[perm[start + j]] + delta;
    const double plus = g(probe);
    for (std::size_t j = 0; j < group; ++j) probe[perm[start + j]] = x[perm[start + j]] - delta;
    const double minus = g(probe);
    est.queries_used += 2;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("estimate_rg: non-finite function value in group starting at " +
                         std::to_string(start));
    }
    const double divisor_k =
        exact_residual_divisor ? static_cast<double>(group) : static_cast<double>(k);
    const double value = (plus - minus) / (2.0 * delta * divisor_k);
    for (std::size_t j = 0; j < group; ++j) est.entries[perm[start + j]] = value;
  }
  return est;
}

GradientEstimate estimate_pca(const ScalarFn& g, const Vec& x, const PcaBasis& basis,
                              double delta) {
  const std::size_t d = x.size();
  if (basis.dim() != d) throw ArgumentError("estimate_pca: basis dimension mismatch");
  if (delta <= 0.0) throw ArgumentError("estimate_pca: delta must be positive");

  GradientEstimate est;
  est.entries.assign(d, 0.0);
  Vec v(d);
  Vec probe(d);

  for (std::size_t c = 0; c < basis.count(); ++c) {
    double norm2_v = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      v[i] = basis.components(i, c);
      norm2_v += v[i] * v[i];
    }
    const double inv_norm = 1.0 / std::sqrt(norm2_v);
    for (double& vi : v) vi *= inv_norm;

    for (std::size_t i = 0; i < d; ++i) probe[i] = x[i] + delta * v[i];
    const double plus = g(probe);
    for (std::size_t i = 0; i < d; ++i) probe[i] = x[i] - delta * v[i];
    const double minus = g(probe);
    est.queries_used += 2;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("estimate_pca: non-finite function value at component " +
                         std::to_string(c));
    }
    const double alpha = (plus - minus) / (2.0 * delta);
    for (std::size_t i = 0; i < d; ++i) est.entries[i] += alpha * v[i];
  }
  return est;
}

}  // namespace gem
