#ifndef GEM_QUERY_REDUCTION_HPP
#define GEM_QUERY_REDUCTION_HPP

#include <cstdint>

#include "gem/numerics.hpp"

namespace gem {

struct GradientEstimate {
  Vec entries;
  std::uint64_t queries_used = 0;
};

/// Gradient estimation by random feature grouping: the coordinates are
/// partitioned into ceil(d/k) disjoint random groups (all but possibly the
/// last of size k); every coordinate in a group S gets the two-sided
/// directional estimate along S's indicator divided by k. Costs
/// 2*ceil(d/k) evaluations of g. With k=1 this reduces to two_sided_fd.
///
/// The listing's divisor 2*delta*k is also applied to the short residual
/// group; exact_residual_divisor switches that group to its actual size.
GradientEstimate estimate_rg(const ScalarFn& g, const Vec& x, std::size_t k, double delta,
                             Rng& rng, bool exact_residual_divisor = false);

/// Gradient estimation along the top-k principal components: accumulates
/// alpha_i * v_i where v_i is the normalized i-th component and alpha_i its
/// two-sided directional derivative estimate. Costs exactly 2k evaluations.
GradientEstimate estimate_pca(const ScalarFn& g, const Vec& x, const PcaBasis& basis,
                              double delta);

}  // namespace gem

#endif  // GEM_QUERY_REDUCTION_HPP
