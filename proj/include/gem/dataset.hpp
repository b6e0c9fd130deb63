#ifndef GEM_DATASET_HPP
#define GEM_DATASET_HPP

#include <string>
#include <vector>

#include "gem/numerics.hpp"

namespace gem {

struct Sample {
  Vec x;
  int label;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t input_dim = 0;
  int num_classes = 0;
  double lo = 0.0, hi = 1.0;
  std::string name;

  std::size_t size() const { return samples.size(); }
  Dataset slice(std::size_t begin, std::size_t count) const;
};

/// Parse the big-endian IDX pair (images magic 0x803, labels magic 0x801).
/// Pixels are scaled by 1/255 into [0, 1].
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Write a dataset back out as an IDX pair. Features are quantized to bytes
/// with round(x * 255); datasets whose features are multiples of 1/255
/// round-trip exactly. rows * cols must equal input_dim.
void write_mnist_idx(const Dataset& data, const std::string& images_path,
                     const std::string& labels_path, std::size_t rows = 28,
                     std::size_t cols = 28);

/// C Gaussian blobs with distinct means in [0,1]^d, clipped to [0,1].
Dataset synth_blobs(std::uint64_t seed, std::size_t n, std::size_t d, int num_classes,
                    double spread);

/// Deterministic 28x28 ten-class digit-glyph set: seven-segment style strokes
/// with random affine jitter, stroke-width variation and pixel noise. A small
/// dense net reaches high-90s accuracy on it; useful where the real IDX files
/// are not on disk.
Dataset synth_digits(std::uint64_t seed, std::size_t n);

/// One target class per sample, uniform over labels != the true label.
std::vector<int> sample_targets(const std::vector<Sample>& samples, int num_classes, Rng& rng);

/// Per-class feature means.
std::vector<Vec> class_means(const Dataset& data);

}  // namespace gem

#endif  // GEM_DATASET_HPP
