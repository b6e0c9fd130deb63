#include "gem/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "gem/errors.hpp"

namespace gem {

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path, std::size_t offset) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(path + ": truncated at offset " + std::to_string(offset));
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  const std::array<unsigned char, 4> b{static_cast<unsigned char>(v >> 24),
                                       static_cast<unsigned char>(v >> 16),
                                       static_cast<unsigned char>(v >> 8),
                                       static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

}  // namespace

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  Dataset out = *this;
  out.samples.assign(samples.begin() + begin, samples.begin() + begin + count);
  return out;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError(images_path + ": cannot open");
  const std::uint32_t img_magic = read_u32_be(img, images_path, 0);
  if (img_magic != 0x00000803) {
    throw FormatError(images_path + ": bad magic at offset 0 (expected 0x00000803)");
  }
  const std::uint32_t count = read_u32_be(img, images_path, 4);
  const std::uint32_t rows = read_u32_be(img, images_path, 8);
  const std::uint32_t cols = read_u32_be(img, images_path, 12);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError(labels_path + ": cannot open");
  const std::uint32_t lab_magic = read_u32_be(lab, labels_path, 0);
  if (lab_magic != 0x00000801) {
    throw FormatError(labels_path + ": bad magic at offset 0 (expected 0x00000801)");
  }
  const std::uint32_t lab_count = read_u32_be(lab, labels_path, 4);
  if (lab_count != count) {
    throw FormatError(labels_path + ": label count " + std::to_string(lab_count) +
                      " does not match image count " + std::to_string(count));
  }

  const std::size_t dim = std::size_t(rows) * cols;
  Dataset data;
  data.input_dim = dim;
  data.num_classes = 10;
  data.lo = 0.0;
  data.hi = 1.0;
  data.name = "mnist";
  data.samples.resize(count);

  std::vector<unsigned char> buf(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim))) {
      throw FormatError(images_path + ": truncated at offset " +
                        std::to_string(16 + std::size_t(i) * dim));
    }
    Vec x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = buf[j] / 255.0;
    char lbl = 0;
    if (!lab.read(&lbl, 1)) {
      throw FormatError(labels_path + ": truncated at offset " + std::to_string(8 + i));
    }
    data.samples[i] = {std::move(x), static_cast<unsigned char>(lbl)};
  }
  return data;
}

void write_mnist_idx(const Dataset& data, const std::string& images_path,
                     const std::string& labels_path, std::size_t rows, std::size_t cols) {
  if (rows * cols != data.input_dim) {
    throw ArgumentError("write_mnist_idx: rows * cols != input_dim");
  }
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw FormatError(images_path + ": cannot open for writing");
  write_u32_be(img, 0x00000803);
  write_u32_be(img, static_cast<std::uint32_t>(data.size()));
  write_u32_be(img, static_cast<std::uint32_t>(rows));
  write_u32_be(img, static_cast<std::uint32_t>(cols));
  std::vector<unsigned char> buf(data.input_dim);
  for (const Sample& s : data.samples) {
    for (std::size_t j = 0; j < data.input_dim; ++j) {
      const double q = std::round(std::clamp(s.x[j], 0.0, 1.0) * 255.0);
      buf[j] = static_cast<unsigned char>(q);
    }
    img.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(data.input_dim));
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError(labels_path + ": cannot open for writing");
  write_u32_be(lab, 0x00000801);
  write_u32_be(lab, static_cast<std::uint32_t>(data.size()));
  for (const Sample& s : data.samples) {
    const char b = static_cast<char>(s.label);
    lab.write(&b, 1);
  }
}

Dataset synth_blobs(std::uint64_t seed, std::size_t n, std::size_t d, int num_classes,
                    double spread) {
  if (num_classes < 2) throw ArgumentError("synth_blobs: need at least 2 classes");
  Rng rng(seed);
  std::vector<Vec> means(num_classes, Vec(d));
  for (auto& m : means)
    for (auto& v : m) v = rng.uniform(0.15, 0.85);

  Dataset data;
  data.input_dim = d;
  data.num_classes = num_classes;
  data.lo = 0.0;
  data.hi = 1.0;
  data.name = "blobs";
  data.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % num_classes);
    Vec x(d);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = std::clamp(means[label][j] + spread * rng.normal(), 0.0, 1.0);
    }
    data.samples[i] = {std::move(x), label};
  }
  return data;
}

namespace {

struct Segment {
  double x0, y0, x1, y1;
};

// Seven-segment layout in the unit square:
//   A top, B upper-right, C lower-right, D bottom, E lower-left, F upper-left,
//   G middle.
constexpr std::array<Segment, 7> kSegments = {{
    {0.25, 0.18, 0.75, 0.18},  // A
    {0.75, 0.18, 0.75, 0.50},  // B
    {0.75, 0.50, 0.75, 0.82},  // C
    {0.25, 0.82, 0.75, 0.82},  // D
    {0.25, 0.50, 0.25, 0.82},  // E
    {0.25, 0.18, 0.25, 0.50},  // F
    {0.25, 0.50, 0.75, 0.50},  // G
}};

constexpr std::array<unsigned, 10> kDigitMask = {
    0b0111111,  // 0: ABCDEF
    0b0000110,  // 1: BC
    0b1011011,  // 2: ABDEG
    0b1001111,  // 3: ABCDG
    0b1100110,  // 4: BCFG
    0b1101101,  // 5: ACDFG
    0b1111101,  // 6: ACDEFG
    0b0000111,  // 7: ABC
    0b1111111,  // 8: all
    0b1101111,  // 9: ABCDFG
};

double point_segment_dist(double px, double py, const Segment& s) {
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = s.x0 + t * dx, qy = s.y0 + t * dy;
  return std::hypot(px - qx, py - qy);
}

}  // namespace

Dataset synth_digits(std::uint64_t seed, std::size_t n) {
  constexpr std::size_t kGrid = 28;
  Rng rng(seed);

  Dataset data;
  data.input_dim = kGrid * kGrid;
  data.num_classes = 10;
  data.lo = 0.0;
  data.hi = 1.0;
  data.name = "synth-digits";
  data.samples.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 10);

    // Per-sample affine jitter applied to the stroke control points.
    const double angle = rng.uniform(-0.22, 0.22);
    const double scale = rng.uniform(0.80, 1.10);
    const double shear = rng.uniform(-0.15, 0.15);
    const double tx = rng.uniform(-0.10, 0.10);
    const double ty = rng.uniform(-0.10, 0.10);
    const double width = rng.uniform(0.045, 0.075);
    const double ink = rng.uniform(0.75, 1.0);
    const double ca = std::cos(angle), sa = std::sin(angle);

    auto warp = [&](double x, double y, double& ox, double& oy) {
      const double cx = x - 0.5, cy = y - 0.5;
      const double wx = scale * (ca * cx - sa * cy) + shear * cy;
      const double wy = scale * (sa * cx + ca * cy);
      ox = wx + 0.5 + tx;
      oy = wy + 0.5 + ty;
    };

    std::vector<Segment> strokes;
    for (std::size_t s = 0; s < kSegments.size(); ++s) {
      if (!(kDigitMask[label] >> s & 1u)) continue;
      Segment seg{};
      warp(kSegments[s].x0, kSegments[s].y0, seg.x0, seg.y0);
      warp(kSegments[s].x1, kSegments[s].y1, seg.x1, seg.y1);
      strokes.push_back(seg);
    }

    Vec x(kGrid * kGrid);
    for (std::size_t r = 0; r < kGrid; ++r) {
      for (std::size_t c = 0; c < kGrid; ++c) {
        const double px = (c + 0.5) / kGrid;
        const double py = (r + 0.5) / kGrid;
        double dist = 1e9;
        for (const Segment& s : strokes) dist = std::min(dist, point_segment_dist(px, py, s));
        // Soft stroke edge about one pixel wide.
        const double edge = 0.036;
        double val = ink * std::clamp((width - dist) / edge + 0.5, 0.0, 1.0);
        val += 0.06 * rng.normal();
        x[r * kGrid + c] = std::clamp(val, 0.0, 1.0);
      }
    }
    data.samples[i] = {std::move(x), label};
  }
  return data;
}

std::vector<int> sample_targets(const std::vector<Sample>& samples, int num_classes, Rng& rng) {
  if (num_classes < 2) throw ArgumentError("sample_targets: need at least 2 classes");
  std::vector<int> targets(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int y = samples[i].label;
    int t = static_cast<int>(rng.uniform_index(num_classes - 1));
    if (t >= y) ++t;
    targets[i] = t;
  }
  return targets;
}

std::vector<Vec> class_means(const Dataset& data) {
  std::vector<Vec> means(data.num_classes, Vec(data.input_dim, 0.0));
  std::vector<std::size_t> counts(data.num_classes, 0);
  for (const Sample& s : data.samples) {
    for (std::size_t j = 0; j < data.input_dim; ++j) means[s.label][j] += s.x[j];
    ++counts[s.label];
  }
  for (int c = 0; c < data.num_classes; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : means[c]) v /= static_cast<double>(counts[c]);
  }
  return means;
}

}  // namespace gem
