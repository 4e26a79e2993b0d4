#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "visreg/matrix.hpp"
#include "visreg/network.hpp"

namespace visreg {

/// Labeled image set. Pixels are stored flat per sample in channel-planar
/// order (channel, then row, then column) and normalized to [0, 1] on load.
struct Dataset {
  Shape3 shape;
  std::vector<double> pixels;  // size() == count * shape.count()
  std::vector<int> labels;
  std::string split = "train";
  int num_classes = 10;

  size_t size() const { return labels.size(); }
  std::span<const double> sample(size_t i) const {
    const size_t n = static_cast<size_t>(shape.count());
    return {pixels.data() + i * n, n};
  }
  Matrix2D channel(size_t i, int c) const;
};

/// Reads the IDX image/label pair (big-endian magics 2051/2049, dimension
/// counts, then raw bytes); pixels are divided by 255. Accepts gzip-compressed
/// files transparently. Throws std::runtime_error on a wrong magic (reporting
/// the observed value), a truncated file (expected vs. actual byte count), or
/// mismatched image/label counts.
Dataset load_mnist(const std::string& images_path, const std::string& labels_path);

/// Reads CIFAR-10 binary batches: 3073-byte records of 1 label byte plus
/// 3x1024 channel-planar pixels. Accepts gzip input. Throws on a file whose
/// length is not a multiple of the record size.
Dataset load_cifar10(const std::vector<std::string>& batch_paths);

/// Writers for the same formats (plain, uncompressed); pixels are quantized
/// to bytes with round-to-nearest. Loading what was written reproduces a
/// byte-quantized dataset exactly.
void write_idx(const Dataset& ds, const std::string& images_path,
               const std::string& labels_path);
void write_cifar10(const Dataset& ds, const std::string& batch_path);

/// Deterministic minibatch index sequence for one epoch: a permutation of
/// [0, size) derived from (seed, epoch), cut into batches with the final
/// short batch included.
std::vector<std::vector<int>> minibatches(const Dataset& ds, int batch_size,
                                          uint64_t seed, int epoch);

Batch make_batch(const Dataset& ds, std::span<const int> indices);

/// In-place per-channel standardization (mean 0, stddev 1 over the dataset).
/// Off the normal path; breaks the [0, 1] pixel range on purpose.
void standardize(Dataset& ds);

/// Keeps only the first n samples.
Dataset truncate(const Dataset& ds, size_t n);

}  // namespace visreg
