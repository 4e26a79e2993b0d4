#include "visreg/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "visreg/rng.hpp"

namespace visreg {

namespace {

constexpr uint32_t kIdxImagesMagic = 2051;
constexpr uint32_t kIdxLabelsMagic = 2049;
constexpr size_t kCifarRecord = 3073;  // 1 label byte + 3 * 32 * 32 pixels
constexpr uint64_t kShuffleStream = 0x53484641ULL;

/// Whole-file read through zlib's gz layer; plain files pass through unchanged.
std::vector<uint8_t> read_all(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<uint8_t> data;
  uint8_t buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) {
    data.insert(data.end(), buf, buf + n);
  }
  const bool ok = n == 0;
  gzclose(f);
  if (!ok) throw std::runtime_error("read error in " + path);
  return data;
}

uint32_t read_be32(const std::vector<uint8_t>& d, size_t off) {
  return (uint32_t(d[off]) << 24) | (uint32_t(d[off + 1]) << 16) |
         (uint32_t(d[off + 2]) << 8) | uint32_t(d[off + 3]);
}

void write_be32(std::ofstream& out, uint32_t v) {
  const uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void check_size(const std::string& path, size_t expected, size_t actual) {
  if (actual < expected) {
    throw std::runtime_error(path + ": truncated, expected " + std::to_string(expected) +
                             " bytes, got " + std::to_string(actual));
  }
}

uint8_t quantize(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Matrix2D Dataset::channel(size_t i, int c) const {
  const int plane = shape.h * shape.w;
  const double* base = pixels.data() + i * shape.count() + static_cast<size_t>(c) * plane;
  return Matrix2D(shape.h, shape.w, std::vector<double>(base, base + plane));
}

Dataset load_mnist(const std::string& images_path, const std::string& labels_path) {
  const std::vector<uint8_t> img = read_all(images_path);
  check_size(images_path, 16, img.size());
  const uint32_t img_magic = read_be32(img, 0);
  if (img_magic != kIdxImagesMagic) {
    throw std::runtime_error(images_path + ": bad IDX image magic " + std::to_string(img_magic) +
                             ", expected " + std::to_string(kIdxImagesMagic));
  }
  const uint32_t count = read_be32(img, 4);
  const uint32_t rows = read_be32(img, 8);
  const uint32_t cols = read_be32(img, 12);
  check_size(images_path, 16 + size_t(count) * rows * cols, img.size());

  const std::vector<uint8_t> lab = read_all(labels_path);
  check_size(labels_path, 8, lab.size());
  const uint32_t lab_magic = read_be32(lab, 0);
  if (lab_magic != kIdxLabelsMagic) {
    throw std::runtime_error(labels_path + ": bad IDX label magic " + std::to_string(lab_magic) +
                             ", expected " + std::to_string(kIdxLabelsMagic));
  }
  const uint32_t lab_count = read_be32(lab, 4);
  if (lab_count != count) {
    throw std::runtime_error("image count " + std::to_string(count) + " in " + images_path +
                             " does not match label count " + std::to_string(lab_count) +
                             " in " + labels_path);
  }
  check_size(labels_path, 8 + size_t(count), lab.size());

  Dataset ds;
  ds.shape = Shape3{static_cast<int>(rows), static_cast<int>(cols), 1};
  ds.pixels.resize(size_t(count) * rows * cols);
  for (size_t i = 0; i < ds.pixels.size(); ++i) {
    ds.pixels[i] = img[16 + i] / 255.0;
  }
  ds.labels.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    const int y = lab[8 + i];
    if (y > 9) throw std::runtime_error(labels_path + ": label " + std::to_string(y) + " > 9");
    ds.labels[i] = y;
  }
  return ds;
}

Dataset load_cifar10(const std::vector<std::string>& batch_paths) {
  if (batch_paths.empty()) throw std::invalid_argument("load_cifar10: no batch files given");
  Dataset ds;
  ds.shape = Shape3{32, 32, 3};
  for (const std::string& path : batch_paths) {
    const std::vector<uint8_t> data = read_all(path);
    if (data.size() % kCifarRecord != 0) {
      throw std::runtime_error(path + ": length " + std::to_string(data.size()) +
                               " is not a multiple of the " + std::to_string(kCifarRecord) +
                               "-byte record size");
    }
    const size_t n = data.size() / kCifarRecord;
    for (size_t r = 0; r < n; ++r) {
      const uint8_t* rec = data.data() + r * kCifarRecord;
      const int y = rec[0];
      if (y > 9) throw std::runtime_error(path + ": label " + std::to_string(y) + " > 9");
      ds.labels.push_back(y);
      for (size_t i = 1; i < kCifarRecord; ++i) {
        ds.pixels.push_back(rec[i] / 255.0);
      }
    }
  }
  return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path,
               const std::string& labels_path) {
  if (ds.shape.c != 1) throw std::invalid_argument("write_idx: IDX images are single-channel");
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open " + images_path + " for writing");
  write_be32(img, kIdxImagesMagic);
  write_be32(img, static_cast<uint32_t>(ds.size()));
  write_be32(img, static_cast<uint32_t>(ds.shape.h));
  write_be32(img, static_cast<uint32_t>(ds.shape.w));
  for (double v : ds.pixels) {
    const uint8_t b = quantize(v);
    img.write(reinterpret_cast<const char*>(&b), 1);
  }
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open " + labels_path + " for writing");
  write_be32(lab, kIdxLabelsMagic);
  write_be32(lab, static_cast<uint32_t>(ds.size()));
  for (int y : ds.labels) {
    const uint8_t b = static_cast<uint8_t>(y);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!img || !lab) throw std::runtime_error("write_idx: write failed");
}

void write_cifar10(const Dataset& ds, const std::string& batch_path) {
  if (ds.shape.c != 3 || ds.shape.h != 32 || ds.shape.w != 32) {
    throw std::invalid_argument("write_cifar10: dataset is not 32x32x3");
  }
  std::ofstream out(batch_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + batch_path + " for writing");
  const int per = ds.shape.count();
  for (size_t i = 0; i < ds.size(); ++i) {
    const uint8_t y = static_cast<uint8_t>(ds.labels[i]);
    out.write(reinterpret_cast<const char*>(&y), 1);
    const double* px = ds.pixels.data() + i * per;
    for (int j = 0; j < per; ++j) {
      const uint8_t b = quantize(px[j]);
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
  if (!out) throw std::runtime_error("write_cifar10: write failed");
}

std::vector<std::vector<int>> minibatches(const Dataset& ds, int batch_size,
                                          uint64_t seed, int epoch) {
  if (batch_size < 1) throw std::invalid_argument("minibatches: batch_size must be >= 1");
  std::vector<int> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, kShuffleStream + static_cast<uint64_t>(epoch)));
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (size_t off = 0; off < order.size(); off += batch_size) {
    const size_t end = std::min(order.size(), off + batch_size);
    batches.emplace_back(order.begin() + off, order.begin() + end);
  }
  return batches;
}

Batch make_batch(const Dataset& ds, std::span<const int> indices) {
  Batch b;
  b.inputs.reserve(indices.size());
  b.labels.reserve(indices.size());
  for (int i : indices) {
    auto px = ds.sample(static_cast<size_t>(i));
    b.inputs.emplace_back(px.begin(), px.end());
    b.labels.push_back(ds.labels[static_cast<size_t>(i)]);
  }
  return b;
}

void standardize(Dataset& ds) {
  const int plane = ds.shape.h * ds.shape.w;
  const size_t per = static_cast<size_t>(ds.shape.count());
  for (int c = 0; c < ds.shape.c; ++c) {
    double sum = 0.0, sq = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < ds.size(); ++i) {
      const double* base = ds.pixels.data() + i * per + static_cast<size_t>(c) * plane;
      for (int j = 0; j < plane; ++j) {
        sum += base[j];
        sq += base[j] * base[j];
        ++n;
      }
    }
    const double mean = sum / n;
    const double var = std::max(sq / n - mean * mean, 1e-12);
    const double inv_sd = 1.0 / std::sqrt(var);
    for (size_t i = 0; i < ds.size(); ++i) {
      double* base = ds.pixels.data() + i * per + static_cast<size_t>(c) * plane;
      for (int j = 0; j < plane; ++j) base[j] = (base[j] - mean) * inv_sd;
    }
  }
}

Dataset truncate(const Dataset& ds, size_t n) {
  Dataset out = ds;
  if (n >= ds.size()) return out;
  out.labels.resize(n);
  out.pixels.resize(n * static_cast<size_t>(ds.shape.count()));
  return out;
}

}  // namespace visreg
