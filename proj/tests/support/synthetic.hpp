#pragma once

// Deterministic synthetic datasets for tests: smooth per-class blob templates
// plus pixel noise, byte-quantized so IDX round-trips are exact.

#include <algorithm>
#include <cmath>
#include <vector>

#include "visreg/data.hpp"
#include "visreg/matrix.hpp"
#include "visreg/rng.hpp"

namespace visreg::testsupport {

inline Matrix2D gaussian_blob(Rng& rng, int side, int bumps = 1) {
  Matrix2D img(side, side);
  for (int b = 0; b < bumps; ++b) {
    const double cx = rng.uniform(side * 0.2, side * 0.8);
    const double cy = rng.uniform(side * 0.2, side * 0.8);
    const double sigma = rng.uniform(side * 0.08, side * 0.18);
    const double amp = rng.uniform(0.6, 1.0);
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
        img(r, c) += amp * std::exp(-d2 / (2.0 * sigma * sigma));
      }
    }
  }
  double mx = 0.0;
  for (double v : img.values()) mx = std::max(mx, v);
  if (mx > 0.0) {
    for (double& v : img.values()) v = std::min(v / mx, 1.0);
  }
  return img;
}

inline Matrix2D white_noise(Rng& rng, int side) {
  Matrix2D img(side, side);
  for (double& v : img.values()) v = rng.uniform(0.0, 1.0);
  return img;
}

namespace detail {

inline Dataset sample_from_templates(Rng& rng, const std::vector<Matrix2D>& templates,
                                     int samples, int side) {
  Dataset ds;
  ds.shape = Shape3{side, side, 1};
  ds.num_classes = static_cast<int>(templates.size());
  ds.pixels.reserve(static_cast<size_t>(samples) * side * side);
  ds.labels.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const int y = i % ds.num_classes;
    ds.labels.push_back(y);
    for (double t : templates[y].values()) {
      const double v = std::clamp(0.55 * t + 0.45 * rng.uniform(0.0, 1.0), 0.0, 1.0);
      ds.pixels.push_back(std::round(v * 255.0) / 255.0);  // byte grid
    }
  }
  return ds;
}

}  // namespace detail

/// Labeled set: one smooth multi-bump template per class, samples are
/// template + uniform noise, quantized to the byte grid used by the IDX format.
inline Dataset make_blob_dataset(uint64_t seed, int samples, int side = 28,
                                 int classes = 10) {
  Rng rng(seed);
  std::vector<Matrix2D> templates;
  templates.reserve(classes);
  for (int k = 0; k < classes; ++k) templates.push_back(gaussian_blob(rng, side, 3));
  return detail::sample_from_templates(rng, templates, samples, side);
}

struct BlobSplits {
  Dataset train;
  Dataset test;
};

/// Train and test splits drawn from the SAME class templates (independent
/// noise), so held-out accuracy is meaningful.
inline BlobSplits make_blob_splits(uint64_t seed, int train_samples, int test_samples,
                                   int side = 28, int classes = 10) {
  Rng rng(seed);
  std::vector<Matrix2D> templates;
  templates.reserve(classes);
  for (int k = 0; k < classes; ++k) templates.push_back(gaussian_blob(rng, side, 3));
  BlobSplits out;
  out.train = detail::sample_from_templates(rng, templates, train_samples, side);
  out.test = detail::sample_from_templates(rng, templates, test_samples, side);
  out.train.split = "train";
  out.test.split = "test";
  return out;
}

/// Random byte-grid dataset of arbitrary shape (round-trip tests).
inline Dataset make_random_dataset(uint64_t seed, int samples, Shape3 shape,
                                   int classes = 10) {
  Rng rng(seed);
  Dataset ds;
  ds.shape = shape;
  ds.num_classes = classes;
  const int per = shape.count();
  ds.pixels.reserve(static_cast<size_t>(samples) * per);
  for (int i = 0; i < samples; ++i) {
    ds.labels.push_back(rng.uniform_int(classes));
    for (int j = 0; j < per; ++j) {
      ds.pixels.push_back(rng.uniform_int(256) / 255.0);
    }
  }
  return ds;
}

}  // namespace visreg::testsupport
