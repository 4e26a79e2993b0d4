#include "visreg/visualize.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "visreg/rng.hpp"
#include "visreg/visloss.hpp"

namespace visreg {

namespace {

constexpr uint64_t kAscentStream = 0x41534345ULL;

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::vector<Matrix2D> reshape_channels(std::span<const double> flat, Shape3 shape) {
  std::vector<Matrix2D> out;
  const int plane = shape.h * shape.w;
  out.reserve(shape.c);
  for (int c = 0; c < shape.c; ++c) {
    out.emplace_back(shape.h, shape.w,
                     std::vector<double>(flat.begin() + static_cast<size_t>(c) * plane,
                                         flat.begin() + static_cast<size_t>(c + 1) * plane));
  }
  return out;
}

}  // namespace

std::vector<Matrix2D> vis_first_layer(const NetworkModel& model, int node_index) {
  if (model.layers().empty() || model.layers().front().kind != LayerKind::dense) {
    throw std::invalid_argument("vis_first_layer: first layer is not dense");
  }
  const int units = model.layers().front().units;
  if (node_index < 0 || node_index >= units) {
    throw std::invalid_argument("vis_first_layer: node " + std::to_string(node_index) +
                                " out of range for width " + std::to_string(units));
  }
  const Shape3 in = model.input_shape();
  const int fan_in = in.count();
  const double* row = model.params().front().w.data() +
                      static_cast<size_t>(node_index) * fan_in;
  const double norm = l2_norm({row, static_cast<size_t>(fan_in)});
  if (norm == 0.0) {
    throw std::invalid_argument("vis_first_layer: node " + std::to_string(node_index) +
                                " has a zero weight vector, visualization undefined");
  }
  std::vector<double> unit(fan_in);
  for (int i = 0; i < fan_in; ++i) unit[i] = row[i] / norm;
  return reshape_channels(unit, in);
}

MaximizeResult activation_maximize(const NetworkModel& model, int layer, int node,
                                   int steps, double step_size, uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("activation_maximize: steps must be >= 1");
  const int n = model.input_shape().count();
  Rng rng(mix_seed(seed, kAscentStream));
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  double norm = l2_norm(x);
  if (norm == 0.0) x[0] = norm = 1.0;
  for (double& v : x) v /= norm;

  constexpr double kImproveEps = 1e-9;
  constexpr int kPatience = 10;
  double best = -std::numeric_limits<double>::infinity();
  int stale = 0;
  MaximizeResult res;
  for (int step = 0; step < steps; ++step) {
    const NodeGradient ng = node_input_gradient(model, x, layer, node);
    if (!std::isfinite(ng.activation)) {
      throw std::runtime_error("activation_maximize: non-finite activation at step " +
                               std::to_string(step));
    }
    res.activation = ng.activation;
    res.steps_taken = step + 1;
    if (ng.activation > best + kImproveEps) {
      best = ng.activation;
      stale = 0;
    } else if (++stale >= kPatience) {
      break;
    }
    for (int i = 0; i < n; ++i) x[i] += step_size * ng.grad[i];
    norm = l2_norm(x);
    if (norm == 0.0) break;  // gradient cancelled the iterate; keep the last point
    for (double& v : x) v /= norm;
  }
  res.activation = node_input_gradient(model, x, layer, node).activation;
  res.input = std::move(x);
  res.channels = reshape_channels(res.input, model.input_shape());
  return res;
}

namespace {

std::vector<uint8_t> to_gray_bytes(const Matrix2D& img) {
  auto vals = img.values();
  const auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
  const double mn = *mn_it;
  const double mx = *mx_it;
  std::vector<uint8_t> bytes(vals.size());
  if (mx - mn < 1e-300) {
    std::fill(bytes.begin(), bytes.end(), uint8_t{128});
  } else {
    const double scale = 255.0 / (mx - mn);
    for (size_t i = 0; i < vals.size(); ++i) {
      bytes[i] = static_cast<uint8_t>(std::lround((vals[i] - mn) * scale));
    }
  }
  return bytes;
}

void write_pgm(const Matrix2D& img, const std::string& path) {
  const std::vector<uint8_t> bytes = to_gray_bytes(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_image: cannot open " + path);
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!out) throw std::runtime_error("export_image: write failed for " + path);
}

void png_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& payload) {
  const uint32_t len = static_cast<uint32_t>(payload.size());
  const uint8_t lenb[4] = {uint8_t(len >> 24), uint8_t(len >> 16), uint8_t(len >> 8),
                           uint8_t(len)};
  out.write(reinterpret_cast<const char*>(lenb), 4);
  out.write(type, 4);
  if (!payload.empty()) out.write(reinterpret_cast<const char*>(payload.data()), payload.size());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!payload.empty()) crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
  const uint8_t crcb[4] = {uint8_t(crc >> 24), uint8_t(crc >> 16), uint8_t(crc >> 8),
                           uint8_t(crc)};
  out.write(reinterpret_cast<const char*>(crcb), 4);
}

void write_png(const Matrix2D& img, const std::string& path) {
  const std::vector<uint8_t> bytes = to_gray_bytes(img);
  const uint32_t w = static_cast<uint32_t>(img.cols());
  const uint32_t h = static_cast<uint32_t>(img.rows());

  // Raw scanlines, each prefixed with filter type 0.
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h) * (w + 1));
  for (uint32_t r = 0; r < h; ++r) {
    raw.push_back(0);
    raw.insert(raw.end(), bytes.begin() + static_cast<size_t>(r) * w,
               bytes.begin() + static_cast<size_t>(r + 1) * w);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw std::runtime_error("export_image: zlib compression failed for " + path);
  }
  comp.resize(comp_len);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_image: cannot open " + path);
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);
  std::vector<uint8_t> ihdr = {uint8_t(w >> 24), uint8_t(w >> 16), uint8_t(w >> 8), uint8_t(w),
                               uint8_t(h >> 24), uint8_t(h >> 16), uint8_t(h >> 8), uint8_t(h),
                               8,   // bit depth
                               0,   // grayscale
                               0, 0, 0};
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", comp);
  png_chunk(out, "IEND", {});
  if (!out) throw std::runtime_error("export_image: write failed for " + path);
}

}  // namespace

void export_image(const Matrix2D& img, const std::string& path, ImageFormat format) {
  if (format == ImageFormat::pgm) {
    write_pgm(img, path);
  } else {
    write_png(img, path);
  }
}

Matrix2D read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || w < 1 || h < 1) {
    throw std::runtime_error("read_pgm: " + path + " is not an 8-bit binary PGM");
  }
  in.get();  // single whitespace after the header
  std::vector<uint8_t> bytes(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("read_pgm: truncated pixel data in " + path);
  std::vector<double> vals(bytes.size());
  for (size_t i = 0; i < bytes.size(); ++i) vals[i] = bytes[i];
  return Matrix2D(h, w, std::move(vals));
}

std::vector<LossRow> loss_table(const std::vector<std::pair<std::string, Matrix2D>>& images,
                                const RelKernel& ker) {
  if (images.empty()) throw std::invalid_argument("loss_table: no images");
  std::vector<LossRow> rows;
  rows.reserve(images.size());
  for (const auto& [id, img] : images) {
    rows.push_back({id, vl1(img, ker), vl2(img, ker)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const LossRow& a, const LossRow& b) { return a.vl2 > b.vl2; });
  return rows;
}

void write_loss_csv(const std::vector<LossRow>& rows, std::ostream& out) {
  out << "image,vl1,vl2\n";
  char buf[96];
  for (const LossRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", r.id.c_str(), r.vl1, r.vl2);
    out << buf;
  }
}

void write_loss_text(const std::vector<LossRow>& rows, std::ostream& out) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-24s %14s %14s\n", "image", "VL1", "VL2");
  out << buf;
  for (const LossRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-24s %14.4f %14.4f\n", r.id.c_str(), r.vl1, r.vl2);
    out << buf;
  }
}

}  // namespace visreg
