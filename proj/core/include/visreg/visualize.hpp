#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "visreg/kernel.hpp"
#include "visreg/matrix.hpp"
#include "visreg/network.hpp"

namespace visreg {

/// Unit-norm reshaping of one first-hidden-layer node's incoming weights,
/// one matrix per input channel, normalized jointly so the concatenated
/// stack has L2 norm 1. The first layer must be dense; a zero weight vector
/// is rejected (the visualization is undefined).
std::vector<Matrix2D> vis_first_layer(const NetworkModel& model, int node_index);

struct MaximizeResult {
  std::vector<double> input;       // unit L2 norm
  std::vector<Matrix2D> channels;  // the same values reshaped to input geometry
  double activation = 0.0;
  int steps_taken = 0;
};

/// Projected gradient ascent on the input sphere: x <- normalize(x + eta * dn/dx),
/// from a seeded random unit start. Stops early once the activation improves by
/// less than 1e-9 over 10 steps. Throws on a non-finite activation, naming the step.
MaximizeResult activation_maximize(const NetworkModel& model, int layer, int node,
                                   int steps, double step_size, uint64_t seed);

enum class ImageFormat { pgm, png };

/// 8-bit grayscale export, min-max scaled to [0, 255]; a constant image maps
/// to mid-gray 128. PGM is binary P5; PNG is a minimal zlib-backed encoder.
void export_image(const Matrix2D& img, const std::string& path, ImageFormat format);

/// Reads back a binary P5 PGM (test support for round-trips).
Matrix2D read_pgm(const std::string& path);

struct LossRow {
  std::string id;
  double vl1 = 0.0;
  double vl2 = 0.0;
};

/// Per-image high-pass losses, sorted by descending vl2.
std::vector<LossRow> loss_table(const std::vector<std::pair<std::string, Matrix2D>>& images,
                                const RelKernel& ker);

void write_loss_csv(const std::vector<LossRow>& rows, std::ostream& out);
void write_loss_text(const std::vector<LossRow>& rows, std::ostream& out);

}  // namespace visreg
