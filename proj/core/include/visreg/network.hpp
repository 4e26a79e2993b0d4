#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "visreg/kernel.hpp"
#include "visreg/rng.hpp"
#include "visreg/tikhonov.hpp"
#include "visreg/visloss.hpp"

namespace visreg {

enum class Activation : uint8_t { relu, sigmoid, tanh_fn, none };
enum class LayerKind : uint8_t { dense, conv, maxpool, dropout, softmax_output };
enum class ConvPad : uint8_t { valid, same };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int units = 0;        // dense, softmax_output
  int ksize = 0;        // conv
  int channels = 0;     // conv output channels
  ConvPad pad = ConvPad::valid;
  int pool = 0;         // maxpool window (stride = window)
  double drop_p = 0.0;  // dropout probability
  Activation act = Activation::none;

  static LayerSpec dense(int n, Activation a = Activation::relu);
  static LayerSpec conv(int s, int c, Activation a = Activation::relu,
                        ConvPad p = ConvPad::valid);
  static LayerSpec maxpool(int s);
  static LayerSpec dropout(double p);
  static LayerSpec softmax_output(int n);

  bool operator==(const LayerSpec&) const = default;
};

/// Spatial shape carried between layers; dense activations use {1, 1, n}.
/// Data layout is channel-planar: index = c*h*w + y*w + x.
struct Shape3 {
  int h = 1;
  int w = 1;
  int c = 1;
  int count() const { return h * w * c; }
  bool operator==(const Shape3&) const = default;
};

struct ParamTensor {
  std::vector<double> w;
  std::vector<double> b;
};

struct Batch {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  size_t size() const { return inputs.size(); }
};

enum class RunMode { train, eval };

/// Feed-forward stack with one designated dense layer whose incoming weights
/// receive the visualization regularizer, reshaped per input channel into
/// spatial slabs.
class NetworkModel {
public:
  /// vr_layer = kAutoVr picks the first dense layer after the last conv
  /// (the first dense layer overall when there is no conv); kNoVr disables VR.
  static constexpr int kAutoVr = -2;
  static constexpr int kNoVr = -1;

  NetworkModel(Shape3 input, std::vector<LayerSpec> layers, uint64_t seed,
               int vr_layer = kAutoVr);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  Shape3 input_shape() const { return shapes_.front(); }
  Shape3 output_shape() const { return shapes_.back(); }
  Shape3 layer_input_shape(int li) const { return shapes_[li]; }
  Shape3 layer_output_shape(int li) const { return shapes_[li + 1]; }

  int vr_layer() const { return vr_layer_; }
  bool has_vr_layer() const { return vr_layer_ >= 0; }
  /// Geometry of the VR slabs; throws when the model has no VR layer.
  SlabGeometry vr_slab_geometry() const;
  /// Copies the VR layer's incoming weights into per-(node, channel) slabs.
  VRWeights vr_weights() const;

  const std::vector<ParamTensor>& params() const { return params_; }
  /// Mutable access marks the parameters as updated (invalidates forward caches).
  std::vector<ParamTensor>& mutable_params() {
    ++revision_;
    return params_;
  }
  uint64_t revision() const { return revision_; }

  size_t param_count() const;
  std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> values);

private:
  void validate_and_shape();
  void init_params(uint64_t seed);
  int resolve_vr_layer(int requested) const;

  Shape3 input_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape3> shapes_;  // shapes_[i] = input of layer i; back() = output
  std::vector<ParamTensor> params_;
  int vr_layer_ = kNoVr;
  uint64_t revision_ = 0;

  friend NetworkModel load_model(const std::string& path);
};

/// Per-sample per-layer records needed by backward.
struct LayerCache {
  std::vector<double> in;    // dense/conv input
  std::vector<double> pre;   // pre-activation
  std::vector<uint8_t> mask; // dropout keep mask (train mode)
  std::vector<int> argmax;   // maxpool winner indices (flat, input coords)
};

struct ForwardCache {
  RunMode mode = RunMode::eval;
  uint64_t revision = 0;
  std::vector<std::vector<LayerCache>> samples;  // [sample][layer]
  std::vector<std::vector<double>> outputs;      // final activations per sample
};

/// Runs the batch through the model, recording activations for backward.
/// Train mode samples dropout masks from rng (required when the model has
/// dropout layers); eval mode scales dropout activations by (1 - p).
/// Throws std::invalid_argument on shape mismatch, naming the offending layer.
ForwardCache forward(const NetworkModel& model, const Batch& batch, RunMode mode,
                     Rng* rng = nullptr);

/// Output activations only (eval mode, no cache); cheaper for evaluation.
std::vector<std::vector<double>> predict(const NetworkModel& model, const Batch& batch);

/// Mean over the batch of -log(probability of the true class); probabilities
/// are clamped to [1e-12, 1] before the log.
double class_loss(const std::vector<std::vector<double>>& outputs,
                  std::span<const int> labels);

/// Sum of squared weights of every layer except the VR layer's incoming
/// weights; biases excluded.
double l2_prime(const NetworkModel& model);

/// class_loss + mu1*VL1(M) + mu2*VL2(M) + lambda*L2'(M), evaluated in eval mode.
double total_loss(const NetworkModel& model, const Batch& batch, const RelKernel& ker,
                  double mu1, double mu2, double lambda);

struct GradStore {
  std::vector<ParamTensor> layers;
};

/// Gradient of the composite training loss with respect to every parameter.
/// The classification term is backpropagated through the recorded activations;
/// the L2' term adds lambda * 2w to non-VR weights; the VR terms contribute
/// only to the VR layer's incoming weights, slab by slab.
/// Requires a train-mode cache produced by the current parameters
/// (throws std::logic_error on a stale cache).
GradStore backward(const NetworkModel& model, const Batch& batch,
                   const ForwardCache& cache, const RelKernel& ker,
                   double mu1, double mu2, double lambda);

struct NodeGradient {
  double activation = 0.0;
  std::vector<double> grad;  // d(activation) / d(input)
};

/// Activation of one node (flat index into the layer's output) and its
/// gradient with respect to the network input, eval mode. For the softmax
/// output layer the node's pre-softmax logit is used.
NodeGradient node_input_gradient(const NetworkModel& model,
                                 std::span<const double> input, int layer, int node);

/// Versioned little-endian binary checkpoint; load(save(m)) reproduces the
/// model exactly, parameters bit for bit.
void save_model(const NetworkModel& model, const std::string& path);
NetworkModel load_model(const std::string& path);

}  // namespace visreg
