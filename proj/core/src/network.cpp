#include "visreg/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace visreg {

namespace {

std::string layer_label(int li, const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::dense:
      return "layer " + std::to_string(li) + " (fc " + std::to_string(spec.units) + ")";
    case LayerKind::conv:
      return "layer " + std::to_string(li) + " (conv " + std::to_string(spec.ksize) + "x" +
             std::to_string(spec.ksize) + ", " + std::to_string(spec.channels) + ")";
    case LayerKind::maxpool:
      return "layer " + std::to_string(li) + " (maxpool " + std::to_string(spec.pool) + "x" +
             std::to_string(spec.pool) + ")";
    case LayerKind::dropout:
      return "layer " + std::to_string(li) + " (dropout)";
    case LayerKind::softmax_output:
      return "layer " + std::to_string(li) + " (output " + std::to_string(spec.units) + ")";
  }
  return "layer " + std::to_string(li);
}

double activate(Activation a, double u) {
  switch (a) {
    case Activation::relu: return u > 0.0 ? u : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-u));
    case Activation::tanh_fn: return std::tanh(u);
    case Activation::none: return u;
  }
  return u;
}

double activate_deriv(Activation a, double u) {
  switch (a) {
    case Activation::relu: return u > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-u));
      return s * (1.0 - s);
    }
    case Activation::tanh_fn: {
      const double t = std::tanh(u);
      return 1.0 - t * t;
    }
    case Activation::none: return 1.0;
  }
  return 1.0;
}

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

void affine_forward(const ParamTensor& p, std::span<const double> x, int units,
                    std::vector<double>& u) {
  const int fan_in = static_cast<int>(x.size());
  u.resize(units);
  for (int n = 0; n < units; ++n) {
    const double* row = p.w.data() + static_cast<size_t>(n) * fan_in;
    double acc = p.b[n];
    for (int f = 0; f < fan_in; ++f) acc += row[f] * x[f];
    u[n] = acc;
  }
}

int conv_pad(const LayerSpec& spec) {
  return spec.pad == ConvPad::same ? (spec.ksize - 1) / 2 : 0;
}

void conv_forward(const LayerSpec& spec, const ParamTensor& p, Shape3 in, Shape3 out,
                  std::span<const double> x, std::vector<double>& u) {
  const int s = spec.ksize;
  const int pad = conv_pad(spec);
  u.assign(static_cast<size_t>(out.count()), 0.0);
  for (int co = 0; co < out.c; ++co) {
    const double* wbase = p.w.data() + static_cast<size_t>(co) * in.c * s * s;
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        double acc = p.b[co];
        for (int ci = 0; ci < in.c; ++ci) {
          const double* wk = wbase + static_cast<size_t>(ci) * s * s;
          const double* plane = x.data() + static_cast<size_t>(ci) * in.h * in.w;
          for (int ky = 0; ky < s; ++ky) {
            const int iy = oy + ky - pad;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < s; ++kx) {
              const int ix = ox + kx - pad;
              if (ix < 0 || ix >= in.w) continue;
              acc += wk[ky * s + kx] * plane[iy * in.w + ix];
            }
          }
        }
        u[(static_cast<size_t>(co) * out.h + oy) * out.w + ox] = acc;
      }
    }
  }
}

void maxpool_forward(const LayerSpec& spec, Shape3 in, Shape3 out,
                     std::span<const double> x, std::vector<double>& y,
                     std::vector<int>* argmax) {
  const int p = spec.pool;
  y.resize(out.count());
  if (argmax) argmax->resize(out.count());
  for (int c = 0; c < in.c; ++c) {
    const double* plane = x.data() + static_cast<size_t>(c) * in.h * in.w;
    for (int oy = 0; oy < out.h; ++oy) {
      const int y0 = oy * p;
      const int y1 = std::min(y0 + p, in.h);
      for (int ox = 0; ox < out.w; ++ox) {
        const int x0 = ox * p;
        const int x1 = std::min(x0 + p, in.w);
        int best = y0 * in.w + x0;
        double bv = plane[best];
        for (int iy = y0; iy < y1; ++iy) {
          for (int ix = x0; ix < x1; ++ix) {
            const int idx = iy * in.w + ix;
            if (plane[idx] > bv) {
              bv = plane[idx];
              best = idx;
            }
          }
        }
        const size_t o = (static_cast<size_t>(c) * out.h + oy) * out.w + ox;
        y[o] = bv;
        if (argmax) (*argmax)[o] = c * in.h * in.w + best;
      }
    }
  }
}

}  // namespace

LayerSpec LayerSpec::dense(int n, Activation a) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = n;
  s.act = a;
  return s;
}

LayerSpec LayerSpec::conv(int ks, int c, Activation a, ConvPad p) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.ksize = ks;
  s.channels = c;
  s.act = a;
  s.pad = p;
  return s;
}

LayerSpec LayerSpec::maxpool(int p) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.pool = p;
  return s;
}

LayerSpec LayerSpec::dropout(double p) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.drop_p = p;
  return s;
}

LayerSpec LayerSpec::softmax_output(int n) {
  LayerSpec s;
  s.kind = LayerKind::softmax_output;
  s.units = n;
  s.act = Activation::none;
  return s;
}

NetworkModel::NetworkModel(Shape3 input, std::vector<LayerSpec> layers, uint64_t seed,
                           int vr_layer)
    : input_(input), layers_(std::move(layers)) {
  validate_and_shape();
  vr_layer_ = resolve_vr_layer(vr_layer);
  init_params(seed);
}

void NetworkModel::validate_and_shape() {
  if (layers_.empty()) throw std::invalid_argument("NetworkModel: no layers");
  if (input_.h < 1 || input_.w < 1 || input_.c < 1) {
    throw std::invalid_argument("NetworkModel: input shape must be positive");
  }
  shapes_.clear();
  shapes_.push_back(input_);
  for (int li = 0; li < static_cast<int>(layers_.size()); ++li) {
    const LayerSpec& spec = layers_[li];
    const Shape3 in = shapes_.back();
    if (spec.kind == LayerKind::softmax_output && li + 1 != static_cast<int>(layers_.size())) {
      throw std::invalid_argument(layer_label(li, spec) + ": output layer must be last");
    }
    switch (spec.kind) {
      case LayerKind::dense:
      case LayerKind::softmax_output:
        if (spec.units < 1) {
          throw std::invalid_argument(layer_label(li, spec) + ": unit count must be positive");
        }
        shapes_.push_back({1, 1, spec.units});
        break;
      case LayerKind::conv: {
        if (spec.ksize < 1 || spec.channels < 1) {
          throw std::invalid_argument(layer_label(li, spec) + ": bad kernel size or channels");
        }
        if (spec.pad == ConvPad::same && spec.ksize % 2 == 0) {
          throw std::invalid_argument(layer_label(li, spec) +
                                      ": same padding requires odd kernel size");
        }
        Shape3 out;
        if (spec.pad == ConvPad::same) {
          out = {in.h, in.w, spec.channels};
        } else {
          out = {in.h - spec.ksize + 1, in.w - spec.ksize + 1, spec.channels};
          if (out.h < 1 || out.w < 1) {
            throw std::invalid_argument(layer_label(li, spec) + ": input " +
                                        std::to_string(in.h) + "x" + std::to_string(in.w) +
                                        " too small for valid convolution");
          }
        }
        shapes_.push_back(out);
        break;
      }
      case LayerKind::maxpool: {
        if (spec.pool < 1) {
          throw std::invalid_argument(layer_label(li, spec) + ": window must be positive");
        }
        shapes_.push_back({(in.h + spec.pool - 1) / spec.pool,
                           (in.w + spec.pool - 1) / spec.pool, in.c});
        break;
      }
      case LayerKind::dropout:
        if (spec.drop_p < 0.0 || spec.drop_p >= 1.0) {
          throw std::invalid_argument(layer_label(li, spec) +
                                      ": dropout probability must be in [0, 1)");
        }
        shapes_.push_back(in);
        break;
    }
  }
}

int NetworkModel::resolve_vr_layer(int requested) const {
  if (requested == kNoVr) return kNoVr;
  if (requested >= 0) {
    if (requested >= static_cast<int>(layers_.size()) ||
        layers_[requested].kind != LayerKind::dense) {
      throw std::invalid_argument("NetworkModel: vr_layer must be a dense layer index");
    }
    return requested;
  }
  int last_conv = -1;
  for (int li = 0; li < static_cast<int>(layers_.size()); ++li) {
    if (layers_[li].kind == LayerKind::conv) last_conv = li;
  }
  for (int li = last_conv + 1; li < static_cast<int>(layers_.size()); ++li) {
    if (layers_[li].kind == LayerKind::dense) return li;
  }
  return kNoVr;
}

void NetworkModel::init_params(uint64_t seed) {
  params_.resize(layers_.size());
  for (int li = 0; li < static_cast<int>(layers_.size()); ++li) {
    const LayerSpec& spec = layers_[li];
    ParamTensor& p = params_[li];
    int fan_in = 0;
    int fan_out = 0;
    size_t w_count = 0;
    size_t b_count = 0;
    if (spec.kind == LayerKind::dense || spec.kind == LayerKind::softmax_output) {
      fan_in = shapes_[li].count();
      fan_out = spec.units;
      w_count = static_cast<size_t>(spec.units) * fan_in;
      b_count = spec.units;
    } else if (spec.kind == LayerKind::conv) {
      fan_in = shapes_[li].c * spec.ksize * spec.ksize;
      fan_out = spec.channels * spec.ksize * spec.ksize;
      w_count = static_cast<size_t>(spec.channels) * shapes_[li].c * spec.ksize * spec.ksize;
      b_count = spec.channels;
    } else {
      continue;
    }
    Rng rng(mix_seed(seed, static_cast<uint64_t>(li)));
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    p.w.resize(w_count);
    for (double& v : p.w) v = rng.uniform(-bound, bound);
    p.b.assign(b_count, 0.0);
  }
}

SlabGeometry NetworkModel::vr_slab_geometry() const {
  if (!has_vr_layer()) {
    throw std::invalid_argument("NetworkModel: model has no VR-regularized layer");
  }
  const Shape3 in = shapes_[vr_layer_];
  return SlabGeometry{in.h, in.w, layers_[vr_layer_].units * in.c};
}

VRWeights NetworkModel::vr_weights() const {
  if (!has_vr_layer()) {
    throw std::invalid_argument("NetworkModel: model has no VR-regularized layer");
  }
  const Shape3 in = shapes_[vr_layer_];
  const int units = layers_[vr_layer_].units;
  const int plane = in.h * in.w;
  const std::vector<double>& w = params_[vr_layer_].w;
  VRWeights out;
  out.slabs.reserve(static_cast<size_t>(units) * in.c);
  for (int n = 0; n < units; ++n) {
    for (int c = 0; c < in.c; ++c) {
      const double* base = w.data() + static_cast<size_t>(n) * in.count() +
                           static_cast<size_t>(c) * plane;
      out.slabs.push_back(
          {n, c, Matrix2D(in.h, in.w, std::vector<double>(base, base + plane))});
    }
  }
  return out;
}

size_t NetworkModel::param_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += p.w.size() + p.b.size();
  return n;
}

std::vector<double> NetworkModel::flat_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& p : params_) {
    out.insert(out.end(), p.w.begin(), p.w.end());
    out.insert(out.end(), p.b.begin(), p.b.end());
  }
  return out;
}

void NetworkModel::set_flat_params(std::span<const double> values) {
  if (values.size() != param_count()) {
    throw std::invalid_argument("set_flat_params: expected " + std::to_string(param_count()) +
                                " values, got " + std::to_string(values.size()));
  }
  size_t off = 0;
  for (auto& p : params_) {
    std::copy_n(values.begin() + off, p.w.size(), p.w.begin());
    off += p.w.size();
    std::copy_n(values.begin() + off, p.b.size(), p.b.begin());
    off += p.b.size();
  }
  ++revision_;
}

namespace {

/// One sample through the stack. `caches` may be null (prediction only).
void run_sample(const NetworkModel& model, std::span<const double> input, RunMode mode,
                Rng* rng, std::vector<LayerCache>* caches, std::vector<double>& out) {
  const auto& layers = model.layers();
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> u;
  for (int li = 0; li < static_cast<int>(layers.size()); ++li) {
    const LayerSpec& spec = layers[li];
    const ParamTensor& p = model.params()[li];
    LayerCache* cache = caches ? &(*caches)[li] : nullptr;
    switch (spec.kind) {
      case LayerKind::dense:
      case LayerKind::softmax_output: {
        affine_forward(p, x, spec.units, u);
        if (cache) {
          cache->in = x;
          cache->pre = u;
        }
        x.resize(u.size());
        if (spec.kind == LayerKind::softmax_output) {
          x = u;
          softmax_inplace(x);
        } else {
          for (size_t i = 0; i < u.size(); ++i) x[i] = activate(spec.act, u[i]);
        }
        break;
      }
      case LayerKind::conv: {
        conv_forward(spec, p, model.layer_input_shape(li), model.layer_output_shape(li), x, u);
        if (cache) {
          cache->in = x;
          cache->pre = u;
        }
        x.resize(u.size());
        for (size_t i = 0; i < u.size(); ++i) x[i] = activate(spec.act, u[i]);
        break;
      }
      case LayerKind::maxpool: {
        maxpool_forward(spec, model.layer_input_shape(li), model.layer_output_shape(li), x, u,
                        cache ? &cache->argmax : nullptr);
        x = u;
        break;
      }
      case LayerKind::dropout: {
        if (mode == RunMode::train) {
          if (!rng) throw std::invalid_argument("forward: train mode with dropout needs an rng");
          if (cache) cache->mask.resize(x.size());
          for (size_t i = 0; i < x.size(); ++i) {
            const bool keep = !rng->bernoulli(spec.drop_p);
            if (cache) cache->mask[i] = keep ? 1 : 0;
            if (!keep) x[i] = 0.0;
          }
        } else {
          const double scale = 1.0 - spec.drop_p;
          for (double& v : x) v *= scale;
        }
        break;
      }
    }
  }
  out = std::move(x);
}

void check_batch_shape(const NetworkModel& model, const Batch& batch) {
  const size_t expect = static_cast<size_t>(model.input_shape().count());
  for (size_t s = 0; s < batch.size(); ++s) {
    if (batch.inputs[s].size() != expect) {
      throw std::invalid_argument("forward: sample " + std::to_string(s) + " has " +
                                  std::to_string(batch.inputs[s].size()) +
                                  " values, input layer expects " + std::to_string(expect));
    }
  }
}

}  // namespace

ForwardCache forward(const NetworkModel& model, const Batch& batch, RunMode mode, Rng* rng) {
  check_batch_shape(model, batch);
  ForwardCache fc;
  fc.mode = mode;
  fc.revision = model.revision();
  fc.samples.resize(batch.size());
  fc.outputs.resize(batch.size());
  for (size_t s = 0; s < batch.size(); ++s) {
    fc.samples[s].resize(model.layers().size());
    run_sample(model, batch.inputs[s], mode, rng, &fc.samples[s], fc.outputs[s]);
  }
  return fc;
}

std::vector<std::vector<double>> predict(const NetworkModel& model, const Batch& batch) {
  check_batch_shape(model, batch);
  std::vector<std::vector<double>> outs(batch.size());
  for (size_t s = 0; s < batch.size(); ++s) {
    run_sample(model, batch.inputs[s], RunMode::eval, nullptr, nullptr, outs[s]);
  }
  return outs;
}

double class_loss(const std::vector<std::vector<double>>& outputs,
                  std::span<const int> labels) {
  if (outputs.size() != labels.size() || outputs.empty()) {
    throw std::invalid_argument("class_loss: output/label counts differ or empty");
  }
  double acc = 0.0;
  for (size_t s = 0; s < outputs.size(); ++s) {
    const int y = labels[s];
    if (y < 0 || y >= static_cast<int>(outputs[s].size())) {
      throw std::invalid_argument("class_loss: label " + std::to_string(y) + " out of range");
    }
    const double p = std::clamp(outputs[s][y], 1e-12, 1.0);
    acc += -std::log(p);
  }
  return acc / static_cast<double>(outputs.size());
}

double l2_prime(const NetworkModel& model) {
  double acc = 0.0;
  for (int li = 0; li < static_cast<int>(model.layers().size()); ++li) {
    if (li == model.vr_layer()) continue;
    for (double w : model.params()[li].w) acc += w * w;
  }
  return acc;
}

double total_loss(const NetworkModel& model, const Batch& batch, const RelKernel& ker,
                  double mu1, double mu2, double lambda) {
  const double lc = class_loss(predict(model, batch), batch.labels);
  double reg1 = 0.0;
  double reg2 = 0.0;
  if (mu1 != 0.0) reg1 = vl_model(model.vr_weights(), ker, VLNorm::l1);
  if (mu2 != 0.0) reg2 = vl_model(model.vr_weights(), ker, VLNorm::l2);
  return lc + mu1 * reg1 + mu2 * reg2 + lambda * l2_prime(model);
}

namespace {

/// Backward through one dense/conv/pool/dropout layer for one sample.
/// `g` holds dLoss/d(layer output) on entry, dLoss/d(layer input) on exit.
/// Parameter gradients accumulate into `store` when it is non-null.
void layer_backward(const NetworkModel& model, int li, const LayerCache& cache,
                    RunMode mode, std::vector<double>& g, GradStore* store) {
  const LayerSpec& spec = model.layers()[li];
  const ParamTensor& p = model.params()[li];
  switch (spec.kind) {
    case LayerKind::dense:
    case LayerKind::softmax_output: {
      // For the output layer `g` already holds dLoss/d(pre-activation).
      std::vector<double> du(g.size());
      if (spec.kind == LayerKind::dense) {
        for (size_t i = 0; i < g.size(); ++i) du[i] = g[i] * activate_deriv(spec.act, cache.pre[i]);
      } else {
        du = g;
      }
      const int units = spec.units;
      const int fan_in = static_cast<int>(cache.in.size());
      if (store) {
        ParamTensor& gp = store->layers[li];
        for (int n = 0; n < units; ++n) {
          double* wrow = gp.w.data() + static_cast<size_t>(n) * fan_in;
          const double d = du[n];
          for (int f = 0; f < fan_in; ++f) wrow[f] += d * cache.in[f];
          gp.b[n] += d;
        }
      }
      std::vector<double> dx(fan_in, 0.0);
      for (int n = 0; n < units; ++n) {
        const double* wrow = p.w.data() + static_cast<size_t>(n) * fan_in;
        const double d = du[n];
        for (int f = 0; f < fan_in; ++f) dx[f] += wrow[f] * d;
      }
      g = std::move(dx);
      break;
    }
    case LayerKind::conv: {
      const Shape3 in = model.layer_input_shape(li);
      const Shape3 out = model.layer_output_shape(li);
      const int s = spec.ksize;
      const int pad = conv_pad(spec);
      std::vector<double> du(g.size());
      for (size_t i = 0; i < g.size(); ++i) du[i] = g[i] * activate_deriv(spec.act, cache.pre[i]);
      std::vector<double> dx(in.count(), 0.0);
      for (int co = 0; co < out.c; ++co) {
        const double* wbase = p.w.data() + static_cast<size_t>(co) * in.c * s * s;
        double* gwbase = store ? store->layers[li].w.data() + static_cast<size_t>(co) * in.c * s * s
                               : nullptr;
        double gb = 0.0;
        for (int oy = 0; oy < out.h; ++oy) {
          for (int ox = 0; ox < out.w; ++ox) {
            const double d = du[(static_cast<size_t>(co) * out.h + oy) * out.w + ox];
            if (d == 0.0) continue;
            gb += d;
            for (int ci = 0; ci < in.c; ++ci) {
              const double* wk = wbase + static_cast<size_t>(ci) * s * s;
              double* gwk = gwbase ? gwbase + static_cast<size_t>(ci) * s * s : nullptr;
              const double* plane = cache.in.data() + static_cast<size_t>(ci) * in.h * in.w;
              double* dplane = dx.data() + static_cast<size_t>(ci) * in.h * in.w;
              for (int ky = 0; ky < s; ++ky) {
                const int iy = oy + ky - pad;
                if (iy < 0 || iy >= in.h) continue;
                for (int kx = 0; kx < s; ++kx) {
                  const int ix = ox + kx - pad;
                  if (ix < 0 || ix >= in.w) continue;
                  if (gwk) gwk[ky * s + kx] += d * plane[iy * in.w + ix];
                  dplane[iy * in.w + ix] += d * wk[ky * s + kx];
                }
              }
            }
          }
        }
        if (store) store->layers[li].b[co] += gb;
      }
      g = std::move(dx);
      break;
    }
    case LayerKind::maxpool: {
      const Shape3 in = model.layer_input_shape(li);
      std::vector<double> dx(in.count(), 0.0);
      for (size_t o = 0; o < g.size(); ++o) dx[cache.argmax[o]] += g[o];
      g = std::move(dx);
      break;
    }
    case LayerKind::dropout: {
      if (mode == RunMode::train) {
        for (size_t i = 0; i < g.size(); ++i) {
          if (!cache.mask[i]) g[i] = 0.0;
        }
      } else {
        const double scale = 1.0 - spec.drop_p;
        for (double& v : g) v *= scale;
      }
      break;
    }
  }
}

}  // namespace

GradStore backward(const NetworkModel& model, const Batch& batch, const ForwardCache& cache,
                   const RelKernel& ker, double mu1, double mu2, double lambda) {
  if (cache.revision != model.revision()) {
    throw std::logic_error("backward: stale activation cache (parameters changed since forward)");
  }
  if (cache.mode != RunMode::train) {
    throw std::logic_error("backward: cache was not recorded in train mode");
  }
  if (cache.samples.size() != batch.size() || batch.labels.size() != batch.size()) {
    throw std::invalid_argument("backward: cache/batch/label sizes disagree");
  }
  const int n_layers = static_cast<int>(model.layers().size());
  if (model.layers().back().kind != LayerKind::softmax_output) {
    throw std::invalid_argument("backward: last layer must be a softmax output");
  }

  GradStore store;
  store.layers.resize(n_layers);
  for (int li = 0; li < n_layers; ++li) {
    store.layers[li].w.assign(model.params()[li].w.size(), 0.0);
    store.layers[li].b.assign(model.params()[li].b.size(), 0.0);
  }

  // Classification term: mean cross-entropy through softmax gives
  // d/d(pre) = (probabilities - onehot) / batch_size.
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (size_t s = 0; s < batch.size(); ++s) {
    const std::vector<double>& y = cache.outputs[s];
    std::vector<double> g(y.size());
    for (size_t j = 0; j < y.size(); ++j) {
      g[j] = (y[j] - (static_cast<int>(j) == batch.labels[s] ? 1.0 : 0.0)) * inv_b;
    }
    for (int li = n_layers - 1; li >= 0; --li) {
      layer_backward(model, li, cache.samples[s][li], cache.mode, g, &store);
    }
  }

  // L2' term: lambda * 2w on every weight tensor except the VR layer's; biases excluded.
  if (lambda != 0.0) {
    for (int li = 0; li < n_layers; ++li) {
      if (li == model.vr_layer()) continue;
      const std::vector<double>& w = model.params()[li].w;
      std::vector<double>& gw = store.layers[li].w;
      for (size_t i = 0; i < w.size(); ++i) gw[i] += lambda * (2.0 * w[i]);
    }
  }

  // VR terms: per-slab double-convolution gradients on the VR layer only.
  if ((mu1 != 0.0 || mu2 != 0.0)) {
    const VRWeights w = model.vr_weights();
    const int vr = model.vr_layer();
    const Shape3 in = model.layer_input_shape(vr);
    const int plane = in.h * in.w;
    auto scatter = [&](const VRWeights& gslabs, double mu) {
      for (const auto& slab : gslabs.slabs) {
        double* base = store.layers[vr].w.data() +
                       static_cast<size_t>(slab.node) * in.count() +
                       static_cast<size_t>(slab.channel) * plane;
        auto vals = slab.values.values();
        for (int i = 0; i < plane; ++i) base[i] += mu * vals[i];
      }
    };
    if (mu1 != 0.0) scatter(grad_vl_model(w, ker, VLNorm::l1), mu1);
    if (mu2 != 0.0) scatter(grad_vl_model(w, ker, VLNorm::l2), mu2);
  }

  return store;
}

NodeGradient node_input_gradient(const NetworkModel& model, std::span<const double> input,
                                 int layer, int node) {
  if (layer < 0 || layer >= static_cast<int>(model.layers().size())) {
    throw std::invalid_argument("node_input_gradient: layer index out of range");
  }
  if (input.size() != static_cast<size_t>(model.input_shape().count())) {
    throw std::invalid_argument("node_input_gradient: input size mismatch");
  }
  Batch one;
  one.inputs.emplace_back(input.begin(), input.end());
  one.labels.push_back(0);
  ForwardCache fc = forward(model, one, RunMode::eval);
  const auto& caches = fc.samples[0];

  const LayerSpec& spec = model.layers()[layer];
  const int width = model.layer_output_shape(layer).count();
  if (node < 0 || node >= width) {
    throw std::invalid_argument("node_input_gradient: node " + std::to_string(node) +
                                " out of range for layer of width " + std::to_string(width));
  }

  if (spec.kind == LayerKind::maxpool || spec.kind == LayerKind::dropout) {
    throw std::invalid_argument("node_input_gradient: layer " + std::to_string(layer) +
                                " has no nodes (pool/dropout)");
  }

  NodeGradient out;
  std::vector<double> g(width, 0.0);
  if (spec.kind == LayerKind::softmax_output) {
    // Pre-softmax logit: seed d(logit)/d(pre) directly.
    out.activation = caches[layer].pre[node];
  } else {
    out.activation = activate(spec.act, caches[layer].pre[node]);
  }
  g[node] = 1.0;
  for (int li = layer; li >= 0; --li) {
    layer_backward(model, li, caches[li], RunMode::eval, g, nullptr);
  }
  out.grad = std::move(g);
  return out;
}

namespace {

constexpr char kCheckpointMagic[8] = {'V', 'I', 'S', 'R', 'E', 'G', 'M', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
}

}  // namespace

void save_model(const NetworkModel& model, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint format is little-endian");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const uint32_t n_layers = static_cast<uint32_t>(model.layers().size());
  write_pod(out, n_layers);
  const Shape3 in = model.input_shape();
  write_pod(out, static_cast<int32_t>(in.h));
  write_pod(out, static_cast<int32_t>(in.w));
  write_pod(out, static_cast<int32_t>(in.c));
  write_pod(out, static_cast<int32_t>(model.vr_layer()));
  for (const LayerSpec& spec : model.layers()) {
    write_pod(out, static_cast<uint8_t>(spec.kind));
    write_pod(out, static_cast<uint8_t>(spec.act));
    write_pod(out, static_cast<uint8_t>(spec.pad));
    write_pod(out, static_cast<int32_t>(spec.units));
    write_pod(out, static_cast<int32_t>(spec.ksize));
    write_pod(out, static_cast<int32_t>(spec.channels));
    write_pod(out, static_cast<int32_t>(spec.pool));
    write_pod(out, spec.drop_p);
  }
  for (const ParamTensor& p : model.params()) {
    write_pod(out, static_cast<uint64_t>(p.w.size()));
    out.write(reinterpret_cast<const char*>(p.w.data()), p.w.size() * sizeof(double));
    write_pod(out, static_cast<uint64_t>(p.b.size()));
    out.write(reinterpret_cast<const char*>(p.b.data()), p.b.size() * sizeof(double));
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

NetworkModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw std::runtime_error("load_model: " + path + " is not a model checkpoint");
  }
  uint32_t n_layers = 0;
  read_pod(in, n_layers);
  int32_t h = 0, w = 0, c = 0, vr = 0;
  read_pod(in, h);
  read_pod(in, w);
  read_pod(in, c);
  read_pod(in, vr);
  std::vector<LayerSpec> layers(n_layers);
  for (LayerSpec& spec : layers) {
    uint8_t kind = 0, act = 0, pad = 0;
    int32_t units = 0, ksize = 0, channels = 0, pool = 0;
    double drop_p = 0.0;
    read_pod(in, kind);
    read_pod(in, act);
    read_pod(in, pad);
    read_pod(in, units);
    read_pod(in, ksize);
    read_pod(in, channels);
    read_pod(in, pool);
    read_pod(in, drop_p);
    spec.kind = static_cast<LayerKind>(kind);
    spec.act = static_cast<Activation>(act);
    spec.pad = static_cast<ConvPad>(pad);
    spec.units = units;
    spec.ksize = ksize;
    spec.channels = channels;
    spec.pool = pool;
    spec.drop_p = drop_p;
  }
  if (!in) throw std::runtime_error("load_model: truncated header in " + path);
  NetworkModel model(Shape3{h, w, c}, std::move(layers), 0,
                     vr < 0 ? NetworkModel::kNoVr : vr);
  for (ParamTensor& p : model.params_) {
    uint64_t wn = 0, bn = 0;
    read_pod(in, wn);
    if (wn != p.w.size()) throw std::runtime_error("load_model: weight count mismatch in " + path);
    in.read(reinterpret_cast<char*>(p.w.data()), wn * sizeof(double));
    read_pod(in, bn);
    if (bn != p.b.size()) throw std::runtime_error("load_model: bias count mismatch in " + path);
    in.read(reinterpret_cast<char*>(p.b.data()), bn * sizeof(double));
  }
  if (!in) throw std::runtime_error("load_model: truncated parameters in " + path);
  return model;
}

}  // namespace visreg
