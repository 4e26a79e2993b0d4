#include "visreg/verify/suites.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "visreg/conv.hpp"
#include "visreg/network.hpp"
#include "visreg/tikhonov.hpp"
#include "visreg/visloss.hpp"

namespace visreg::verify {

namespace {

class Stopwatch {
public:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::vector<double> flat(const Matrix2D& m) {
  return {m.values().begin(), m.values().end()};
}

VRWeights random_slabs(Rng& rng, const SlabGeometry& g) {
  VRWeights w;
  for (int s = 0; s < g.count; ++s) {
    w.slabs.push_back({s, 0, random_matrix(rng, g.rows, g.cols)});
  }
  return w;
}

std::vector<double> flatten_grads(const GradStore& store) {
  std::vector<double> out;
  for (const auto& p : store.layers) {
    out.insert(out.end(), p.w.begin(), p.w.end());
    out.insert(out.end(), p.b.begin(), p.b.end());
  }
  return out;
}

}  // namespace

SuiteResult conv_oracle_suite(uint64_t seed) {
  Stopwatch sw;
  SuiteResult res{.name = "conv-vs-brute-oracle", .tolerance = 1e-12};
  Rng rng(mix_seed(seed, 1));
  for (int i = 0; i < 200; ++i) {
    const int rows = 1 + rng.uniform_int(16);
    const int cols = 1 + rng.uniform_int(16);
    const int k = rng.uniform_int(3);
    const Matrix2D img = random_matrix(rng, rows, cols);
    const RelKernel ker = random_kernel(rng, k);
    const Matrix2D a = conv_same(img, ker);
    const Matrix2D b = conv_brute_oracle(img, ker);
    res.max_err = std::max(res.max_err, max_abs_diff(a.values(), b.values()));
    ++res.checks;
  }
  res.pass = res.max_err <= res.tolerance;
  res.seconds = sw.elapsed();
  res.detail = "200 random instances, dims up to 16x16, kernels up to 5x5";
  return res;
}

SuiteResult conv_linearity_suite(uint64_t seed) {
  Stopwatch sw;
  SuiteResult res{.name = "conv-linearity", .tolerance = 1e-10};
  Rng rng(mix_seed(seed, 2));
  for (int i = 0; i < 100; ++i) {
    const int rows = 2 + rng.uniform_int(12);
    const int cols = 2 + rng.uniform_int(12);
    const int k = 1 + rng.uniform_int(2);
    const Matrix2D i1 = random_matrix(rng, rows, cols);
    const Matrix2D i2 = random_matrix(rng, rows, cols);
    const RelKernel ker = random_kernel(rng, k);
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    Matrix2D mix(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) mix(r, c) = a * i1(r, c) + b * i2(r, c);
    const Matrix2D lhs = conv_same(mix, ker);
    const Matrix2D c1 = conv_same(i1, ker);
    const Matrix2D c2 = conv_same(i2, ker);
    Matrix2D rhs(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) rhs(r, c) = a * c1(r, c) + b * c2(r, c);
    res.max_err = std::max(res.max_err, norm_rel_err(lhs.values(), rhs.values()));
    ++res.checks;
  }
  res.pass = res.max_err <= res.tolerance;
  res.seconds = sw.elapsed();
  res.detail = "conv(a*I1 + b*I2) vs a*conv(I1) + b*conv(I2), 100 instances";
  return res;
}

SuiteResult conv_impulse_suite(uint64_t seed) {
  Stopwatch sw;
  SuiteResult res{.name = "conv-impulse-response", .tolerance = 0.0};
  Rng rng(mix_seed(seed, 3));
  for (int i = 0; i < 50; ++i) {
    const int k = 1 + rng.uniform_int(2);
    const int rows = 2 * k + 2 + rng.uniform_int(8);
    const int cols = 2 * k + 2 + rng.uniform_int(8);
    const int si = k + rng.uniform_int(rows - 2 * k);
    const int sj = k + rng.uniform_int(cols - 2 * k);
    const RelKernel ker = random_kernel(rng, k);
    Matrix2D img(rows, cols);
    img(si, sj) = 1.0;
    const Matrix2D out = conv_same(img, ker);
    // out(s + d) must equal ker(-d): the impulse response is the flipped kernel.
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const int di = r - si;
        const int dj = c - sj;
        const double want =
            (std::abs(di) <= k && std::abs(dj) <= k) ? ker.at(-di, -dj) : 0.0;
        res.max_err = std::max(res.max_err, std::abs(out(r, c) - want));
      }
    }
    ++res.checks;
  }
  res.pass = res.max_err <= res.tolerance;
  res.seconds = sw.elapsed();
  res.detail = "interior impulse reproduces the flipped kernel, 50 instances";
  return res;
}

namespace {

struct GradCase {
  const char* label;
  RelKernel ker;
};

std::vector<GradCase> gradient_kernels(Rng& rng) {
  std::vector<GradCase> cases;
  cases.push_back({"high-pass 3x3", laplacian3()});
  cases.push_back({"random 3x3", random_kernel(rng, 1)});
  cases.push_back({"random 5x5", random_kernel(rng, 2)});
  return cases;
}

}  // namespace

SuiteResult vl2_gradient_suite(uint64_t seed) {
  Stopwatch sw;
  SuiteResult res{.name = "vl2-gradient-vs-central-diff", .tolerance = 1e-6};
  Rng rng(mix_seed(seed, 4));
  auto cases = gradient_kernels(rng);
  const double h = 1e-5;
  for (const int side : {8, 16}) {
    for (const auto& [label, ker] : cases) {
      for (int i = 0; i < 100; ++i) {
        const Matrix2D img = random_matrix(rng, side, side);
        const Matrix2D analytic = grad_vl2(img, ker);
        const auto fd = central_diff(
            [&](std::span<const double> x) {
              return vl2(Matrix2D(side, side, {x.begin(), x.end()}), ker);
            },
            flat(img), h);
        res.max_err = std::max(res.max_err, norm_rel_err(analytic.values(), fd));
        ++res.checks;
      }
    }
  }
  res.pass = res.max_err <= res.tolerance;
  res.seconds = sw.elapsed();
  res.detail = "h=1e-5, 100 images per {8x8,16x16} x {high-pass, random 3x3, random 5x5}";
  return res;
}

SuiteResult vl1_gradient_suite(uint64_t seed) {
  Stopwatch sw;
  SuiteResult res{.name = "vl1-gradient-vs-central-diff", .tolerance = 1e-5};
  Rng rng(mix_seed(seed, 5));
  auto cases = gradient_kernels(rng);
  const double h = 1e-6;
  const double kink_floor = 1e-3;
  for (const int side : {8, 16}) {
    for (const auto& [label, ker] : cases) {
      for (int i = 0; i < 100; ++i) {
        // Resample until every response pixel is clear of the |r| = 0 kink.
        Matrix2D img(1, 1);
        bool found = false;
        for (int tries = 0; tries < 500 && !found; ++tries) {
          img = random_matrix(rng, side, side);
          const Matrix2D resp = conv_same(img, ker);
          double mn = std::numeric_limits<double>::infinity();
          for (double v : resp.values()) mn = std::min(mn, std::abs(v));
          found = mn > kink_floor;
        }
        if (!found) continue;
        const Matrix2D analytic = grad_vl1(img, ker);
        const auto fd = central_diff(
            [&](std::span<const double> x) {
              return vl1(Matrix2D(side, side, {x.begin(), x.end()}), ker);
            },
            flat(img), h);
        res.max_err = std::max(res.max_err, norm_rel_err(analytic.values(), fd));
        ++res.checks;
      }
    }
  }
  res.pass = res.max_err <= res.tolerance && res.checks >= 500;
  res.seconds = sw.elapsed();
  res.detail = "h=1e-6, kink filter min |response| > 1e-3";
  return res;
}

SuiteResult model_gradient_suite(uint64_t seed) {
  Stopwatch sw;
  SuiteResult res{.name = "composite-backprop-vs-central-diff", .tolerance = 1e-5};
  Rng rng(mix_seed(seed, 6));
  const RelKernel ker = laplacian3();
  const double mu1 = 0.007;
  const double mu2 = 0.011;
  const double lambda = 0.019;

  NetworkModel model(Shape3{3, 3, 1},
                     {LayerSpec::dense(4, Activation::tanh_fn), LayerSpec::softmax_output(3)},
                     mix_seed(seed, 7));
  Batch batch;
  for (int s = 0; s < 6; ++s) {
    std::vector<double> x(9);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    batch.inputs.push_back(std::move(x));
    batch.labels.push_back(rng.uniform_int(3));
  }

  const ForwardCache fc = forward(model, batch, RunMode::train);
  const GradStore store = backward(model, batch, fc, ker, mu1, mu2, lambda);
  const std::vector<double> analytic = flatten_grads(store);

  NetworkModel scratch = model;
  const auto fd = central_diff(
      [&](std::span<const double> x) {
        scratch.set_flat_params(x);
        return total_loss(scratch, batch, ker, mu1, mu2, lambda);
      },
      model.flat_params(), 1e-5);

  res.max_err = norm_rel_err(analytic, fd);
  res.checks = static_cast<int>(analytic.size());
  res.pass = res.max_err <= res.tolerance;
  res.seconds = sw.elapsed();
  res.detail = "dense(4)+output(3) on 3x3 input, mu1, mu2, lambda all nonzero, 55 parameters";
  return res;
}

namespace {

struct TikhonovInstance {
  SlabGeometry geom;
  RelKernel ker;
  VRWeights w;
};

TikhonovInstance random_tikhonov_instance(Rng& rng) {
  TikhonovInstance inst{.geom = {3 + rng.uniform_int(10), 3 + rng.uniform_int(10),
                                 1 + rng.uniform_int(8)},
                        .ker = random_kernel(rng, 1 + rng.uniform_int(2)),
                        .w = {}};
  inst.w = random_slabs(rng, inst.geom);
  return inst;
}

}  // namespace

SuiteResult tikhonov_value_suite(uint64_t seed) {
  Stopwatch sw;
  SuiteResult res{.name = "tikhonov-quadratic-equivalence", .tolerance = 1e-10};
  Rng rng(mix_seed(seed, 8));
  bool sparsity_ok = true;
  for (int i = 0; i < 50; ++i) {
    const TikhonovInstance inst = random_tikhonov_instance(rng);
    const SparseMat gamma = build_gamma(inst.geom, inst.ker);
    const std::vector<double> wf = flatten(inst.w);
    const double quad = gamma_quadratic(gamma, wf);
    const double direct = vl_model(inst.w, inst.ker, VLNorm::l2);
    res.max_err = std::max(res.max_err, std::abs(quad - direct) / std::max(direct, 1e-30));
    const int side = inst.ker.side();
    if (gamma.nnz() > static_cast<size_t>(gamma.n_rows) * side * side) sparsity_ok = false;
    ++res.checks;
  }
  res.pass = res.max_err <= res.tolerance && sparsity_ok;
  res.seconds = sw.elapsed();
  res.detail = std::string("50 random geometries (1-8 slabs, 3x3-12x12, kernels to 5x5); "
                           "nnz bound ") + (sparsity_ok ? "held" : "VIOLATED");
  return res;
}

SuiteResult tikhonov_gradient_suite(uint64_t seed, const FlipFn& flip_fn) {
  Stopwatch sw;
  SuiteResult res{.name = "tikhonov-normal-equations-gradient", .tolerance = 1e-9};
  Rng rng(mix_seed(seed, 9));
  const FlipFn flipper = flip_fn ? flip_fn : [](const RelKernel& k) { return flip(k); };
  for (int i = 0; i < 50; ++i) {
    const TikhonovInstance inst = random_tikhonov_instance(rng);
    const SparseMat gamma = build_gamma(inst.geom, inst.ker);
    const std::vector<double> wf = flatten(inst.w);

    // Normal-equations gradient of ||G w||^2: 2 G^T (G w).
    std::vector<double> normal = gamma.multiply_transpose(gamma.multiply(wf));
    for (double& v : normal) v *= 2.0;

    const std::vector<double> dconv = flatten(grad_vl_model(inst.w, inst.ker, VLNorm::l2));
    res.max_err = std::max(res.max_err, norm_rel_err(normal, dconv));

    // Recompute the double convolution through the supplied flip.
    std::vector<double> manual;
    manual.reserve(wf.size());
    const RelKernel flipped = flipper(inst.ker);
    for (const auto& slab : inst.w.slabs) {
      Matrix2D g = conv_same(conv_same(slab.values, inst.ker), flipped);
      for (double v : g.values()) manual.push_back(2.0 * v);
    }
    res.max_err = std::max(res.max_err, norm_rel_err(normal, manual));
    ++res.checks;
  }
  res.pass = res.max_err <= res.tolerance;
  res.seconds = sw.elapsed();
  res.detail = "2 G^T G w vs double-convolution gradient, 50 random geometries";
  return res;
}

std::vector<SuiteResult> run_all_suites(uint64_t seed) {
  std::vector<SuiteResult> all;
  all.push_back(conv_oracle_suite(seed));
  all.push_back(conv_linearity_suite(seed));
  all.push_back(conv_impulse_suite(seed));
  all.push_back(vl2_gradient_suite(seed));
  all.push_back(vl1_gradient_suite(seed));
  all.push_back(model_gradient_suite(seed));
  all.push_back(tikhonov_value_suite(seed));
  all.push_back(tikhonov_gradient_suite(seed));
  return all;
}

}  // namespace visreg::verify
