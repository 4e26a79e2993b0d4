// Experiment runner: train/evaluate from declarative configs, run the
// verification suites, export visualizations, benchmark the regularizer.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "visreg/config.hpp"
#include "visreg/data.hpp"
#include "visreg/trainer.hpp"
#include "visreg/verify/suites.hpp"
#include "visreg/visualize.hpp"

namespace fs = std::filesystem;
using namespace visreg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

std::string data_root() {
  const char* env = std::getenv("VISREG_DATA_ROOT");
  return env ? env : "";
}

Dataset load_split(const DatasetConfig& dc, bool train_split) {
  const std::string root = data_root();
  Dataset ds;
  if (dc.kind == "mnist") {
    ds = train_split ? load_mnist(resolve_data_path(dc.train_images, root),
                                  resolve_data_path(dc.train_labels, root))
                     : load_mnist(resolve_data_path(dc.test_images, root),
                                  resolve_data_path(dc.test_labels, root));
  } else {
    std::vector<std::string> paths;
    if (train_split) {
      for (const auto& p : dc.train_batches) paths.push_back(resolve_data_path(p, root));
    } else {
      paths.push_back(resolve_data_path(dc.test_batch, root));
    }
    ds = load_cifar10(paths);
  }
  ds.split = train_split ? "train" : "test";
  const int limit = train_split ? dc.limit_train : dc.limit_test;
  if (limit > 0) ds = truncate(ds, static_cast<size_t>(limit));
  if (dc.standardize) standardize(ds);
  return ds;
}

int cmd_train(const std::string& config_path) {
  ExperimentConfig cfg;
  Dataset train_ds{.shape = {1, 1, 1}}, test_ds{.shape = {1, 1, 1}};
  try {
    cfg = parse_config_file(config_path);
    validate_config(cfg);
    train_ds = load_split(cfg.dataset, true);
    test_ds = load_split(cfg.dataset, false);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  std::printf("seed: %llu\n", static_cast<unsigned long long>(cfg.trainer.seed));
  std::printf("dataset: %s, %zu train / %zu test samples\n", cfg.dataset.kind.c_str(),
              train_ds.size(), test_ds.size());
  std::printf("architecture: %s\n", cfg.model.architecture.c_str());

  try {
    NetworkModel model = build_model(cfg, &train_ds.shape);
    const TrainConfig tc = build_train_config(cfg);
    const RelKernel ker = kernel_from_name(cfg.reg.kernel);
    const TrainResult result = train(tc, train_ds, test_ds, model, ker, /*verbose=*/true);
    const double final_acc = result.metrics.back().test_acc;
    std::printf("final test accuracy: %.2f%% (seed %llu)\n", 100.0 * final_acc,
                static_cast<unsigned long long>(cfg.trainer.seed));
    std::printf("metrics: %s\n", (fs::path(cfg.output.dir) / "metrics.csv").c_str());
    std::printf("checkpoint: %s\n", (fs::path(cfg.output.dir) / "checkpoint.bin").c_str());
    return kExitOk;
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitDiverged;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
}

int cmd_verify(uint64_t seed) {
  std::printf("verification suites (seed %llu)\n", static_cast<unsigned long long>(seed));
  std::printf("%-38s %7s %11s %9s %8s  %s\n", "suite", "checks", "max_err", "tol", "time",
              "result");
  int failures = 0;
  for (const auto& r : verify::run_all_suites(seed)) {
    std::printf("%-38s %7d %11.3e %9.0e %7.2fs  %s\n", r.name.c_str(), r.checks, r.max_err,
                r.tolerance, r.seconds, r.pass ? "PASS" : "FAIL");
    if (!r.detail.empty()) std::printf("    %s\n", r.detail.c_str());
    if (!r.pass) ++failures;
  }
  std::printf(failures == 0 ? "all suites passed\n" : "%d suite(s) FAILED\n", failures);
  return failures == 0 ? kExitOk : 1;
}

int cmd_visualize(const std::string& ckpt, const std::string& out_dir,
                  const std::string& kernel_name, int count, const std::string& format) {
  try {
    const NetworkModel model = load_model(ckpt);
    if (model.layers().empty() || model.layers().front().kind != LayerKind::dense) {
      throw ConfigError("checkpoint's first layer is not dense; nothing to visualize");
    }
    const int width = model.layers().front().units;
    if (count < 1 || count > width) {
      throw ConfigError("--count " + std::to_string(count) + " out of range; layer has " +
                        std::to_string(width) + " nodes");
    }
    const RelKernel ker = kernel_from_name(kernel_name);
    const ImageFormat fmt = format == "png" ? ImageFormat::png : ImageFormat::pgm;
    const std::string ext = format == "png" ? ".png" : ".pgm";
    fs::create_directories(out_dir);

    std::vector<std::pair<std::string, Matrix2D>> panels;
    std::vector<std::pair<double, int>> rank;  // (vl2 of visualization, node)
    std::vector<std::vector<Matrix2D>> stacks(width);
    for (int n = 0; n < width; ++n) {
      stacks[n] = vis_first_layer(model, n);
      double v2 = 0.0;
      for (const auto& ch : stacks[n]) v2 += vl2(ch, ker);
      rank.emplace_back(v2, n);
    }
    std::sort(rank.begin(), rank.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    for (int r = 0; r < count; ++r) {
      const int n = rank[r].second;
      for (size_t c = 0; c < stacks[n].size(); ++c) {
        const std::string suffix =
            stacks[n].size() > 1 ? "_c" + std::to_string(c) : std::string{};
        const std::string id = "node" + std::to_string(n) + suffix;
        const Matrix2D& vis = stacks[n][c];
        export_image(vis, out_dir + "/vis_" + id + ext, fmt);
        export_image(conv_same(vis, ker), out_dir + "/resp_" + id + ext, fmt);
        panels.emplace_back(id, vis);
      }
    }

    const auto rows = loss_table(panels, ker);
    std::ofstream csv(fs::path(out_dir) / "loss_table.csv");
    write_loss_csv(rows, csv);
    std::ofstream txt(fs::path(out_dir) / "loss_table.txt");
    write_loss_text(rows, txt);
    write_loss_text(rows, std::cout);
    std::printf("wrote %d visualizations (of %d nodes) to %s\n", count, width, out_dir.c_str());
    return kExitOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}

Batch random_batch(Rng& rng, int n, int input_count, int classes) {
  Batch b;
  for (int s = 0; s < n; ++s) {
    std::vector<double> x(input_count);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    b.inputs.push_back(std::move(x));
    b.labels.push_back(rng.uniform_int(classes));
  }
  return b;
}

int cmd_bench(const std::string& config_path, int reps) {
  ExperimentConfig cfg;
  ArchSpec arch;
  try {
    cfg = parse_config_file(config_path);
    arch = parse_architecture(cfg.model.architecture, parse_activation(cfg.model.activation));
    if (arch.input_count > 0) {
      throw ConfigError("bench needs an explicit input geometry: use input(HxW[xC])");
    }
    kernel_from_name(cfg.reg.kernel);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  const RelKernel ker = kernel_from_name(cfg.reg.kernel);
  const uint64_t seed = cfg.trainer.seed;
  std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));

  NetworkModel base(arch.input_shape, arch.layers, seed);
  if (!base.has_vr_layer()) {
    std::fprintf(stderr, "config error: architecture has no dense layer to regularize\n");
    return kExitConfig;
  }
  const int vr = base.vr_layer();
  const int classes = base.output_shape().count();
  Rng rng(mix_seed(seed, 0xB417ULL));

  std::printf("\nphase timings (batch %d, median of %d)\n", cfg.trainer.batch_size, reps);
  std::printf("%-10s %12s %12s %12s %14s\n", "vr_width", "t_vr", "t_l2", "t_backprop",
              "vr_weights");
  std::vector<double> tvr_by_size;
  std::vector<size_t> wcount_by_size;
  for (int scale = 1; scale <= 16; scale *= 2) {
    std::vector<LayerSpec> layers = arch.layers;
    layers[vr].units = arch.layers[vr].units * scale;
    NetworkModel model(arch.input_shape, layers, seed);
    const Batch batch = random_batch(rng, cfg.trainer.batch_size,
                                     arch.input_shape.count(), classes);
    const OverheadTimes t = vr_overhead_bench(model, batch, ker, reps);
    const size_t wc = model.params()[vr].w.size();
    std::printf("%-10d %10.3fms %10.3fms %10.3fms %14zu\n", layers[vr].units, 1e3 * t.t_vr,
                1e3 * t.t_l2, 1e3 * t.t_backprop, wc);
    tvr_by_size.push_back(t.t_vr);
    wcount_by_size.push_back(wc);
  }
  std::printf("\nsize-doubling ratios of t_vr (linear scaling => ~2.0):\n");
  for (size_t i = 1; i < tvr_by_size.size(); ++i) {
    std::printf("  %zu -> %zu weights: %.2f\n", wcount_by_size[i - 1], wcount_by_size[i],
                tvr_by_size[i] / tvr_by_size[i - 1]);
  }

  std::printf("\nbatch-size sweep (t_vr reads weights only; expect flat):\n");
  std::printf("%-12s %12s\n", "batch_size", "t_vr");
  for (const int bs : {10, 50, 100, 200}) {
    const Batch batch = random_batch(rng, bs, arch.input_shape.count(), classes);
    const OverheadTimes t = vr_overhead_bench(base, batch, ker, reps);
    std::printf("%-12d %10.3fms\n", bs, 1e3 * t.t_vr);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visualization-regularizer training and analysis tool"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "train a model from an experiment config");
  train_cmd->add_option("config", config_path, "experiment config file")->required();

  uint64_t verify_seed = 20240901;
  auto* verify_cmd = app.add_subcommand("verify", "run the numerical verification suites");
  verify_cmd->add_option("--seed", verify_seed, "suite seed");

  std::string ckpt, out_dir, kernel_name = "laplacian", img_format = "pgm";
  int count = 16;
  auto* vis_cmd = app.add_subcommand("visualize", "export first-layer visualizations");
  vis_cmd->add_option("checkpoint", ckpt, "model checkpoint")->required();
  vis_cmd->add_option("out_dir", out_dir, "output directory")->required();
  vis_cmd->add_option("--kernel", kernel_name, "high-pass kernel name");
  vis_cmd->add_option("--count", count, "number of nodes to export");
  vis_cmd->add_option("--format", img_format, "pgm or png")
      ->check(CLI::IsMember({"pgm", "png"}));

  std::string bench_config;
  int reps = 9;
  auto* bench_cmd = app.add_subcommand("bench", "measure regularizer gradient overhead");
  bench_cmd->add_option("config", bench_config, "experiment config file")->required();
  bench_cmd->add_option("--reps", reps, "timing repetitions per measurement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*train_cmd) return cmd_train(config_path);
  if (*verify_cmd) return cmd_verify(verify_seed);
  if (*vis_cmd) return cmd_visualize(ckpt, out_dir, kernel_name, count, img_format);
  if (*bench_cmd) return cmd_bench(bench_config, reps);
  return kExitConfig;
}
