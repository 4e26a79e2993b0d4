#include <fstream>
#include <sstream>

#include "doctest.h"
#include "visreg/config.hpp"

using namespace visreg;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

ExperimentConfig valid_mnist_config() {
  ExperimentConfig cfg;
  cfg.dataset.kind = "mnist";
  cfg.dataset.train_images = "train-images-idx3-ubyte";
  cfg.dataset.train_labels = "train-labels-idx1-ubyte";
  cfg.dataset.test_images = "t10k-images-idx3-ubyte";
  cfg.dataset.test_labels = "t10k-labels-idx1-ubyte";
  return cfg;
}

}  // namespace

TEST_CASE("preset expansions match the pinned golden token strings") {
  for (const char* name : {"mnist_fc", "mnist_conv", "cifar_conv"}) {
    CAPTURE(name);
    CHECK(is_preset(name));
    const std::string golden = read_file(std::string(VISREG_GOLDEN_DIR) + "/" + name + ".arch");
    CHECK(preset_canonical(name) == golden);
  }
  CHECK_FALSE(is_preset("lenet"));
  CHECK_THROWS_AS(preset_canonical("lenet"), ConfigError);
}

TEST_CASE("mnist_fc expands to the expected layer stack") {
  const ArchSpec arch = parse_architecture("mnist_fc", Activation::relu);
  CHECK(arch.input_count == 784);
  REQUIRE(arch.layers.size() == 6);
  CHECK(arch.layers[0] == LayerSpec::dense(1000));
  CHECK(arch.layers[1] == LayerSpec::dropout(0.3));
  CHECK(arch.layers[2] == LayerSpec::dense(1000));
  CHECK(arch.layers[3] == LayerSpec::dropout(0.3));
  CHECK(arch.layers[4] == LayerSpec::dense(1000));
  CHECK(arch.layers[5] == LayerSpec::softmax_output(10));
}

TEST_CASE("cifar_conv builds end to end with a closed pooling chain") {
  const ArchSpec arch = parse_architecture("cifar_conv", Activation::relu);
  CHECK(arch.input_shape == Shape3{32, 32, 3});
  NetworkModel model(arch.input_shape, arch.layers, 1);
  // Shape flow: 32 -> 32 (same) -> 11 -> 11 -> 4 -> 4 -> 2, then fc(384).
  const SlabGeometry g = model.vr_slab_geometry();
  CHECK(g.rows == 2);
  CHECK(g.cols == 2);
  CHECK(g.count == 384 * 64);
  CHECK(model.output_shape() == Shape3{1, 1, 10});
}

TEST_CASE("mnist_conv builds with valid convolutions") {
  const ArchSpec arch = parse_architecture("mnist_conv", Activation::relu);
  NetworkModel model(arch.input_shape, arch.layers, 1);
  const SlabGeometry g = model.vr_slab_geometry();
  CHECK(g.rows == 8);
  CHECK(g.cols == 8);
  CHECK(g.count == 1024 * 64);
}

TEST_CASE("config round-trip: parse(serialize(c)) == c") {
  ExperimentConfig cfg;
  cfg.dataset.kind = "cifar10";
  cfg.dataset.train_batches = {"data_batch_1.bin", "data_batch_2.bin"};
  cfg.dataset.test_batch = "test_batch.bin";
  cfg.dataset.limit_train = 5000;
  cfg.dataset.standardize = true;
  cfg.model.architecture = "cifar_conv";
  cfg.model.activation = "tanh";
  cfg.reg.mu1 = 0.001;
  cfg.reg.mu2 = 0.0625;
  cfg.reg.lambda = 0.004;
  cfg.trainer.epochs = 2300;
  cfg.trainer.batch_size = 128;
  cfg.trainer.learning_rate = 0.01;
  cfg.trainer.momentum = 0.95;
  cfg.trainer.nesterov = true;
  cfg.trainer.schedule = "custom";
  cfg.trainer.schedule_steps = {{10, 0.005}, {100, 0.0033333333333333331}};
  cfg.trainer.seed = 987654321;
  cfg.trainer.checkpoint_every = 50;
  cfg.output.dir = "runs/cifar_long";

  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config_text(text);
  CHECK(back == cfg);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("table-style hyperparameters are accepted for the fc preset") {
  ExperimentConfig cfg = valid_mnist_config();
  cfg.model.architecture = "mnist_fc";
  cfg.reg.mu2 = 0.01;
  cfg.reg.lambda = 0.01;
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("validation reports field-level errors") {
  SUBCASE("missing dataset path") {
    ExperimentConfig cfg = valid_mnist_config();
    cfg.dataset.train_images.clear();
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("train_images"), ConfigError);
  }
  SUBCASE("unknown dataset kind") {
    ExperimentConfig cfg = valid_mnist_config();
    cfg.dataset.kind = "imagenet";
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
  SUBCASE("negative regularizer weight") {
    ExperimentConfig cfg = valid_mnist_config();
    cfg.reg.mu1 = -0.5;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
  SUBCASE("unknown kernel") {
    ExperimentConfig cfg = valid_mnist_config();
    cfg.reg.kernel = "sobel";
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("sobel"), ConfigError);
  }
  SUBCASE("bad schedule") {
    ExperimentConfig cfg = valid_mnist_config();
    cfg.trainer.schedule = "warmup";
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  }
}

TEST_CASE("parser rejects unknown sections, keys, and malformed lines") {
  CHECK_THROWS_WITH_AS(parse_config_text("[experiment]\n"), doctest::Contains("unknown section"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[trainer]\nlearningrate = 3\n"),
                       doctest::Contains("unknown key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[trainer]\nepochs ten\n"),
                       doctest::Contains("key = value"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[trainer]\nepochs = ten\n"),
                       doctest::Contains("integer"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("stray = 1\n"), ConfigError);
  CHECK_NOTHROW(parse_config_text("# comment only\n\n[trainer]\nepochs = 3\n"));
}

TEST_CASE("architecture grammar errors") {
  CHECK_THROWS_WITH_AS(parse_architecture("fc(10) -- output(2)", Activation::relu),
                       doctest::Contains("input"), ConfigError);
  CHECK_THROWS_AS(parse_architecture("input(4x4) -- fc(ten)", Activation::relu), ConfigError);
  CHECK_THROWS_AS(parse_architecture("input(4x4) -- conv(3x5, 2)", Activation::relu),
                  ConfigError);
  CHECK_THROWS_AS(parse_architecture("input(4x4) -- conv(3x3, 2, reflect)", Activation::relu),
                  ConfigError);
  CHECK_THROWS_AS(parse_architecture("input(4x4) -- spatial(9)", Activation::relu), ConfigError);
  CHECK_NOTHROW(parse_architecture("input(8x8x3) -- conv(3x3, 4, same) -- fc(6) -- output(2)",
                                   Activation::relu));
}

TEST_CASE("input(N) takes its geometry from the dataset") {
  const ArchSpec arch = parse_architecture("input(784) -- fc(10) -- output(10)", Activation::relu);
  const Shape3 mnist{28, 28, 1};
  CHECK(resolve_input_shape(arch, &mnist) == mnist);

  const Shape3 wrong{16, 16, 1};
  CHECK_THROWS_WITH_AS(resolve_input_shape(arch, &wrong), doctest::Contains("does not match"),
                       ConfigError);
  CHECK_THROWS_AS(resolve_input_shape(arch, nullptr), ConfigError);
}

TEST_CASE("default activation from the config reaches hidden layers") {
  const ArchSpec arch =
      parse_architecture("input(4x4) -- fc(3) -- output(2)", parse_activation("tanh"));
  CHECK(arch.layers[0].act == Activation::tanh_fn);
  CHECK(arch.layers[1].act == Activation::none);
  CHECK_THROWS_AS(parse_activation("swish"), ConfigError);
}

TEST_CASE("custom schedule steps are sorted by epoch") {
  TrainerSection t;
  t.schedule = "custom";
  t.schedule_steps = {{20, 0.001}, {5, 0.005}};
  const Schedule s = schedule_from_config(t);
  REQUIRE(s.steps.size() == 2);
  CHECK(s.steps[0].first == 5);
  CHECK(s.steps[1].first == 20);
}

TEST_CASE("data root joins relative paths only") {
  CHECK(resolve_data_path("a/b.idx", "/data") == "/data/a/b.idx");
  CHECK(resolve_data_path("/abs/b.idx", "/data") == "/abs/b.idx");
  CHECK(resolve_data_path("a/b.idx", "") == "a/b.idx");
}
