#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "visreg/network.hpp"
#include "visreg/trainer.hpp"

namespace visreg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  std::string kind = "mnist";  // mnist | cifar10
  std::string train_images, train_labels, test_images, test_labels;  // mnist
  std::vector<std::string> train_batches;                            // cifar10
  std::string test_batch;
  int limit_train = 0;  // 0 = all
  int limit_test = 0;
  bool standardize = false;
  bool operator==(const DatasetConfig&) const = default;
};

struct ModelConfig {
  std::string architecture = "mnist_fc";  // preset name or inline layer list
  std::string activation = "relu";        // default for hidden fc/conv layers
  bool operator==(const ModelConfig&) const = default;
};

struct RegConfig {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double lambda = 0.0;
  std::string kernel = "laplacian";
  bool operator==(const RegConfig&) const = default;
};

struct TrainerSection {
  int epochs = 1;
  int batch_size = 100;
  double learning_rate = 0.01;
  double momentum = 0.9;
  bool nesterov = false;
  std::string schedule = "constant";  // constant | mnist | cifar | custom
  std::vector<std::pair<int, double>> schedule_steps;
  uint64_t seed = 0;
  int checkpoint_every = 0;
  bool operator==(const TrainerSection&) const = default;
};

struct OutputConfig {
  std::string dir = "runs/out";
  bool operator==(const OutputConfig&) const = default;
};

/// One experiment: dataset + architecture + regularizers + trainer + output.
struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  RegConfig reg;
  TrainerSection trainer;
  OutputConfig output;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Flat key-value text with [section] headers; '#' lines are comments.
/// Unknown sections or keys are errors naming the offending line.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical serialization: every field, fixed order; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Semantic validation beyond syntax (paths present for the dataset kind,
/// positive counts, known kernel/schedule/architecture). Throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

/// Parsed architecture: either a flat input count (geometry comes from the
/// dataset) or an explicit input shape, plus the layer stack.
struct ArchSpec {
  int input_count = 0;       // input(N); 0 when the shape is explicit
  Shape3 input_shape{0, 0, 0};
  std::vector<LayerSpec> layers;
};

bool is_preset(const std::string& name);
/// Table-style token string for a preset (golden-file pinned).
std::string preset_canonical(const std::string& name);
/// Buildable inline form of a preset (cifar_conv carries same-padding so its
/// pooling chain stays well-formed).
std::string preset_expansion(const std::string& name);

/// Parses a preset name or inline layer list like
///   "input(784) -- fc(200) -- dropout(0.3) -- output(10)".
/// Grammar: input(N) | input(HxW[xC]) | fc(N) | dropout(P) |
///          conv(SxS, C[, same]) | maxpool(SxS) | output(N).
ArchSpec parse_architecture(const std::string& text, Activation default_act);

Activation parse_activation(const std::string& name);
RelKernel kernel_from_name(const std::string& name);
Schedule schedule_from_config(const TrainerSection& t);

/// Resolves the model input shape, preferring the dataset geometry for flat
/// input(N) declarations; validates that counts agree.
Shape3 resolve_input_shape(const ArchSpec& arch, const Shape3* dataset_shape);

/// Builds the model from the config (dataset shape may be null for synthetic
/// runs with an explicit input shape).
NetworkModel build_model(const ExperimentConfig& cfg, const Shape3* dataset_shape);

TrainConfig build_train_config(const ExperimentConfig& cfg);

/// Joins relative paths onto root (from the VISREG_DATA_ROOT environment
/// variable) when root is non-empty.
std::string resolve_data_path(const std::string& path, const std::string& root);

}  // namespace visreg
