#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "visreg/data.hpp"
#include "visreg/kernel.hpp"
#include "visreg/network.hpp"

namespace visreg {

struct Schedule {
  enum class Kind { constant, mnist, cifar, custom };
  Kind kind = Kind::constant;
  /// For custom schedules: (first epoch, rate) steps, sorted by epoch.
  std::vector<std::pair<int, double>> steps;
};

/// Piecewise-constant learning rate:
///  - mnist: alpha0 until epoch 74, halved at epoch 75, then divided by 1.3
///    every further 25 epochs;
///  - cifar: alpha0 divided by 1.3 every 500 epochs;
///  - constant: alpha0 throughout;
///  - custom: alpha0 before the first step, then the rate of the latest step.
double lr_schedule(const Schedule& schedule, int epoch, double alpha0);

struct TrainConfig {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double lambda = 0.0;
  double alpha0 = 0.01;
  double momentum = 0.9;
  bool nesterov = false;
  Schedule schedule;
  int epochs = 1;
  int batch_size = 100;
  uint64_t seed = 0;
  int checkpoint_every = 0;   // 0: only the final checkpoint
  std::string out_dir;        // empty: no files written
};

struct MetricsRow {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double vl1 = 0.0;
  double vl2 = 0.0;
  double l2prime = 0.0;
  double seconds = 0.0;  // wall time; reported on stdout, never in the CSV
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
};

/// Raised when the training loss becomes non-finite.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch, double lr);
  int epoch;
  double lr;
};

/// Fraction of samples whose argmax output equals the label (eval mode).
double evaluate(const NetworkModel& model, const Dataset& data);

/// The regularized minibatch loop: classification backprop, L2' gradient,
/// per-slab VR gradients, total gradient assembly, momentum step. One
/// MetricsRow per epoch; a fixed seed makes the whole trajectory reproducible.
/// With out_dir set, writes metrics.csv and periodic/final checkpoints there.
TrainResult train(const TrainConfig& cfg, const Dataset& train_ds, const Dataset& test_ds,
                  NetworkModel& model, const RelKernel& ker, bool verbose = false);

/// Deterministic columns only (no wall time), doubles printed with %.17g:
/// identical runs produce identical bytes.
void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out);

struct OverheadTimes {
  double t_vr = 0.0;        // per-slab double-convolution gradients
  double t_l2 = 0.0;        // 2w over non-VR weights
  double t_backprop = 0.0;  // classification backprop over the batch
};

/// Median-of-reps wall times of the three gradient phases on one model/batch.
OverheadTimes vr_overhead_bench(const NetworkModel& model, const Batch& batch,
                                const RelKernel& ker, int reps = 9);

}  // namespace visreg
