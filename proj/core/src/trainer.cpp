#include "visreg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace visreg {

namespace {

constexpr uint64_t kDropoutStream = 0x44524F50ULL;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double lr_schedule(const Schedule& schedule, int epoch, double alpha0) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
  switch (schedule.kind) {
    case Schedule::Kind::constant:
      return alpha0;
    case Schedule::Kind::mnist: {
      if (epoch < 75) return alpha0;
      const int drops = (epoch - 75) / 25;
      return (alpha0 / 2.0) / std::pow(1.3, drops);
    }
    case Schedule::Kind::cifar:
      return alpha0 / std::pow(1.3, epoch / 500);
    case Schedule::Kind::custom: {
      double rate = alpha0;
      for (const auto& [start, r] : schedule.steps) {
        if (epoch >= start) rate = r;
      }
      return rate;
    }
  }
  return alpha0;
}

TrainingDiverged::TrainingDiverged(int epoch_, double lr_)
    : std::runtime_error("training diverged: non-finite loss at epoch " +
                         std::to_string(epoch_) + " (learning rate " +
                         std::to_string(lr_) + ")"),
      epoch(epoch_),
      lr(lr_) {}

double evaluate(const NetworkModel& model, const Dataset& data) {
  constexpr int kEvalBatch = 256;
  size_t correct = 0;
  std::vector<int> idx(kEvalBatch);
  for (size_t off = 0; off < data.size(); off += kEvalBatch) {
    const size_t end = std::min(data.size(), off + kEvalBatch);
    idx.resize(end - off);
    for (size_t i = off; i < end; ++i) idx[i - off] = static_cast<int>(i);
    const Batch batch = make_batch(data, idx);
    const auto outs = predict(model, batch);
    for (size_t s = 0; s < outs.size(); ++s) {
      const auto& y = outs[s];
      const int pred = static_cast<int>(std::max_element(y.begin(), y.end()) - y.begin());
      if (pred == batch.labels[s]) ++correct;
    }
  }
  return data.size() == 0 ? 0.0 : static_cast<double>(correct) / data.size();
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_ds, const Dataset& test_ds,
                  NetworkModel& model, const RelKernel& ker, bool verbose) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.mu1 < 0 || cfg.mu2 < 0 || cfg.lambda < 0) {
    throw std::invalid_argument("train: regularizer weights must be non-negative");
  }
  if ((cfg.mu1 > 0 || cfg.mu2 > 0) && !model.has_vr_layer()) {
    throw std::invalid_argument("train: VR weight set but the model has no VR layer");
  }

  namespace fs = std::filesystem;
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

  Rng dropout_rng(mix_seed(cfg.seed, kDropoutStream));
  std::vector<ParamTensor> velocity(model.params().size());
  for (size_t li = 0; li < velocity.size(); ++li) {
    velocity[li].w.assign(model.params()[li].w.size(), 0.0);
    velocity[li].b.assign(model.params()[li].b.size(), 0.0);
  }

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    const double alpha = lr_schedule(cfg.schedule, epoch, cfg.alpha0);
    double loss_sum = 0.0;
    size_t n_batches = 0;

    for (const auto& idx : minibatches(train_ds, cfg.batch_size, cfg.seed, epoch)) {
      const Batch batch = make_batch(train_ds, idx);
      const ForwardCache fc = forward(model, batch, RunMode::train, &dropout_rng);

      double batch_loss = class_loss(fc.outputs, batch.labels);
      if (cfg.mu1 != 0.0) batch_loss += cfg.mu1 * vl_model(model.vr_weights(), ker, VLNorm::l1);
      if (cfg.mu2 != 0.0) batch_loss += cfg.mu2 * vl_model(model.vr_weights(), ker, VLNorm::l2);
      if (cfg.lambda != 0.0) batch_loss += cfg.lambda * l2_prime(model);
      if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, alpha);
      loss_sum += batch_loss;
      ++n_batches;

      const GradStore grads = backward(model, batch, fc, ker, cfg.mu1, cfg.mu2, cfg.lambda);

      auto& params = model.mutable_params();
      for (size_t li = 0; li < params.size(); ++li) {
        auto step = [&](std::vector<double>& w, std::vector<double>& v,
                        const std::vector<double>& g) {
          for (size_t i = 0; i < w.size(); ++i) {
            v[i] = cfg.momentum * v[i] + g[i];
            w[i] -= alpha * (cfg.nesterov ? g[i] + cfg.momentum * v[i] : v[i]);
          }
        };
        step(params[li].w, velocity[li].w, grads.layers[li].w);
        step(params[li].b, velocity[li].b, grads.layers[li].b);
      }
    }

    MetricsRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(n_batches);
    row.train_acc = evaluate(model, train_ds);
    row.test_acc = evaluate(model, test_ds);
    if (model.has_vr_layer()) {
      const VRWeights w = model.vr_weights();
      row.vl1 = vl_model(w, ker, VLNorm::l1);
      row.vl2 = vl_model(w, ker, VLNorm::l2);
    }
    row.l2prime = l2_prime(model);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.metrics.push_back(row);

    if (verbose) {
      std::printf("epoch %d/%d lr=%g train_loss=%.6f train_acc=%.4f test_acc=%.4f "
                  "vl1=%.4f vl2=%.4f l2'=%.4f (%.2fs)\n",
                  epoch + 1, cfg.epochs, alpha, row.train_loss, row.train_acc, row.test_acc,
                  row.vl1, row.vl2, row.l2prime, row.seconds);
      std::fflush(stdout);
    }

    if (!cfg.out_dir.empty()) {
      std::ofstream csv(fs::path(cfg.out_dir) / "metrics.csv");
      write_metrics_csv(result.metrics, csv);
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
        char name[40];
        std::snprintf(name, sizeof name, "checkpoint_epoch%04d.bin", epoch + 1);
        save_model(model, (fs::path(cfg.out_dir) / name).string());
      }
    }
  }

  if (!cfg.out_dir.empty()) {
    save_model(model, (fs::path(cfg.out_dir) / "checkpoint.bin").string());
  }
  return result;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
  out << "epoch,train_loss,train_acc,test_acc,vl1,vl2,l2prime\n";
  for (const MetricsRow& r : rows) {
    out << r.epoch << ',' << fmt17(r.train_loss) << ',' << fmt17(r.train_acc) << ','
        << fmt17(r.test_acc) << ',' << fmt17(r.vl1) << ',' << fmt17(r.vl2) << ','
        << fmt17(r.l2prime) << '\n';
  }
}

namespace {

template <typename F>
double median_time(int reps, F&& body) {
  std::vector<double> times;
  times.reserve(reps);
  body();  // warm-up, untimed
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace

OverheadTimes vr_overhead_bench(const NetworkModel& model, const Batch& batch,
                                const RelKernel& ker, int reps) {
  OverheadTimes t;
  volatile double sink = 0.0;

  // Step 3: VR gradient, weights only, no data dependence.
  t.t_vr = median_time(reps, [&] {
    const VRWeights g = grad_vl_model(model.vr_weights(), ker, VLNorm::l2);
    sink = sink + g.slabs.front().values(0, 0);
  });

  // Step 2: plain L2 gradient over the non-VR weights.
  std::vector<double> l2buf;
  t.t_l2 = median_time(reps, [&] {
    size_t total = 0;
    for (int li = 0; li < static_cast<int>(model.layers().size()); ++li) {
      if (li == model.vr_layer()) continue;
      total += model.params()[li].w.size();
    }
    l2buf.resize(total);
    size_t off = 0;
    for (int li = 0; li < static_cast<int>(model.layers().size()); ++li) {
      if (li == model.vr_layer()) continue;
      for (double w : model.params()[li].w) l2buf[off++] = 2.0 * w;
    }
    sink = sink + l2buf[0];
  });

  // Step 1: classification backprop on the batch.
  Rng rng(1);
  const ForwardCache fc = forward(model, batch, RunMode::train, &rng);
  t.t_backprop = median_time(reps, [&] {
    const GradStore g = backward(model, batch, fc, ker, 0.0, 0.0, 0.0);
    sink = sink + g.layers.back().b[0];
  });

  (void)sink;
  return t;
}

}  // namespace visreg
