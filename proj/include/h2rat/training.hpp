#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "h2rat/model.hpp"
#include "h2rat/scenarios.hpp"

namespace h2rat {

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;  // zero freezes the parameters
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 7;
  std::size_t eval_every = 1;
  std::size_t patience = 10;  // evaluations without improvement before stopping
  // Share of the train split held out for model selection. Zero selects on
  // the fitted samples themselves.
  double validation_fraction = 0.1;
  std::size_t hidden = 32;
  std::size_t attention = 24;
  std::size_t layers = 2;

  // Throws InvalidArgument on non-positive counts or out-of-range rates.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
  double validation_loss = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingSummary {
  std::uint64_t corpus_seed = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double final_train_loss = 0.0;
  double best_validation_accuracy = 0.0;
  double best_validation_loss = 0.0;
  std::vector<EpochRecord> history;
  friend bool operator==(const TrainingSummary&, const TrainingSummary&) = default;
};

struct Checkpoint {
  Model model;  // carries the model dimensions
  Vocabulary vocabulary;
  CorrectionTable corrections;
  TrainConfig config;
  TrainingSummary summary;
};

bool bit_equal(const Checkpoint& a, const Checkpoint& b);

// -log(max(p_ans[label], 1e-12)).
Var loss_cross_entropy(Tape& tape, Var p_ans, std::size_t label);
double loss_cross_entropy(const Tensor& p_ans, std::size_t label);

struct PreparedSample {
  Reminder reminder;
  Tensor features;
  std::size_t label = 0;
};

std::vector<PreparedSample> prepare(const std::vector<Scenario>& scenarios, const Vocabulary& vocab);

struct DatasetScore {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

DatasetScore score(const Model& model, const std::vector<PreparedSample>& samples);

ModelDims dims_for(const Corpus& corpus, const TrainConfig& config);

// Called once per evaluation with the epoch record.
using EpochLogger = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on mean cross-entropy. Returns the best checkpoint by
/// held-out accuracy (ties: lower held-out loss, then earlier epoch), with
/// parameters rounded to float32. Deterministic in (corpus, config).
/// Throws DivergenceError naming the epoch and batch on a non-finite step.
Checkpoint train(const Corpus& corpus, const TrainConfig& config, const EpochLogger& log = {});

// One Adam step with the given gradients (one per model parameter).
class AdamOptimizer {
 public:
  AdamOptimizer(const Model& model, const TrainConfig& config);
  void step(Model& model, const std::vector<Tensor>& grads);
  std::size_t steps() const { return steps_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
};

// Gradients of the mean loss over a batch, accumulated in sample order.
// Returns the summed loss.
double batch_gradients(const Model& model, const std::vector<const PreparedSample*>& batch,
                       std::vector<Tensor>& grads);

// "H2RW" container: magic, u32 version, length-prefixed JSON manifest,
// float32 tensor data in manifest order, CRC32.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace h2rat
