#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "courtformer/config.hpp"
#include "courtformer/data/sequence.hpp"
#include "courtformer/harness/metrics.hpp"
#include "courtformer/model/sequence_model.hpp"
#include "courtformer/nn/adam.hpp"

namespace courtformer::harness {

struct TrainConfig {
  std::size_t samples_per_epoch = 20000;
  // Zero means no limit. Training also ends once the reduced learning rate
  // has seen `patience` epochs without improvement.
  std::size_t max_epochs = 0;
  double max_seconds = 0.0;
  double learning_rate = 1e-6;
  double reduced_learning_rate = 1e-7;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  // Sequences per optimizer step.
  std::size_t batch_size = 1;
  double rotate_probability = 0.5;
  // Train and validate on one random player at a time, without the ball.
  bool single_player = false;

  void validate() const;

  static const std::vector<std::string>& keys();
  // Reads the `train.` keys on top of `base`.
  static TrainConfig from_settings(const Settings& settings, const TrainConfig& base);
  Settings to_settings() const;

  // The published schedule: 20,000 samples per epoch, lr 1e-6 then 1e-7.
  static TrainConfig full();
  // Short epochs and a larger learning rate for single-core runs.
  static TrainConfig desk();
};

// Learning rate 'initial' until `patience` consecutive epochs fail to beat
// the best validation loss, then `reduced` for the rest of training. The
// first epoch at the reduced rate is epoch patience + 1 of the plateau.
class PlateauSchedule {
 public:
  PlateauSchedule(double initial, double reduced, std::size_t patience);

  double learning_rate() const { return reduced_ ? reduced_rate_ : initial_rate_; }
  bool reduced() const { return reduced_; }
  // True once the reduced rate has gone `patience` epochs without a new best.
  bool exhausted() const { return exhausted_; }
  double best() const { return best_; }
  std::size_t epochs_since_best() const { return stale_; }

  // Records one epoch's validation loss; returns true for a new best.
  bool observe(double validation_loss);

 private:
  double initial_rate_, reduced_rate_;
  std::size_t patience_;
  double best_;
  std::size_t stale_ = 0;
  bool reduced_ = false;
  bool exhausted_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  double val_pp = 0.0;
  double learning_rate = 0.0;
  double seconds = 0.0;
};

void write_epoch_csv_header(std::ostream& out);
void write_epoch_csv_row(std::ostream& out, const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> epochs;
  // 1-based epoch whose parameters the model holds after training.
  std::size_t best_epoch = 0;
  double best_val_nll = 0.0;
};

// Validation score used for model selection, following
// TrainConfig::single_player.
template <typename Real>
Metrics validation_metrics(const model::SequenceModel<Real>& model, std::span<const data::PlaySequence> validation,
                           const TrainConfig& config);

// Adam on the mean NLL per prediction of the model's task. Leaves the model
// at its best validation epoch. `on_epoch` (optional) sees every record as
// it is produced. Throws NumericError naming the step and sequence when a
// loss is not finite.
template <typename Real>
TrainResult train(model::SequenceModel<Real>& model, std::span<const data::GameRecord> train_games,
                  std::span<const data::PlaySequence> validation, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// One optimizer step on a fixed batch; returns its mean NLL per prediction.
template <typename Real>
double train_step(model::SequenceModel<Real>& model, nn::Adam<Real>& optimizer,
                  std::span<const data::PlaySequence> batch);

struct AblationRow {
  std::string arm;
  Task task = Task::P;
  Metrics metrics;
};

struct AblationReport {
  std::vector<AblationRow> rows;

  // Throws UsageError if the arm was not run.
  const AblationRow& find(const std::string& arm, Task task) const;
  void write_csv(std::ostream& out) const;
};

struct AblationOptions {
  bool task_p = true;
  bool task_b = true;
  // Called with each arm's trained model before it is discarded.
  std::function<void(const std::string& arm, model::Task task, model::SequenceModel<float>& trained)> on_trained;
};

// Task P arms 1-NI (one player, no identity), 10-NI and 10-I; Task B arms
// 10-NI and 10-I. Every arm starts from the same seeds and is scored on the
// same test sequences.
AblationReport run_ablations(std::span<const data::GameRecord> train_games,
                             std::span<const data::PlaySequence> validation,
                             std::span<const data::PlaySequence> test, const model::ModelConfig& base,
                             const TrainConfig& train_config, const AblationOptions& options = {},
                             const std::function<void(const std::string& arm, const EpochRecord&)>& on_epoch = {});

struct SpeedResult {
  double transformer_seconds = 0.0;
  double grnn_seconds = 0.0;
  std::size_t transformer_parameters = 0;
  std::size_t grnn_parameters = 0;
};

// Mean wall-clock seconds per training epoch over `sequences`.
template <typename Real>
double seconds_per_epoch(model::SequenceModel<Real>& model, std::span<const data::PlaySequence> sequences,
                         std::size_t epochs, double learning_rate);

// Both models train on the same sampled sequences. Throws ConfigError when
// their parameter counts differ by more than 10%.
SpeedResult speed_benchmark(model::SequenceModel<float>& transformer, model::SequenceModel<float>& grnn,
                            std::span<const data::GameRecord> games, std::size_t samples_per_epoch,
                            std::size_t epochs, std::uint64_t seed, double learning_rate = 1e-3);

}  // namespace courtformer::harness
