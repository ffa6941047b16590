#include "courtformer/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "courtformer/errors.hpp"

namespace courtformer::harness {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

std::string sequence_name(const data::PlaySequence& seq) {
  return seq.game_id + "@" + std::to_string(seq.start_frame);
}

template <typename Real>
std::vector<nn::Tensor<Real>> snapshot(const model::SequenceModel<Real>& m) {
  std::vector<nn::Tensor<Real>> out;
  for (const auto* p : m.store().all()) out.push_back(p->value);
  return out;
}

template <typename Real>
void restore(model::SequenceModel<Real>& m, const std::vector<nn::Tensor<Real>>& values) {
  auto params = m.store().all();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
  if (samples_per_epoch == 0) fail("samples_per_epoch must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (patience == 0) fail("patience must be positive");
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (!(reduced_learning_rate > 0) || !(reduced_learning_rate < learning_rate)) {
    fail("reduced_learning_rate must be positive and below learning_rate");
  }
  if (!(max_seconds >= 0)) fail("max_seconds must be non-negative");
  if (!(rotate_probability >= 0 && rotate_probability <= 1)) fail("rotate_probability must lie in [0, 1]");
}

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k{
      "train.samples_per_epoch", "train.max_epochs", "train.max_seconds",        "train.learning_rate",
      "train.reduced_learning_rate", "train.patience", "train.seed",            "train.batch_size",
      "train.rotate_probability", "train.single_player"};
  return k;
}

TrainConfig TrainConfig::from_settings(const Settings& s, const TrainConfig& base) {
  TrainConfig c = base;
  c.samples_per_epoch = s.get_uint("train.samples_per_epoch", c.samples_per_epoch);
  c.max_epochs = s.get_uint("train.max_epochs", c.max_epochs);
  c.max_seconds = s.get_double("train.max_seconds", c.max_seconds);
  c.learning_rate = s.get_double("train.learning_rate", c.learning_rate);
  c.reduced_learning_rate = s.get_double("train.reduced_learning_rate", c.reduced_learning_rate);
  c.patience = s.get_uint("train.patience", c.patience);
  c.seed = s.get_uint("train.seed", c.seed);
  c.batch_size = s.get_uint("train.batch_size", c.batch_size);
  c.rotate_probability = s.get_double("train.rotate_probability", c.rotate_probability);
  c.single_player = s.get_bool("train.single_player", c.single_player);
  c.validate();
  return c;
}

Settings TrainConfig::to_settings() const {
  Settings s;
  s.set("train.samples_per_epoch", std::to_string(samples_per_epoch));
  s.set("train.max_epochs", std::to_string(max_epochs));
  s.set("train.max_seconds", format_double(max_seconds));
  s.set("train.learning_rate", format_double(learning_rate));
  s.set("train.reduced_learning_rate", format_double(reduced_learning_rate));
  s.set("train.patience", std::to_string(patience));
  s.set("train.seed", std::to_string(seed));
  s.set("train.batch_size", std::to_string(batch_size));
  s.set("train.rotate_probability", format_double(rotate_probability));
  s.set("train.single_player", single_player ? "true" : "false");
  return s;
}

TrainConfig TrainConfig::full() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.samples_per_epoch = 1000;
  c.max_epochs = 30;
  c.learning_rate = 1e-3;
  c.reduced_learning_rate = 1e-4;
  c.patience = 4;
  return c;
}

PlateauSchedule::PlateauSchedule(double initial, double reduced, std::size_t patience)
    : initial_rate_(initial),
      reduced_rate_(reduced),
      patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw ConfigError("plateau patience must be positive");
}

bool PlateauSchedule::observe(double validation_loss) {
  if (validation_loss < best_) {
    best_ = validation_loss;
    stale_ = 0;
    return true;
  }
  if (++stale_ < patience_) return false;
  if (reduced_) {
    exhausted_ = true;
  } else {
    reduced_ = true;
    stale_ = 0;
  }
  return false;
}

void write_epoch_csv_header(std::ostream& out) { out << "epoch,train_nll,val_nll,val_pp,lr,seconds\n"; }

void write_epoch_csv_row(std::ostream& out, const EpochRecord& r) {
  out << r.epoch << ',' << format_double(r.train_nll) << ',' << format_double(r.val_nll) << ','
      << format_double(r.val_pp) << ',' << format_double(r.learning_rate) << ',' << format_double(r.seconds)
      << '\n';
}

template <typename Real>
Metrics validation_metrics(const model::SequenceModel<Real>& m, std::span<const data::PlaySequence> validation,
                           const TrainConfig& config) {
  if (config.single_player) return evaluate_single_player(m, validation);
  return evaluate(m, validation, m.config().task);
}

template <typename Real>
double train_step(model::SequenceModel<Real>& m, nn::Adam<Real>& optimizer, std::span<const data::PlaySequence> batch) {
  if (batch.empty()) throw UsageError("train_step needs a non-empty batch");
  const auto& config = m.config();
  std::size_t predictions = 0;
  for (const auto& seq : batch) {
    if (config.predicts_players()) predictions += seq.steps * seq.players();
    if (config.predicts_ball()) predictions += seq.steps;
  }
  const Real weight = static_cast<Real>(1.0 / static_cast<double>(predictions));
  optimizer.zero_grad();
  double total = 0.0;
  for (const auto& seq : batch) {
    nn::Tape<Real> tape;
    const auto out = m.forward(tape, seq);
    nn::Var<Real> loss;
    if (config.predicts_players()) loss = nn::softmax_cross_entropy(out.player, labels_for(seq, Task::P));
    if (config.predicts_ball()) {
      auto ball = nn::softmax_cross_entropy(out.ball, labels_for(seq, Task::B));
      loss = loss.valid() ? nn::add(loss, ball) : ball;
    }
    const double value = static_cast<double>(loss.value()[0]);
    if (!std::isfinite(value)) throw NumericError("non-finite training loss on sequence " + sequence_name(seq));
    tape.backward(nn::scale(loss, weight));
    total += value;
  }
  optimizer.step();
  return total / static_cast<double>(predictions);
}

template <typename Real>
TrainResult train(model::SequenceModel<Real>& m, std::span<const data::GameRecord> train_games,
                  std::span<const data::PlaySequence> validation, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train_games.empty()) throw UsageError("training needs at least one game");
  if (validation.empty()) throw UsageError("training needs validation sequences");
  if (config.single_player && m.config().task != Task::P) {
    throw ConfigError("single-player training only supports task P");
  }

  data::Rng rng(config.seed);
  data::SamplerOptions sampler;
  sampler.rotate_probability = config.rotate_probability;
  nn::AdamOptions adam;
  adam.learning_rate = config.learning_rate;
  nn::Adam<Real> optimizer(m.store().all(), adam);
  PlateauSchedule schedule(config.learning_rate, config.reduced_learning_rate, config.patience);

  TrainResult result;
  auto best = snapshot(m);
  const auto started = Clock::now();
  std::size_t step = 0;
  std::vector<data::PlaySequence> batch;
  for (std::size_t epoch = 1; config.max_epochs == 0 || epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    EpochRecord record;
    record.epoch = epoch;
    record.learning_rate = schedule.learning_rate();
    optimizer.set_learning_rate(record.learning_rate);

    double weighted = 0.0;
    std::size_t sampled = 0;
    while (sampled < config.samples_per_epoch) {
      batch.clear();
      for (std::size_t b = 0; b < config.batch_size && sampled < config.samples_per_epoch; ++b, ++sampled) {
        auto seq = data::sample_training_sequence(train_games, rng, sampler);
        if (config.single_player) {
          std::uniform_int_distribution<std::size_t> slot(0, seq.players() - 1);
          seq = seq.single_player(slot(rng));
        }
        batch.push_back(std::move(seq));
      }
      ++step;
      try {
        weighted += train_step(m, optimizer, std::span<const data::PlaySequence>(batch)) *
                    static_cast<double>(batch.size());
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ": " + e.what());
      }
    }
    record.train_nll = weighted / static_cast<double>(sampled);

    const auto val = validation_metrics(m, validation, config);
    record.val_nll = val.mean_nll;
    record.val_pp = val.perplexity;
    record.seconds = elapsed(epoch_start);
    result.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (schedule.observe(val.mean_nll)) {
      best = snapshot(m);
      result.best_epoch = epoch;
      result.best_val_nll = val.mean_nll;
    }
    if (schedule.exhausted()) break;
    if (config.max_seconds > 0 && elapsed(started) >= config.max_seconds) break;
  }
  restore(m, best);
  return result;
}

const AblationRow& AblationReport::find(const std::string& arm, Task task) const {
  for (const auto& r : rows) {
    if (r.arm == arm && r.task == task) return r;
  }
  throw UsageError("ablation report has no arm " + arm + " for task " + model::task_name(task));
}

void AblationReport::write_csv(std::ostream& out) const {
  out << "arm,task,nll,pp\n";
  for (const auto& r : rows) {
    out << r.arm << ',' << model::task_name(r.task) << ',' << format_double(r.metrics.mean_nll) << ','
        << format_double(r.metrics.perplexity) << '\n';
  }
}

AblationReport run_ablations(std::span<const data::GameRecord> train_games,
                             std::span<const data::PlaySequence> validation, std::span<const data::PlaySequence> test,
                             const model::ModelConfig& base, const TrainConfig& train_config,
                             const AblationOptions& options,
                             const std::function<void(const std::string&, const EpochRecord&)>& on_epoch) {
  if (base.kind != model::ModelKind::Transformer) throw ConfigError("ablations run on the transformer model");
  struct Arm {
    std::string name;
    Task task;
    bool identity;
    bool single_player;
  };
  std::vector<Arm> arms;
  if (options.task_p) {
    arms.push_back({"1-NI", Task::P, false, true});
    arms.push_back({"10-NI", Task::P, false, false});
    arms.push_back({"10-I", Task::P, true, false});
  }
  if (options.task_b) {
    arms.push_back({"10-NI", Task::B, false, false});
    arms.push_back({"10-I", Task::B, true, false});
  }

  AblationReport report;
  for (const auto& arm : arms) {
    auto config = base;
    config.task = arm.task;
    config.identity = arm.identity;
    auto tc = train_config;
    tc.single_player = arm.single_player;
    auto m = model::make_model<float>(config);
    std::function<void(const EpochRecord&)> hook;
    if (on_epoch) hook = [&](const EpochRecord& r) { on_epoch(arm.name + "/" + model::task_name(arm.task), r); };
    train(*m, train_games, validation, tc, hook);
    AblationRow row{arm.name, arm.task, {}};
    row.metrics = arm.single_player ? evaluate_single_player(*m, test) : evaluate(*m, test, arm.task);
    report.rows.push_back(std::move(row));
    if (options.on_trained) options.on_trained(arm.name, arm.task, *m);
  }
  return report;
}

template <typename Real>
double seconds_per_epoch(model::SequenceModel<Real>& m, std::span<const data::PlaySequence> sequences,
                         std::size_t epochs, double learning_rate) {
  if (sequences.empty() || epochs == 0) throw UsageError("timing needs sequences and at least one epoch");
  nn::AdamOptions adam;
  adam.learning_rate = learning_rate;
  nn::Adam<Real> optimizer(m.store().all(), adam);
  const auto start = Clock::now();
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < sequences.size(); ++i) train_step(m, optimizer, sequences.subspan(i, 1));
  }
  return elapsed(start) / static_cast<double>(epochs);
}

SpeedResult speed_benchmark(model::SequenceModel<float>& transformer, model::SequenceModel<float>& grnn,
                            std::span<const data::GameRecord> games, std::size_t samples_per_epoch,
                            std::size_t epochs, std::uint64_t seed, double learning_rate) {
  SpeedResult r;
  r.transformer_parameters = transformer.count_parameters();
  r.grnn_parameters = grnn.count_parameters();
  const double a = static_cast<double>(r.transformer_parameters);
  const double b = static_cast<double>(r.grnn_parameters);
  if (std::abs(a - b) > 0.1 * a) {
    throw ConfigError("speed benchmark needs parameter counts within 10%: " + std::to_string(r.transformer_parameters) +
                      " vs " + std::to_string(r.grnn_parameters));
  }
  if (transformer.config().task != grnn.config().task) throw ConfigError("speed benchmark models predict different tasks");
  if (games.empty()) throw UsageError("speed benchmark needs at least one game");

  data::Rng rng(seed);
  std::vector<data::PlaySequence> sequences;
  sequences.reserve(samples_per_epoch);
  for (std::size_t i = 0; i < samples_per_epoch; ++i) sequences.push_back(data::sample_training_sequence(games, rng));
  r.transformer_seconds = seconds_per_epoch(transformer, std::span<const data::PlaySequence>(sequences), epochs,
                                            learning_rate);
  r.grnn_seconds = seconds_per_epoch(grnn, std::span<const data::PlaySequence>(sequences), epochs, learning_rate);
  return r;
}

#define COURTFORMER_INSTANTIATE_TRAIN(Real)                                                                    \
  template Metrics validation_metrics(const model::SequenceModel<Real>&, std::span<const data::PlaySequence>,  \
                                      const TrainConfig&);                                                     \
  template double train_step(model::SequenceModel<Real>&, nn::Adam<Real>&, std::span<const data::PlaySequence>); \
  template TrainResult train(model::SequenceModel<Real>&, std::span<const data::GameRecord>,                   \
                             std::span<const data::PlaySequence>, const TrainConfig&,                          \
                             const std::function<void(const EpochRecord&)>&);                                  \
  template double seconds_per_epoch(model::SequenceModel<Real>&, std::span<const data::PlaySequence>,          \
                                    std::size_t, double);

COURTFORMER_INSTANTIATE_TRAIN(float)
COURTFORMER_INSTANTIATE_TRAIN(double)

}  // namespace courtformer::harness
