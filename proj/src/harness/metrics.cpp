#include "courtformer/harness/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "courtformer/errors.hpp"

namespace courtformer::harness {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

template <typename Real>
double rows_nll(const nn::Tensor<Real>& logits, std::span<const std::int32_t> labels) {
  const std::size_t width = logits.dim(1);
  auto all = logits.data();
  double total = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    total += nn::log_softmax_nll<Real>(all.subspan(r * width, width), labels[r]);
  }
  return total;
}

// Summed NLL of one sequence and its prediction count, from one forward pass.
template <typename Real>
std::pair<double, std::size_t> sequence_nll(const model::SequenceModel<Real>& m, const data::PlaySequence& seq,
                                            std::size_t steps_scored, Task task) {
  const auto& config = m.config();
  if ((task != Task::B && !config.predicts_players()) || (task != Task::P && !config.predicts_ball())) {
    throw UsageError(std::string("model was trained for task ") + model::task_name(config.task) +
                     ", not task " + model::task_name(task));
  }
  nn::Tape<Real> tape(false);
  const auto out = m.forward(tape, seq);
  double total = 0.0;
  std::size_t count = 0;
  if (task != Task::B) {
    auto labels = labels_for(seq, Task::P).first(steps_scored * seq.players());
    total += rows_nll(out.player.value(), labels);
    count += labels.size();
  }
  if (task != Task::P) {
    auto labels = labels_for(seq, Task::B).first(steps_scored);
    total += rows_nll(out.ball.value(), labels);
    count += labels.size();
  }
  if (!std::isfinite(total)) {
    throw NumericError("non-finite NLL on sequence " + seq.game_id + "@" + std::to_string(seq.start_frame));
  }
  return {total, count};
}

void require_nonempty(std::span<const data::PlaySequence> sequences) {
  if (sequences.empty()) throw UsageError("evaluation needs at least one sequence");
}

}  // namespace

Metrics Metrics::from_sum(double sum, std::size_t predictions, std::size_t sequences) {
  if (predictions == 0) throw UsageError("metrics need at least one prediction");
  Metrics m;
  m.sum_nll = sum;
  m.predictions = predictions;
  m.sequences = sequences;
  m.mean_nll = sum / static_cast<double>(predictions);
  m.perplexity = std::exp(m.mean_nll);
  return m;
}

Metrics reduce_sequence_sums(std::vector<double> sums, std::size_t predictions) {
  std::sort(sums.begin(), sums.end());
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  return Metrics::from_sum(total, predictions, sums.size());
}

std::span<const std::int32_t> labels_for(const data::PlaySequence& seq, Task task) {
  return model::SequenceModel<float>::task_labels(seq, task);
}

template <typename Real>
Metrics evaluate(const model::SequenceModel<Real>& m, std::span<const data::PlaySequence> sequences, Task task) {
  require_nonempty(sequences);
  const auto start = Clock::now();
  std::vector<double> sums;
  sums.reserve(sequences.size());
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    auto [sum, n] = sequence_nll(m, seq, seq.steps, task);
    sums.push_back(sum);
    count += n;
  }
  auto metrics = reduce_sequence_sums(std::move(sums), count);
  metrics.seconds = elapsed(start);
  return metrics;
}

template <typename Real>
Metrics evaluate_single_player(const model::SequenceModel<Real>& m, std::span<const data::PlaySequence> sequences) {
  require_nonempty(sequences);
  const auto start = Clock::now();
  std::vector<double> sums;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    for (std::size_t k = 0; k < seq.players(); ++k) {
      auto [sum, n] = sequence_nll(m, seq.single_player(k), seq.steps, Task::P);
      sums.push_back(sum);
      count += n;
    }
  }
  auto metrics = reduce_sequence_sums(std::move(sums), count);
  metrics.sequences = sequences.size();
  metrics.seconds = elapsed(start);
  return metrics;
}

template <typename Real>
Metrics single_frame_eval(const model::SequenceModel<Real>& m, std::span<const data::PlaySequence> sequences,
                          Task task) {
  require_nonempty(sequences);
  const auto start = Clock::now();
  std::vector<double> sums;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    auto [sum, n] = sequence_nll(m, seq.truncated(1), 1, task);
    sums.push_back(sum);
    count += n;
  }
  auto metrics = reduce_sequence_sums(std::move(sums), count);
  metrics.seconds = elapsed(start);
  return metrics;
}

std::vector<data::PlaySequence> swap_players(std::span<const data::PlaySequence> sequences, std::size_t league_size,
                                             data::Rng& rng) {
  std::vector<std::int32_t> pool(league_size);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<data::PlaySequence> out(sequences.begin(), sequences.end());
  for (auto& seq : out) {
    if (seq.players() > league_size) {
      throw UsageError("cannot draw " + std::to_string(seq.players()) + " distinct players from a league of " +
                       std::to_string(league_size));
    }
    // Partial Fisher-Yates: the first players() entries are a uniform draw.
    for (std::size_t i = 0; i < seq.players(); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, league_size - 1);
      std::swap(pool[i], pool[pick(rng)]);
      seq.agent_ids[i] = pool[i];
    }
  }
  return out;
}

template <typename Real>
Metrics random_player_swap_eval(const model::SequenceModel<Real>& m, std::span<const data::PlaySequence> sequences,
                                Task task, data::Rng& rng) {
  const auto swapped = swap_players(sequences, m.config().league_size, rng);
  return evaluate(m, std::span<const data::PlaySequence>(swapped), task);
}

MarginalBaseline MarginalBaseline::fit(std::span<const data::PlaySequence> train, Task task, int label_count) {
  if (task == Task::Both) throw UsageError("the marginal baseline predicts one task at a time");
  if (label_count <= 0) throw UsageError("label count must be positive");
  std::vector<double> counts(static_cast<std::size_t>(label_count), 1.0);
  std::size_t seen = 0;
  for (const auto& seq : train) {
    for (auto label : labels_for(seq, task)) {
      if (label < 0 || label >= label_count) {
        throw IndexError("label " + std::to_string(label) + " outside [0, " + std::to_string(label_count) + ")");
      }
      counts[static_cast<std::size_t>(label)] += 1.0;
      ++seen;
    }
  }
  if (seen == 0) throw UsageError("the marginal baseline needs training labels");
  const double total = static_cast<double>(seen) + label_count;
  MarginalBaseline b;
  b.task_ = task;
  b.probabilities_.reserve(counts.size());
  for (double c : counts) b.probabilities_.push_back(c / total);
  return b;
}

double MarginalBaseline::entropy() const {
  double h = 0.0;
  for (double p : probabilities_) h -= p * std::log(p);
  return h;
}

Metrics MarginalBaseline::evaluate(std::span<const data::PlaySequence> sequences) const {
  require_nonempty(sequences);
  const auto start = Clock::now();
  std::vector<double> sums;
  std::size_t count = 0;
  for (const auto& seq : sequences) {
    double total = 0.0;
    for (auto label : labels_for(seq, task_)) {
      total += nn::cross_entropy_nll(std::span<const double>(probabilities_), label);
      ++count;
    }
    sums.push_back(total);
  }
  auto metrics = reduce_sequence_sums(std::move(sums), count);
  metrics.seconds = elapsed(start);
  return metrics;
}

#define COURTFORMER_INSTANTIATE_METRICS(Real)                                                                 \
  template Metrics evaluate(const model::SequenceModel<Real>&, std::span<const data::PlaySequence>, Task);    \
  template Metrics evaluate_single_player(const model::SequenceModel<Real>&,                                 \
                                          std::span<const data::PlaySequence>);                              \
  template Metrics single_frame_eval(const model::SequenceModel<Real>&, std::span<const data::PlaySequence>, \
                                     Task);                                                                  \
  template Metrics random_player_swap_eval(const model::SequenceModel<Real>&,                                \
                                           std::span<const data::PlaySequence>, Task, data::Rng&);

COURTFORMER_INSTANTIATE_METRICS(float)
COURTFORMER_INSTANTIATE_METRICS(double)

}  // namespace courtformer::harness
