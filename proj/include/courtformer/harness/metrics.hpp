#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "courtformer/data/sequence.hpp"
#include "courtformer/model/sequence_model.hpp"

namespace courtformer::harness {

using model::Task;

struct Metrics {
  double mean_nll = 0.0;
  double perplexity = 1.0;
  double sum_nll = 0.0;
  std::size_t sequences = 0;
  std::size_t predictions = 0;
  double seconds = 0.0;

  // perplexity = exp(sum / predictions).
  static Metrics from_sum(double sum_nll, std::size_t predictions, std::size_t sequences);
};

// Adds per-sequence NLL sums in ascending order, so the result does not
// depend on the order sequences were scored in.
Metrics reduce_sequence_sums(std::vector<double> sums, std::size_t predictions);

// Mean NLL per prediction of `task` over every (sequence, step, entity).
// Task::Both pools the player and ball predictions. Throws UsageError for
// an empty set.
template <typename Real>
Metrics evaluate(const model::SequenceModel<Real>& model, std::span<const data::PlaySequence> sequences, Task task);

// Task P scores of the model when it only sees one player at a time; each
// sequence becomes one sequence per player slot.
template <typename Real>
Metrics evaluate_single_player(const model::SequenceModel<Real>& model,
                               std::span<const data::PlaySequence> sequences);

// Only the t = 0 predictions, from inputs truncated to the first step.
template <typename Real>
Metrics single_frame_eval(const model::SequenceModel<Real>& model, std::span<const data::PlaySequence> sequences,
                          Task task);

// Replaces each sequence's agent ids with distinct ids drawn uniformly from
// the league.
std::vector<data::PlaySequence> swap_players(std::span<const data::PlaySequence> sequences, std::size_t league_size,
                                             data::Rng& rng);

template <typename Real>
Metrics random_player_swap_eval(const model::SequenceModel<Real>& model,
                                std::span<const data::PlaySequence> sequences, Task task, data::Rng& rng);

// Constant predictor from training label frequencies with add-one smoothing.
class MarginalBaseline {
 public:
  // Throws UsageError when there are no training labels.
  static MarginalBaseline fit(std::span<const data::PlaySequence> train, Task task, int label_count);

  const std::vector<double>& probabilities() const { return probabilities_; }
  Task task() const { return task_; }
  double entropy() const;
  Metrics evaluate(std::span<const data::PlaySequence> sequences) const;

 private:
  std::vector<double> probabilities_;
  Task task_ = Task::P;
};

// Labels of `task` stored in a sequence.
std::span<const std::int32_t> labels_for(const data::PlaySequence& seq, Task task);

}  // namespace courtformer::harness
