#pragma once

#include <cstdint>
#include <memory>

#include "courtformer/data/sequence.hpp"
#include "courtformer/model/config.hpp"
#include "courtformer/nn/layers.hpp"

namespace courtformer::model {

// Logit matrices for one sequence. player: [T * P, player labels] with row
// t * P + k; ball: [T, ball labels]. A head the config lacks stays invalid.
template <typename Real>
struct ModelOutput {
  nn::Var<Real> player;
  nn::Var<Real> ball;
};

// Identity embeddings and the two feature MLPs. Produces one d_model token
// per entity and step, ordered t * K + k with the ball (if any) last.
template <typename Real>
class EntityEncoder {
 public:
  EntityEncoder(nn::ParameterStore<Real>& store, const ModelConfig& config, nn::InitRng& rng);

  nn::Var<Real> encode(nn::Tape<Real>& tape, const data::PlaySequence& seq) const;

  // Player tokens only, [T * P, d_model] in t * P + k order, and ball
  // tokens [T, d_model].
  nn::Var<Real> encode_players(nn::Tape<Real>& tape, const data::PlaySequence& seq) const;
  nn::Var<Real> encode_ball(nn::Tape<Real>& tape, const data::PlaySequence& seq) const;

  // Row of the embedding table used for `agent_id`. Throws IndexError for
  // ids outside the league.
  std::uint32_t player_row(std::int32_t agent_id) const;
  std::uint32_t ball_row() const { return identity_ ? static_cast<std::uint32_t>(league_size_) : 1u; }

  nn::Parameter<Real>& table() const { return *table_; }

 private:
  nn::Parameter<Real>* table_ = nullptr;
  nn::Mlp<Real> player_mlp_, ball_mlp_;
  std::size_t league_size_;
  bool identity_;
  Real coordinate_scale_;
};

template <typename Real>
class SequenceModel {
 public:
  explicit SequenceModel(const ModelConfig& config);
  virtual ~SequenceModel() = default;
  SequenceModel(const SequenceModel&) = delete;
  SequenceModel& operator=(const SequenceModel&) = delete;

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore<Real>& store() { return store_; }
  const nn::ParameterStore<Real>& store() const { return store_; }
  std::size_t count_parameters() const { return store_.trainable_count(); }
  const EntityEncoder<Real>& encoder() const { return *encoder_; }

  virtual ModelOutput<Real> forward(nn::Tape<Real>& tape, const data::PlaySequence& seq) const = 0;

  // Summed NLL over the task's predictions.
  nn::Var<Real> loss(nn::Tape<Real>& tape, const data::PlaySequence& seq, Task task) const;
  // T * P for task P, T for task B.
  static std::size_t prediction_count(const data::PlaySequence& seq, Task task);
  static std::span<const std::int32_t> task_labels(const data::PlaySequence& seq, Task task);

  // Logits without gradient bookkeeping; rows as in ModelOutput.
  nn::Tensor<Real> logits(const data::PlaySequence& seq, Task task) const;
  // Softmax of logits(), rows summing to one.
  nn::Tensor<Real> probabilities(const data::PlaySequence& seq, Task task) const;

  // Zeroes the classifier heads, which makes every prediction uniform.
  void zero_heads();

 protected:
  void check_input(const data::PlaySequence& seq) const;
  void check_task(Task task) const;
  nn::Var<Real> head_player(nn::Var<Real> x) const { return head_player_(x); }
  nn::Var<Real> head_ball(nn::Var<Real> x) const { return head_ball_(x); }
  // Create the heads after the body so parameters stay in declaration order.
  void build_heads(nn::InitRng& rng);

  ModelConfig config_;
  nn::ParameterStore<Real> store_;
  std::unique_ptr<EntityEncoder<Real>> encoder_;

 private:
  nn::Linear<Real> head_player_, head_ball_;
};

template <typename Real>
std::unique_ptr<SequenceModel<Real>> make_model(const ModelConfig& config);

}  // namespace courtformer::model
