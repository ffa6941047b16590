#include "courtformer/model/sequence_model.hpp"

#include "courtformer/errors.hpp"
#include "courtformer/model/entity_transformer.hpp"
#include "courtformer/model/grnn.hpp"

namespace courtformer::model {

using nn::Tensor;
using nn::Var;

template <typename Real>
EntityEncoder<Real>::EntityEncoder(nn::ParameterStore<Real>& store, const ModelConfig& config, nn::InitRng& rng)
    : league_size_(config.league_size),
      identity_(config.identity),
      coordinate_scale_(static_cast<Real>(config.coordinate_scale)) {
  const std::size_t rows = identity_ ? league_size_ + 1 : 2;
  Tensor<Real> t(nn::Shape{rows, config.embedding_dim});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : t.data()) v = static_cast<Real>(normal(rng));
  table_ = &store.add("embedding", std::move(t));
  player_mlp_ = nn::Mlp<Real>(store, "player_mlp", config.embedding_dim + 3, config.player_mlp, rng);
  ball_mlp_ = nn::Mlp<Real>(store, "ball_mlp", config.embedding_dim + 3, config.ball_mlp, rng);
}

template <typename Real>
std::uint32_t EntityEncoder<Real>::player_row(std::int32_t agent_id) const {
  if (agent_id < 0 || static_cast<std::size_t>(agent_id) >= league_size_) {
    throw IndexError("agent id " + std::to_string(agent_id) + " outside the league of " +
                     std::to_string(league_size_));
  }
  return identity_ ? static_cast<std::uint32_t>(agent_id) : 0u;
}

template <typename Real>
Var<Real> EntityEncoder<Real>::encode_players(nn::Tape<Real>& tape, const data::PlaySequence& seq) const {
  const std::size_t steps = seq.steps, p = seq.players();
  std::vector<std::uint32_t> rows;
  rows.reserve(steps * p);
  Tensor<Real> feats(nn::Shape{steps * p, 3});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t k = 0; k < p; ++k) {
      rows.push_back(player_row(seq.agent_ids[k]));
      auto f = feats.row(t * p + k);
      f[0] = static_cast<Real>(seq.x(t, k)) * coordinate_scale_;
      f[1] = static_cast<Real>(seq.y(t, k)) * coordinate_scale_;
      f[2] = static_cast<Real>(seq.front(t, k));
    }
  }
  auto ids = nn::gather_rows(tape.parameter(*table_), std::move(rows));
  return player_mlp_(nn::concat_cols(ids, tape.constant(std::move(feats))));
}

template <typename Real>
Var<Real> EntityEncoder<Real>::encode_ball(nn::Tape<Real>& tape, const data::PlaySequence& seq) const {
  const std::size_t steps = seq.steps;
  Tensor<Real> feats(nn::Shape{steps, 3});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t a = 0; a < 3; ++a) feats.at(t, a) = static_cast<Real>(seq.ball(t, a)) * coordinate_scale_;
  }
  auto ids = nn::gather_rows(tape.parameter(*table_), std::vector<std::uint32_t>(steps, ball_row()));
  return ball_mlp_(nn::concat_cols(ids, tape.constant(std::move(feats))));
}

template <typename Real>
Var<Real> EntityEncoder<Real>::encode(nn::Tape<Real>& tape, const data::PlaySequence& seq) const {
  auto players = encode_players(tape, seq);
  if (!seq.has_ball) return players;
  const std::size_t steps = seq.steps, p = seq.players(), k = p + 1;
  const std::vector<Var<Real>> parts{players, encode_ball(tape, seq)};
  auto stacked = nn::concat_rows<Real>(parts);
  std::vector<std::uint32_t> order(steps * k);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < p; ++j) order[t * k + j] = static_cast<std::uint32_t>(t * p + j);
    order[t * k + p] = static_cast<std::uint32_t>(steps * p + t);
  }
  return nn::gather_rows(stacked, std::move(order));
}

template <typename Real>
SequenceModel<Real>::SequenceModel(const ModelConfig& config) : config_(config) {
  config_.validate();
}

template <typename Real>
void SequenceModel<Real>::build_heads(nn::InitRng& rng) {
  if (config_.predicts_players()) {
    head_player_ = nn::Linear<Real>(store_, "head_player", config_.d_model,
                                    static_cast<std::size_t>(config_.player_labels()), rng);
  }
  if (config_.predicts_ball()) {
    head_ball_ = nn::Linear<Real>(store_, "head_ball", config_.d_model,
                                  static_cast<std::size_t>(config_.ball_labels()), rng);
  }
}

template <typename Real>
void SequenceModel<Real>::check_input(const data::PlaySequence& seq) const {
  if (seq.steps == 0 || seq.players() == 0) throw UsageError("sequence has no steps or no players");
  if (seq.player_xy.size() != (seq.steps + 1) * seq.players() * 2 ||
      seq.frontcourt.size() != seq.steps * seq.players() ||
      (seq.has_ball && seq.ball_xyz.size() != (seq.steps + 1) * 3)) {
    throw DimensionError("sequence arrays do not match its step and player counts");
  }
}

template <typename Real>
void SequenceModel<Real>::check_task(Task task) const {
  if (task == Task::Both) throw UsageError("choose task P or B for a loss or prediction");
  if (task == Task::P && !config_.predicts_players()) throw UsageError("model was built without the player head");
  if (task == Task::B && !config_.predicts_ball()) throw UsageError("model was built without the ball head");
}

template <typename Real>
std::size_t SequenceModel<Real>::prediction_count(const data::PlaySequence& seq, Task task) {
  return task == Task::P ? seq.steps * seq.players() : seq.steps;
}

template <typename Real>
std::span<const std::int32_t> SequenceModel<Real>::task_labels(const data::PlaySequence& seq, Task task) {
  if (task == Task::B) {
    if (!seq.has_ball || seq.ball_labels.size() != seq.steps) throw UsageError("sequence has no ball labels");
    return seq.ball_labels;
  }
  if (seq.player_labels.size() != seq.steps * seq.players()) throw UsageError("sequence has no player labels");
  return seq.player_labels;
}

template <typename Real>
Var<Real> SequenceModel<Real>::loss(nn::Tape<Real>& tape, const data::PlaySequence& seq, Task task) const {
  check_task(task);
  const auto labels = task_labels(seq, task);
  auto out = forward(tape, seq);
  return nn::softmax_cross_entropy(task == Task::P ? out.player : out.ball, labels);
}

template <typename Real>
Tensor<Real> SequenceModel<Real>::logits(const data::PlaySequence& seq, Task task) const {
  check_task(task);
  if (task == Task::B && !seq.has_ball) throw UsageError("task B needs a sequence with a ball");
  nn::Tape<Real> tape(false);
  auto out = forward(tape, seq);
  return (task == Task::P ? out.player : out.ball).value();
}

template <typename Real>
Tensor<Real> SequenceModel<Real>::probabilities(const data::PlaySequence& seq, Task task) const {
  return nn::softmax_rows(logits(seq, task));
}

template <typename Real>
void SequenceModel<Real>::zero_heads() {
  for (nn::Linear<Real>* h : {&head_player_, &head_ball_}) {
    if (!h->built()) continue;
    h->weight().value.fill(Real{0});
    h->bias().value.fill(Real{0});
  }
}

template <typename Real>
std::unique_ptr<SequenceModel<Real>> make_model(const ModelConfig& config) {
  if (config.kind == ModelKind::Grnn) return std::make_unique<GrnnModel<Real>>(config);
  return std::make_unique<EntityTransformer<Real>>(config);
}

template class EntityEncoder<float>;
template class EntityEncoder<double>;
template class SequenceModel<float>;
template class SequenceModel<double>;
template std::unique_ptr<SequenceModel<float>> make_model<float>(const ModelConfig&);
template std::unique_ptr<SequenceModel<double>> make_model<double>(const ModelConfig&);

}  // namespace courtformer::model
