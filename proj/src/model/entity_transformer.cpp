#include "courtformer/model/entity_transformer.hpp"

#include "courtformer/errors.hpp"

namespace courtformer::model {

using nn::Var;

template <typename Real>
EntityTransformer<Real>::EntityTransformer(const ModelConfig& config) : SequenceModel<Real>(config) {
  if (config.kind != ModelKind::Transformer) throw ConfigError("EntityTransformer needs model.kind = transformer");
  nn::InitRng rng(config.init_seed);
  this->encoder_ = std::make_unique<EntityEncoder<Real>>(this->store_, this->config_, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    layers_.emplace_back(this->store_, "layer" + std::to_string(l), config.d_model, config.heads, config.d_ff, rng);
  }
  this->build_heads(rng);
}

template <typename Real>
std::shared_ptr<const EntityMask> EntityTransformer<Real>::mask_for(std::size_t steps, std::size_t entities) const {
  std::lock_guard<std::mutex> lock(mask_mutex_);
  auto& slot = masks_[{steps, entities}];
  if (!slot) slot = std::make_shared<const EntityMask>(build_causal_entity_mask(steps, entities));
  return slot;
}

template <typename Real>
ModelOutput<Real> EntityTransformer<Real>::run(nn::Tape<Real>& tape, const data::PlaySequence& seq,
                                               std::size_t capture_layer,
                                               nn::AttentionCapture<Real>* capture) const {
  this->check_input(seq);
  const std::size_t steps = seq.steps, p = seq.players(), k = seq.entities();
  // The cache keeps the mask alive for any backward pass over this tape.
  const auto mask = mask_for(steps, k);
  auto h = this->encoder_->encode(tape, seq);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l](h, mask->matrix(), l == capture_layer ? capture : nullptr);
  }
  ModelOutput<Real> out;
  if (this->config_.predicts_players()) {
    std::vector<std::uint32_t> rows;
    rows.reserve(steps * p);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < p; ++j) rows.push_back(static_cast<std::uint32_t>(t * k + j));
    }
    out.player = this->head_player(nn::gather_rows(h, std::move(rows)));
  }
  if (this->config_.predicts_ball() && seq.has_ball) {
    std::vector<std::uint32_t> rows;
    for (std::size_t t = 0; t < steps; ++t) rows.push_back(static_cast<std::uint32_t>(t * k + p));
    out.ball = this->head_ball(nn::gather_rows(h, std::move(rows)));
  }
  return out;
}

template <typename Real>
ModelOutput<Real> EntityTransformer<Real>::forward(nn::Tape<Real>& tape, const data::PlaySequence& seq) const {
  return run(tape, seq, layers_.size(), nullptr);
}

template <typename Real>
AttentionReport EntityTransformer<Real>::attention(const data::PlaySequence& seq, std::size_t layer,
                                                   std::size_t head, std::size_t ref_step) const {
  if (layer >= layers_.size()) {
    throw IndexError("layer " + std::to_string(layer) + " out of range [0, " + std::to_string(layers_.size()) + ")");
  }
  if (head >= this->config_.heads) {
    throw IndexError("head " + std::to_string(head) + " out of range [0, " + std::to_string(this->config_.heads) +
                     ")");
  }
  if (!seq.has_ball) throw UsageError("attention report needs a sequence with a ball");
  if (ref_step >= seq.steps) {
    throw IndexError("step " + std::to_string(ref_step) + " out of range [0, " + std::to_string(seq.steps) + ")");
  }
  nn::Tape<Real> tape(false);
  nn::AttentionCapture<Real> capture;
  run(tape, seq, layer, &capture);
  AttentionReport report;
  report.steps = seq.steps;
  report.entities = seq.entities();
  for (const auto& w : capture.weights) report.heads.push_back(w.template cast<double>());
  const auto& w = report.heads[head];
  const std::size_t k = seq.entities();
  const std::size_t ref = ref_step * k + seq.players();
  report.temporal_sums.assign(k, 0.0);
  for (std::size_t t = 0; t < seq.steps; ++t) {
    for (std::size_t e = 0; e < k; ++e) report.temporal_sums[e] += w.at(ref, t * k + e);
  }
  return report;
}

template class EntityTransformer<float>;
template class EntityTransformer<double>;

}  // namespace courtformer::model
