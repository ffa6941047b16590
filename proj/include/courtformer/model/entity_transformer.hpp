#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "courtformer/masking.hpp"
#include "courtformer/model/sequence_model.hpp"

namespace courtformer::model {

// Per-head weights of one layer for a single sequence plus the per-entity
// temporal sums of one reference row.
struct AttentionReport {
  std::size_t steps = 0;
  std::size_t entities = 0;
  std::vector<nn::Tensor<double>> heads;
  // Indexed by entity slot; the last entry is the ball when present.
  std::vector<double> temporal_sums;
};

// Entity tokens from every step attend to each other under the causal entity
// mask. No positional encoding: slots carry no order.
template <typename Real>
class EntityTransformer final : public SequenceModel<Real> {
 public:
  explicit EntityTransformer(const ModelConfig& config);

  ModelOutput<Real> forward(nn::Tape<Real>& tape, const data::PlaySequence& seq) const override;

  // Weights of `layer`, `head` for the ball token at `ref_step`. Requires a
  // sequence with a ball.
  AttentionReport attention(const data::PlaySequence& seq, std::size_t layer, std::size_t head,
                            std::size_t ref_step) const;

  std::shared_ptr<const EntityMask> mask_for(std::size_t steps, std::size_t entities) const;
  const std::vector<nn::TransformerLayer<Real>>& layers() const { return layers_; }

 private:
  ModelOutput<Real> run(nn::Tape<Real>& tape, const data::PlaySequence& seq, std::size_t capture_layer,
                        nn::AttentionCapture<Real>* capture) const;

  std::vector<nn::TransformerLayer<Real>> layers_;
  mutable std::mutex mask_mutex_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const EntityMask>> masks_;
};

}  // namespace courtformer::model
