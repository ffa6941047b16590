#pragma once

#include "courtformer/model/sequence_model.hpp"

namespace courtformer::model {

// Graph recurrent baseline. Per step, messages TFF_e(v_i + v_j) over the
// fully connected entity graph are averaged per receiver and passed through
// TFF_v; a GRU whose six weight matrices are TFF blocks carries a hidden
// state per entity (initially zero). The player head reads hidden states.
template <typename Real>
class GrnnModel final : public SequenceModel<Real> {
 public:
  explicit GrnnModel(const ModelConfig& config);

  ModelOutput<Real> forward(nn::Tape<Real>& tape, const data::PlaySequence& seq) const override;

 private:
  nn::TffBlock<Real> edge_, node_;
  // update gate (input, hidden), reset gate (input, hidden), candidate (input, hidden)
  nn::TffBlock<Real> z_in_, z_hidden_, r_in_, r_hidden_, c_in_, c_hidden_;
};

}  // namespace courtformer::model
