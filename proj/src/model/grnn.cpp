#include "courtformer/model/grnn.hpp"

#include "courtformer/errors.hpp"

namespace courtformer::model {

using nn::Var;

template <typename Real>
GrnnModel<Real>::GrnnModel(const ModelConfig& config) : SequenceModel<Real>(config) {
  if (config.kind != ModelKind::Grnn) throw ConfigError("GrnnModel needs model.kind = grnn");
  nn::InitRng rng(config.init_seed);
  this->encoder_ = std::make_unique<EntityEncoder<Real>>(this->store_, this->config_, rng);
  auto& s = this->store_;
  const std::size_t d = config.d_model, hid = config.grnn_hidden;
  edge_ = nn::TffBlock<Real>(s, "edge", d, hid, rng);
  node_ = nn::TffBlock<Real>(s, "node", d, hid, rng);
  z_in_ = nn::TffBlock<Real>(s, "gru.z_in", d, hid, rng);
  z_hidden_ = nn::TffBlock<Real>(s, "gru.z_hidden", d, hid, rng);
  r_in_ = nn::TffBlock<Real>(s, "gru.r_in", d, hid, rng);
  r_hidden_ = nn::TffBlock<Real>(s, "gru.r_hidden", d, hid, rng);
  c_in_ = nn::TffBlock<Real>(s, "gru.c_in", d, hid, rng);
  c_hidden_ = nn::TffBlock<Real>(s, "gru.c_hidden", d, hid, rng);
  this->build_heads(rng);
}

template <typename Real>
ModelOutput<Real> GrnnModel<Real>::forward(nn::Tape<Real>& tape, const data::PlaySequence& seq) const {
  this->check_input(seq);
  const std::size_t steps = seq.steps, p = seq.players(), k = seq.entities();
  if (k < 2) throw UsageError("the GRNN needs at least two entities per step");
  auto v = this->encoder_->encode(tape, seq);

  // Edge and node functions only read step t, so every step's messages are
  // computed in one batch; only the recurrence runs step by step.
  std::vector<std::uint32_t> send, recv, group;
  send.reserve(steps * k * (k - 1));
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        recv.push_back(static_cast<std::uint32_t>(t * k + i));
        send.push_back(static_cast<std::uint32_t>(t * k + j));
      }
    }
  }
  group = recv;
  auto pair = nn::add(nn::gather_rows(v, std::move(recv)), nn::gather_rows(v, std::move(send)));
  auto messages = nn::group_mean(edge_(pair), std::move(group), steps * k);
  auto o = node_(messages);
  auto z_in = z_in_(o), r_in = r_in_(o), c_in = c_in_(o);

  auto h = tape.constant(nn::Tensor<Real>(nn::Shape{k, this->config_.d_model}));
  std::vector<Var<Real>> player_states;
  player_states.reserve(steps);
  std::vector<std::uint32_t> players(p);
  for (std::size_t j = 0; j < p; ++j) players[j] = static_cast<std::uint32_t>(j);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<std::uint32_t> rows(k);
    for (std::size_t i = 0; i < k; ++i) rows[i] = static_cast<std::uint32_t>(t * k + i);
    auto z = nn::sigmoid(nn::add(nn::gather_rows(z_in, rows), z_hidden_(h)));
    auto r = nn::sigmoid(nn::add(nn::gather_rows(r_in, rows), r_hidden_(h)));
    auto cand = nn::tanh(nn::add(nn::gather_rows(c_in, rows), c_hidden_(nn::mul(r, h))));
    h = nn::add(nn::mul(nn::one_minus(z), h), nn::mul(z, cand));
    player_states.push_back(nn::gather_rows(h, players));
  }
  ModelOutput<Real> out;
  out.player = this->head_player(nn::concat_rows<Real>(player_states));
  return out;
}

template class GrnnModel<float>;
template class GrnnModel<double>;

}  // namespace courtformer::model
