#include "courtformer/model/config.hpp"

#include <sstream>

#include "courtformer/errors.hpp"

namespace courtformer::model {

const char* task_name(Task t) {
  switch (t) {
    case Task::P: return "P";
    case Task::B: return "B";
    case Task::Both: return "both";
  }
  return "?";
}

Task parse_task(const std::string& text) {
  if (text == "P" || text == "p") return Task::P;
  if (text == "B" || text == "b") return Task::B;
  if (text == "both") return Task::Both;
  throw ConfigError("task must be P, B or both, got '" + text + "'");
}

const char* kind_name(ModelKind k) { return k == ModelKind::Transformer ? "transformer" : "grnn"; }

ModelKind parse_kind(const std::string& text) {
  if (text == "transformer") return ModelKind::Transformer;
  if (text == "grnn") return ModelKind::Grnn;
  throw ConfigError("model kind must be transformer or grnn, got '" + text + "'");
}

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model: " + m); };
  if (d_model == 0 || d_ff == 0 || embedding_dim == 0 || grnn_hidden == 0) fail("widths must be positive");
  if (kind == ModelKind::Transformer) {
    if (layers == 0) fail("layers must be positive");
    if (heads == 0 || d_model % heads != 0) {
      fail("d_model " + std::to_string(d_model) + " is not divisible by " + std::to_string(heads) + " heads");
    }
  }
  if (kind == ModelKind::Grnn && task != Task::P) fail("the GRNN baseline only predicts players (task P)");
  if (player_mlp.empty() || ball_mlp.empty()) fail("feature MLPs need at least one layer");
  if (player_mlp.back() != d_model || ball_mlp.back() != d_model) fail("feature MLPs must end at d_model");
  if (league_size == 0) fail("league_size must be positive");
  if (player_bins <= 0 || player_bins % 2 == 0 || ball_bins <= 0 || ball_bins % 2 == 0) fail("bin counts must be odd");
  if (!(player_extent > 0) || !(ball_extent > 0)) fail("bin extents must be positive");
  if (!(coordinate_scale > 0)) fail("coordinate_scale must be positive");
}

const std::vector<std::string>& ModelConfig::keys() {
  static const std::vector<std::string> k{
      "model.kind",          "model.task",          "model.d_model",       "model.heads",
      "model.d_ff",          "model.layers",        "model.grnn_hidden",   "model.embedding_dim",
      "model.player_mlp",    "model.ball_mlp",      "model.league_size",   "model.identity",
      "model.player_bins",   "model.player_extent", "model.ball_bins",     "model.ball_extent",
      "model.coordinate_scale", "model.init_seed"};
  return k;
}

ModelConfig ModelConfig::from_settings(const Settings& s, const ModelConfig& base) {
  ModelConfig c = base;
  c.kind = parse_kind(s.get_string("model.kind", kind_name(c.kind)));
  c.task = parse_task(s.get_string("model.task", task_name(c.task)));
  c.d_model = s.get_uint("model.d_model", c.d_model);
  c.heads = s.get_uint("model.heads", c.heads);
  c.d_ff = s.get_uint("model.d_ff", c.d_ff);
  c.layers = s.get_uint("model.layers", c.layers);
  c.grnn_hidden = s.get_uint("model.grnn_hidden", c.grnn_hidden);
  c.embedding_dim = s.get_uint("model.embedding_dim", c.embedding_dim);
  c.player_mlp = s.get_sizes("model.player_mlp", c.player_mlp);
  c.ball_mlp = s.get_sizes("model.ball_mlp", c.ball_mlp);
  c.league_size = s.get_uint("model.league_size", c.league_size);
  c.identity = s.get_bool("model.identity", c.identity);
  c.player_bins = static_cast<int>(s.get_int("model.player_bins", c.player_bins));
  c.player_extent = s.get_double("model.player_extent", c.player_extent);
  c.ball_bins = static_cast<int>(s.get_int("model.ball_bins", c.ball_bins));
  c.ball_extent = s.get_double("model.ball_extent", c.ball_extent);
  c.coordinate_scale = s.get_double("model.coordinate_scale", c.coordinate_scale);
  c.init_seed = s.get_uint("model.init_seed", c.init_seed);
  c.validate();
  return c;
}

Settings ModelConfig::to_settings() const {
  Settings s;
  s.set("model.kind", kind_name(kind));
  s.set("model.task", task_name(task));
  s.set("model.d_model", std::to_string(d_model));
  s.set("model.heads", std::to_string(heads));
  s.set("model.d_ff", std::to_string(d_ff));
  s.set("model.layers", std::to_string(layers));
  s.set("model.grnn_hidden", std::to_string(grnn_hidden));
  s.set("model.embedding_dim", std::to_string(embedding_dim));
  s.set("model.player_mlp", join(player_mlp));
  s.set("model.ball_mlp", join(ball_mlp));
  s.set("model.league_size", std::to_string(league_size));
  s.set("model.identity", identity ? "true" : "false");
  s.set("model.player_bins", std::to_string(player_bins));
  s.set("model.player_extent", format_double(player_extent));
  s.set("model.ball_bins", std::to_string(ball_bins));
  s.set("model.ball_extent", format_double(ball_extent));
  s.set("model.coordinate_scale", format_double(coordinate_scale));
  s.set("model.init_seed", std::to_string(init_seed));
  return s;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.d_model = 32;
  c.heads = 2;
  c.d_ff = 64;
  c.layers = 2;
  c.grnn_hidden = 32;
  c.embedding_dim = 8;
  c.player_mlp = {16, 32};
  c.ball_mlp = {16, 32};
  c.league_size = 12;
  c.task = Task::Both;
  return c;
}

ModelConfig ModelConfig::full_task_p() {
  ModelConfig c;
  c.d_model = 512;
  c.heads = 8;
  c.d_ff = 2048;
  c.layers = 6;
  c.embedding_dim = 20;
  c.player_mlp = {128, 256, 512};
  c.ball_mlp = {128, 256, 512};
  c.league_size = 450;
  c.task = Task::P;
  return c;
}

ModelConfig ModelConfig::full_task_b() {
  ModelConfig c = full_task_p();
  c.task = Task::B;
  return c;
}

ModelConfig ModelConfig::desk_grnn() {
  ModelConfig c = desk();
  c.kind = ModelKind::Grnn;
  return c;
}

}  // namespace courtformer::model
