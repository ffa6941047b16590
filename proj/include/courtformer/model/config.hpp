#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "courtformer/config.hpp"

namespace courtformer::model {

enum class Task { P, B, Both };
enum class ModelKind { Transformer, Grnn };

const char* task_name(Task t);
Task parse_task(const std::string& text);
const char* kind_name(ModelKind k);
ModelKind parse_kind(const std::string& text);

struct ModelConfig {
  ModelKind kind = ModelKind::Transformer;
  Task task = Task::P;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t d_ff = 128;
  std::size_t layers = 2;
  // Hidden width inside every GRNN feedforward block.
  std::size_t grnn_hidden = 64;
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> player_mlp{16, 32, 64};
  std::vector<std::size_t> ball_mlp{16, 32, 64};
  std::size_t league_size = 40;
  // When false every player shares one generic embedding.
  bool identity = true;
  int player_bins = 11;
  double player_extent = 11.0;
  int ball_bins = 19;
  double ball_extent = 19.0;
  // Multiplies centered court coordinates (feet) before the feature MLPs.
  double coordinate_scale = 0.1;
  std::uint64_t init_seed = 0;

  bool predicts_players() const { return task != Task::B; }
  bool predicts_ball() const { return task != Task::P; }
  int player_labels() const { return player_bins * player_bins; }
  int ball_labels() const { return ball_bins * ball_bins * ball_bins; }

  // Throws ConfigError on inconsistent settings.
  void validate() const;

  static const std::vector<std::string>& keys();
  // Reads the `model.` keys; other keys are ignored.
  static ModelConfig from_settings(const Settings& settings, const ModelConfig& base);
  static ModelConfig from_settings(const Settings& settings) { return from_settings(settings, ModelConfig{}); }
  // Written with the `model.` prefix.
  Settings to_settings() const;

  static ModelConfig desk();
  // Small enough for finite-difference checks, large enough to memorize a
  // batch.
  static ModelConfig tiny();
  static ModelConfig full_task_p();
  static ModelConfig full_task_b();
  // GRNN at the desk scale, within 10% of desk()'s parameter count.
  static ModelConfig desk_grnn();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace courtformer::model
