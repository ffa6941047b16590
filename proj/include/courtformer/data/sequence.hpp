#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "courtformer/binning.hpp"
#include "courtformer/data/tracking.hpp"

namespace courtformer::data {

inline constexpr std::size_t kDefaultSteps = 20;
inline constexpr std::size_t kDefaultStride = 5;

using Rng = std::mt19937_64;

// A downsampled window of one game. Coordinates are centered on the court
// (x - 47, y - 25), so a 180 degree rotation is exact negation; ball height
// is left as is. Player slots follow ascending agent id.
struct PlaySequence {
  std::string game_id;
  std::size_t start_frame = 0;
  std::size_t stride = kDefaultStride;
  std::size_t steps = 0;
  std::vector<std::int32_t> agent_ids;
  bool has_ball = true;
  // (steps + 1) x players x 2
  std::vector<double> player_xy;
  // (steps + 1) x 3
  std::vector<double> ball_xyz;
  // steps x players; 1 when the player's team attacks the right-hand hoop.
  std::vector<std::uint8_t> frontcourt;
  // steps x players, labels of the displacement to the next step.
  std::vector<std::int32_t> player_labels;
  // steps, empty without a ball.
  std::vector<std::int32_t> ball_labels;

  std::size_t players() const noexcept { return agent_ids.size(); }
  std::size_t entities() const noexcept { return players() + (has_ball ? 1 : 0); }

  double x(std::size_t t, std::size_t k) const { return player_xy[(t * players() + k) * 2]; }
  double y(std::size_t t, std::size_t k) const { return player_xy[(t * players() + k) * 2 + 1]; }
  double ball(std::size_t t, std::size_t axis) const { return ball_xyz[t * 3 + axis]; }
  std::uint8_t front(std::size_t t, std::size_t k) const { return frontcourt[t * players() + k]; }
  std::int32_t player_label(std::size_t t, std::size_t k) const { return player_labels[t * players() + k]; }

  // Only player `slot`, no ball.
  PlaySequence single_player(std::size_t slot) const;
  // First `new_steps` steps.
  PlaySequence truncated(std::size_t new_steps) const;
  // Steps [first, first + count), keeping the position row after the last.
  PlaySequence slice(std::size_t first, std::size_t count) const;
  // Slot i of the result holds slot order[i] of this sequence.
  PlaySequence permuted(std::span<const std::size_t> order) const;

  friend bool operator==(const PlaySequence&, const PlaySequence&) = default;
};

// Recomputes every label from the stored positions.
void assign_labels(PlaySequence& seq, const BinGrid2D& players = BinGrid2D::players(),
                   const BinGrid3D& ball = BinGrid3D::ball());
bool labels_consistent(const PlaySequence& seq, const BinGrid2D& players = BinGrid2D::players(),
                       const BinGrid3D& ball = BinGrid3D::ball());

// x -> 94 - x, y -> 50 - y, frontcourt flipped, labels recomputed.
PlaySequence rotate_180(const PlaySequence& seq);

struct WindowOptions {
  std::size_t steps = kDefaultSteps;
  std::size_t stride = kDefaultStride;
  // A player moving further than this between consecutive 25 Hz frames is
  // treated as a tracking glitch.
  double max_frame_step_feet = 3.0;
  // Larger clock gaps between consecutive frames mean frames were dropped.
  double max_clock_gap_seconds = 0.08;

  std::size_t span_frames() const { return steps * stride + 1; }
};

// Why the window starting at 25 Hz frame `start` is unusable, if it is.
std::optional<std::string> window_problem(const GameRecord& game, std::size_t start, const WindowOptions& options);

// Throws DataError when the window is unusable.
PlaySequence extract_sequence(const GameRecord& game, std::size_t start, const WindowOptions& options = {});

struct SamplerOptions {
  WindowOptions window;
  double rotate_probability = 0.5;
  std::size_t max_attempts = 1000;
};

// Uniform game, then uniform start, resampling unusable windows.
PlaySequence sample_training_sequence(std::span<const GameRecord> games, Rng& rng,
                                      const SamplerOptions& options = {});

struct EvalSet {
  std::vector<PlaySequence> sequences;
  std::vector<std::string> warnings;
};

// ceil(target / N) equal chunks per game; each chunk contributes its first
// usable window. Never rotated.
EvalSet build_eval_set(std::span<const GameRecord> games, std::size_t target, const WindowOptions& options = {});

struct SplitCounts {
  std::size_t train = 0, validation = 0, test = 0;
};

// test = max(1, round(5% of N)), validation = max(1, round(5% of the rest)).
// 631 games give 569/30/32.
SplitCounts split_counts(std::size_t games);

struct GameSplit {
  std::vector<GameRecord> train, validation, test;
};

GameSplit split_games(std::vector<GameRecord> games, std::uint64_t seed);

}  // namespace courtformer::data
