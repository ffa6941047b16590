#include "courtformer/data/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "courtformer/errors.hpp"

namespace courtformer::data {

namespace {

constexpr double kHalfLength = kCourtLength / 2;
constexpr double kHalfWidth = kCourtWidth / 2;

}  // namespace

PlaySequence PlaySequence::single_player(std::size_t slot) const {
  if (slot >= players()) throw IndexError("player slot " + std::to_string(slot) + " out of range");
  PlaySequence out;
  out.game_id = game_id;
  out.start_frame = start_frame;
  out.stride = stride;
  out.steps = steps;
  out.agent_ids = {agent_ids[slot]};
  out.has_ball = false;
  for (std::size_t t = 0; t <= steps; ++t) {
    out.player_xy.push_back(x(t, slot));
    out.player_xy.push_back(y(t, slot));
  }
  for (std::size_t t = 0; t < steps; ++t) {
    out.frontcourt.push_back(front(t, slot));
    out.player_labels.push_back(player_label(t, slot));
  }
  return out;
}

PlaySequence PlaySequence::truncated(std::size_t new_steps) const {
  if (new_steps == 0 || new_steps > steps) {
    throw IndexError("cannot truncate a " + std::to_string(steps) + "-step sequence to " + std::to_string(new_steps));
  }
  return slice(0, new_steps);
}

PlaySequence PlaySequence::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first > steps || count > steps - first) {
    throw IndexError("steps [" + std::to_string(first) + ", " + std::to_string(first + count) + ") outside a " +
                     std::to_string(steps) + "-step sequence");
  }
  const std::size_t p = players();
  PlaySequence out = *this;
  out.start_frame = start_frame + first * stride;
  out.steps = count;
  auto cut = [](const auto& v, std::size_t from, std::size_t n) { return std::decay_t<decltype(v)>(v.begin() + from, v.begin() + from + n); };
  out.player_xy = cut(player_xy, first * p * 2, (count + 1) * p * 2);
  out.frontcourt = cut(frontcourt, first * p, count * p);
  out.player_labels = cut(player_labels, first * p, count * p);
  if (has_ball) {
    out.ball_xyz = cut(ball_xyz, first * 3, (count + 1) * 3);
    out.ball_labels = cut(ball_labels, first, count);
  }
  return out;
}

PlaySequence PlaySequence::permuted(std::span<const std::size_t> order) const {
  const std::size_t p = players();
  if (order.size() != p) throw DimensionError("permutation length does not match the player count");
  std::vector<bool> seen(p, false);
  for (auto i : order) {
    if (i >= p || seen[i]) throw UsageError("slot order is not a permutation");
    seen[i] = true;
  }
  PlaySequence out = *this;
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t src = order[i];
    out.agent_ids[i] = agent_ids[src];
    for (std::size_t t = 0; t <= steps; ++t) {
      out.player_xy[(t * p + i) * 2] = x(t, src);
      out.player_xy[(t * p + i) * 2 + 1] = y(t, src);
    }
    for (std::size_t t = 0; t < steps; ++t) {
      out.frontcourt[t * p + i] = front(t, src);
      out.player_labels[t * p + i] = player_label(t, src);
    }
  }
  return out;
}

void assign_labels(PlaySequence& seq, const BinGrid2D& players, const BinGrid3D& ball) {
  const std::size_t p = seq.players();
  seq.player_labels.assign(seq.steps * p, 0);
  for (std::size_t t = 0; t < seq.steps; ++t) {
    for (std::size_t k = 0; k < p; ++k) {
      seq.player_labels[t * p + k] = players.bin(seq.x(t + 1, k) - seq.x(t, k), seq.y(t + 1, k) - seq.y(t, k));
    }
  }
  seq.ball_labels.clear();
  if (!seq.has_ball) return;
  for (std::size_t t = 0; t < seq.steps; ++t) {
    seq.ball_labels.push_back(ball.bin(seq.ball(t + 1, 0) - seq.ball(t, 0), seq.ball(t + 1, 1) - seq.ball(t, 1),
                                       seq.ball(t + 1, 2) - seq.ball(t, 2)));
  }
}

bool labels_consistent(const PlaySequence& seq, const BinGrid2D& players, const BinGrid3D& ball) {
  PlaySequence copy = seq;
  assign_labels(copy, players, ball);
  return copy.player_labels == seq.player_labels && copy.ball_labels == seq.ball_labels;
}

PlaySequence rotate_180(const PlaySequence& seq) {
  PlaySequence out = seq;
  for (auto& v : out.player_xy) v = -v;
  for (std::size_t t = 0; t * 3 < out.ball_xyz.size(); ++t) {
    out.ball_xyz[t * 3] = -out.ball_xyz[t * 3];
    out.ball_xyz[t * 3 + 1] = -out.ball_xyz[t * 3 + 1];
  }
  for (auto& f : out.frontcourt) f = static_cast<std::uint8_t>(1 - f);
  assign_labels(out);
  return out;
}

std::optional<std::string> window_problem(const GameRecord& game, std::size_t start, const WindowOptions& options) {
  if (options.steps == 0 || options.stride == 0) return "window needs at least one step and a positive stride";
  const std::size_t span = options.span_frames();
  if (start + span > game.frames.size()) return "window runs past the end of the game";
  const Frame& first = game.frames[start];
  for (std::size_t i = start + 1; i < start + span; ++i) {
    const Frame& prev = game.frames[i - 1];
    const Frame& cur = game.frames[i];
    if (cur.period != first.period) return "window crosses a period boundary";
    if (prev.clock - cur.clock > options.max_clock_gap_seconds) return "frames missing inside the window";
    for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
      if (cur.players[k].agent_id != first.players[k].agent_id) return "substitution inside the window";
      const double dx = cur.players[k].x - prev.players[k].x;
      const double dy = cur.players[k].y - prev.players[k].y;
      if (std::hypot(dx, dy) > options.max_frame_step_feet) return "implausible jump inside the window";
    }
  }
  return std::nullopt;
}

PlaySequence extract_sequence(const GameRecord& game, std::size_t start, const WindowOptions& options) {
  if (auto problem = window_problem(game, start, options)) {
    throw DataError("game " + game.game_id + " frame " + std::to_string(start) + ": " + *problem);
  }
  PlaySequence seq;
  seq.game_id = game.game_id;
  seq.start_frame = start;
  seq.stride = options.stride;
  seq.steps = options.steps;
  const Frame& first = game.frames[start];
  for (const auto& p : first.players) seq.agent_ids.push_back(p.agent_id);
  for (std::size_t t = 0; t <= options.steps; ++t) {
    const Frame& f = game.frames[start + t * options.stride];
    for (const auto& p : f.players) {
      seq.player_xy.push_back(p.x - kHalfLength);
      seq.player_xy.push_back(p.y - kHalfWidth);
    }
    seq.ball_xyz.push_back(f.ball[0] - kHalfLength);
    seq.ball_xyz.push_back(f.ball[1] - kHalfWidth);
    seq.ball_xyz.push_back(f.ball[2]);
  }
  for (std::size_t t = 0; t < options.steps; ++t) {
    for (const auto& id : seq.agent_ids) {
      seq.frontcourt.push_back(game.attacking_side(id, first.period) == Side::Right ? 1 : 0);
    }
  }
  assign_labels(seq);
  return seq;
}

PlaySequence sample_training_sequence(std::span<const GameRecord> games, Rng& rng, const SamplerOptions& options) {
  const std::size_t span = options.window.span_frames();
  std::vector<std::size_t> usable;
  for (std::size_t g = 0; g < games.size(); ++g) {
    if (games[g].frames.size() >= span) usable.push_back(g);
  }
  if (usable.empty()) throw DataError("no game is long enough for a " + std::to_string(span) + "-frame window");
  std::uniform_int_distribution<std::size_t> pick_game(0, usable.size() - 1);
  std::bernoulli_distribution rotate(options.rotate_probability);
  for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
    const GameRecord& game = games[usable[pick_game(rng)]];
    std::uniform_int_distribution<std::size_t> pick_start(0, game.frames.size() - span);
    const std::size_t start = pick_start(rng);
    if (window_problem(game, start, options.window)) continue;
    PlaySequence seq = extract_sequence(game, start, options.window);
    return rotate(rng) ? rotate_180(seq) : seq;
  }
  throw DataError("no usable window after " + std::to_string(options.max_attempts) + " attempts");
}

EvalSet build_eval_set(std::span<const GameRecord> games, std::size_t target, const WindowOptions& options) {
  if (games.empty()) throw UsageError("evaluation set needs at least one game");
  if (target == 0) throw UsageError("evaluation set target must be positive");
  EvalSet out;
  const std::size_t per_game = (target + games.size() - 1) / games.size();
  const std::size_t span = options.span_frames();
  for (const auto& game : games) {
    const std::size_t frames = game.frames.size();
    std::size_t chunks = per_game;
    if (frames / span < chunks) {
      chunks = frames / span;
      out.warnings.push_back("game " + game.game_id + " holds only " + std::to_string(chunks) + " of " +
                             std::to_string(per_game) + " chunks");
    }
    if (chunks == 0) continue;
    const std::size_t chunk_len = frames / chunks;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = c * chunk_len;
      const std::size_t end = begin + chunk_len;
      bool found = false;
      for (std::size_t s = begin; s + span <= end; ++s) {
        if (!window_problem(game, s, options)) {
          out.sequences.push_back(extract_sequence(game, s, options));
          found = true;
          break;
        }
      }
      if (!found) {
        out.warnings.push_back("game " + game.game_id + " chunk " + std::to_string(c) + " has no usable window");
      }
    }
  }
  return out;
}

SplitCounts split_counts(std::size_t games) {
  if (games < 3) throw UsageError("splitting needs at least 3 games, got " + std::to_string(games));
  SplitCounts c;
  c.test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(games))));
  const std::size_t rest = games - c.test;
  c.validation = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(rest))));
  c.train = rest - c.validation;
  if (c.train == 0) throw UsageError("too few games to leave any for training");
  return c;
}

GameSplit split_games(std::vector<GameRecord> games, std::uint64_t seed) {
  const SplitCounts counts = split_counts(games.size());
  std::vector<std::size_t> order(games.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  GameSplit out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    GameRecord& g = games[order[i]];
    if (i < counts.test) {
      out.test.push_back(std::move(g));
    } else if (i < counts.test + counts.validation) {
      out.validation.push_back(std::move(g));
    } else {
      out.train.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace courtformer::data
