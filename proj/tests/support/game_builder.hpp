#pragma once

#include <functional>

#include "courtformer/data/tracking.hpp"

namespace testing_support {

using courtformer::data::Frame;
using courtformer::data::GameRecord;

// Position of player slot k (agent id k) at 25 Hz frame i.
using PathFn = std::function<std::array<double, 2>(std::size_t frame, std::size_t slot)>;
using BallFn = std::function<std::array<double, 3>(std::size_t frame)>;

inline GameRecord build_game(std::size_t frames, const PathFn& path, const BallFn& ball = nullptr, int period = 1) {
  GameRecord g;
  g.game_id = "g0";
  g.home_team = "home";
  g.away_team = "away";
  g.home_hoop = courtformer::data::Side::Right;
  for (std::int32_t id = 0; id < 10; ++id) g.roster.push_back({id, id < 5, ""});
  for (std::size_t i = 0; i < frames; ++i) {
    Frame f;
    f.period = period;
    f.clock = 600.0 - static_cast<double>(i) / 25.0;
    f.ball = ball ? ball(i) : std::array<double, 3>{47.0, 25.0, 4.0};
    for (std::size_t k = 0; k < 10; ++k) {
      const auto p = path(i, k);
      f.players[k] = {static_cast<std::int32_t>(k), p[0], p[1]};
    }
    g.frames.push_back(f);
  }
  return g;
}

inline std::array<double, 2> parked(std::size_t, std::size_t k) { return {10.0 + 7.0 * k, 5.0 + 4.0 * k}; }

}  // namespace testing_support
