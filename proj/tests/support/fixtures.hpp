#pragma once

#include "courtformer/data/sequence.hpp"
#include "courtformer/data/synthetic.hpp"

namespace testing_support {

inline courtformer::data::PlaySequence synthetic_sequence(std::size_t league_size, std::uint64_t seed,
                                                          std::size_t steps = 20, std::size_t start = 300) {
  courtformer::data::SyntheticLeagueConfig c;
  c.seed = seed;
  c.games = 1;
  c.league_size = league_size;
  c.frames_per_game = 1200;
  c.periods = 1;
  courtformer::data::WindowOptions w;
  w.steps = steps;
  return courtformer::data::extract_sequence(courtformer::data::generate_synthetic_game(c, 0), start, w);
}

inline std::vector<courtformer::data::GameRecord> small_league(std::size_t league_size, std::size_t games,
                                                               std::uint64_t seed, std::size_t frames = 1500) {
  courtformer::data::SyntheticLeagueConfig c;
  c.seed = seed;
  c.games = games;
  c.league_size = league_size;
  c.frames_per_game = frames;
  c.periods = 1;
  return courtformer::data::generate_synthetic_league(c);
}

}  // namespace testing_support
