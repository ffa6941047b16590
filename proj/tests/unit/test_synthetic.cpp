#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "courtformer/data/synthetic.hpp"
#include "courtformer/errors.hpp"

using namespace courtformer;
using namespace courtformer::data;

namespace {

std::string serialize(const std::vector<GameRecord>& games) {
  std::ostringstream out;
  for (const auto& g : games) write_game(out, g);
  return out.str();
}

}  // namespace

TEST(Synthetic, EquilibriumGameIsStationary) {
  SyntheticLeagueConfig c;
  c.games = 2;
  c.frames_per_game = 500;
  c.periods = 1;
  c.pass_hazard = 0.0;
  c.ball_height_jitter = 0.0;
  c.marking = 0.0;
  c.cut_hazard = 0.0;
  for (auto& a : c.archetypes) {
    a.noise = 0.0;
    a.attraction = 0.0;
  }
  for (const auto& g : generate_synthetic_league(c)) {
    for (const auto& f : g.frames) EXPECT_EQ(f.players, g.frames[0].players);
    for (const auto& f : g.frames) EXPECT_EQ(f.ball, g.frames[0].ball);
  }
}

TEST(Synthetic, FullMarkingSettlesEachDefenderOnAnAttacker) {
  SyntheticLeagueConfig c;
  c.games = 3;
  c.frames_per_game = 1500;
  c.periods = 1;
  c.pass_hazard = 0.0;
  c.marking = 1.0;
  c.cut_hazard = 0.0;
  for (auto& a : c.archetypes) {
    a.noise = 0.0;
    a.attraction = 0.0;
  }
  for (const auto& g : generate_synthetic_league(c)) {
    const auto& last = g.frames.back();
    std::size_t holder_team = 0;
    double best = 1e9;
    // The ball sits on a holder; its team attacks.
    for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
      const double d = std::hypot(last.players[k].x - last.ball[0], last.players[k].y - last.ball[1]);
      if (d < best) best = d, holder_team = g.roster[k].home;
    }
    for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
      if (g.roster[k].home == static_cast<bool>(holder_team)) continue;
      double nearest = 1e9;
      for (std::size_t j = 0; j < kPlayersOnCourt; ++j) {
        if (g.roster[j].home != g.roster[k].home) {
          nearest = std::min(nearest, std::hypot(last.players[k].x - last.players[j].x,
                                                 last.players[k].y - last.players[j].y));
        }
      }
      EXPECT_LE(nearest, 4.0 + 1e-6) << g.game_id << " slot " << k;
    }
  }
}

TEST(Synthetic, CutsMoveOnlyTheOffense) {
  SyntheticLeagueConfig c;
  c.games = 2;
  c.frames_per_game = 1000;
  c.periods = 1;
  c.pass_hazard = 0.0;
  c.ball_height_jitter = 0.0;
  c.marking = 0.0;
  c.cut_hazard = 0.05;
  for (auto& a : c.archetypes) {
    a.noise = 0.0;
    a.attraction = 0.0;
  }
  for (const auto& g : generate_synthetic_league(c)) {
    std::array<bool, kPlayersOnCourt> moved{};
    for (const auto& f : g.frames) {
      for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
        if (f.players[k].x != g.frames[0].players[k].x || f.players[k].y != g.frames[0].players[k].y) moved[k] = true;
      }
    }
    // The home team starts with the ball and keeps it without passes.
    for (std::size_t k = 0; k < kPlayersOnCourt; ++k) EXPECT_EQ(moved[k], g.roster[k].home) << g.game_id << " " << k;
  }
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticLeagueConfig c;
  c.games = 3;
  c.frames_per_game = 600;
  EXPECT_EQ(serialize(generate_synthetic_league(c)), serialize(generate_synthetic_league(c)));
  auto other = c;
  other.seed = 2;
  EXPECT_NE(serialize(generate_synthetic_league(c)), serialize(generate_synthetic_league(other)));
}

TEST(Synthetic, FramesStayOnCourtWithTenRosterPlayers) {
  SyntheticLeagueConfig c;
  c.games = 4;
  c.frames_per_game = 3000;
  for (const auto& g : generate_synthetic_league(c)) {
    EXPECT_EQ(g.roster.size(), 10u);
    std::size_t period_changes = 0;
    for (std::size_t i = 0; i < g.frames.size(); ++i) {
      const auto& f = g.frames[i];
      if (i > 0 && f.period != g.frames[i - 1].period) ++period_changes;
      ASSERT_TRUE(f.ball[0] >= 0 && f.ball[0] <= 94 && f.ball[1] >= 0 && f.ball[1] <= 50 && f.ball[2] >= 0);
      for (const auto& p : f.players) {
        ASSERT_TRUE(p.x >= 0 && p.x <= 94 && p.y >= 0 && p.y <= 50);
        ASSERT_NE(g.find_player(p.agent_id), nullptr);
        ASSERT_LT(p.agent_id, 40);
      }
    }
    EXPECT_EQ(period_changes, 3u);
  }
}

TEST(Synthetic, SpeedArchetypesSeparate) {
  SyntheticLeagueConfig c;
  c.games = 10;
  c.frames_per_game = 4000;
  c.archetypes = {{2.0, 0.1, 0.2}, {0.5, 0.1, 0.2}};
  std::vector<double> moved(c.league_size, 0.0), count(c.league_size, 0.0);
  for (const auto& g : generate_synthetic_league(c)) {
    for (std::size_t i = 5; i < g.frames.size(); i += 5) {
      if (g.frames[i].period != g.frames[i - 5].period) continue;
      for (std::size_t k = 0; k < 10; ++k) {
        const auto& a = g.frames[i].players[k];
        const auto& b = g.frames[i - 5].players[k];
        moved[a.agent_id] += std::hypot(a.x - b.x, a.y - b.y);
        count[a.agent_id] += 1;
      }
    }
  }
  double fast = 0, slow = 0, nf = 0, ns = 0;
  for (std::size_t id = 0; id < c.league_size; ++id) {
    if (count[id] == 0) continue;
    (id % 2 == 0 ? fast : slow) += moved[id] / count[id];
    (id % 2 == 0 ? nf : ns) += 1;
  }
  ASSERT_GT(nf, 0);
  ASSERT_GT(ns, 0);
  EXPECT_GT(fast / nf, 2.0 * (slow / ns));
}

TEST(SyntheticConfig, SettingsRoundTripAndValidation) {
  SyntheticLeagueConfig c;
  c.games = 7;
  c.archetypes.push_back({1.0, 0.3, 0.4});
  EXPECT_EQ(SyntheticLeagueConfig::from_settings(c.to_settings()).to_settings().values(), c.to_settings().values());

  Settings unknown;
  unknown.set("gamez", "3");
  EXPECT_THROW(SyntheticLeagueConfig::from_settings(unknown), ConfigError);

  Settings too_fast;
  too_fast.set("archetype_0_speed", "5.0");
  EXPECT_THROW(SyntheticLeagueConfig::from_settings(too_fast), ConfigError);

  Settings missing;
  missing.set("archetype_count", "5");
  EXPECT_THROW(SyntheticLeagueConfig::from_settings(missing), ConfigError);

  Settings small;
  small.set("league_size", "9");
  EXPECT_THROW(SyntheticLeagueConfig::from_settings(small), ConfigError);
}
