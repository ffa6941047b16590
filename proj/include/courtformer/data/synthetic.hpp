#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "courtformer/config.hpp"
#include "courtformer/data/tracking.hpp"

namespace courtformer::data {

// Movement profile shared by a group of agents. Speed and noise are in feet
// per 5 Hz step; attraction weighs the ball against the agent's anchor.
struct Archetype {
  double speed = 1.0;
  double noise = 0.2;
  double attraction = 0.2;

  friend bool operator==(const Archetype&, const Archetype&) = default;
};

struct SyntheticLeagueConfig {
  std::uint64_t seed = 1;
  std::size_t league_size = 40;
  std::size_t games = 40;
  std::size_t frames_per_game = 6000;
  int periods = 4;
  // Per-frame probability that the holder releases a pass.
  double pass_hazard = 0.03;
  // Fraction of passes that go to an opponent.
  double turnover_probability = 0.2;
  // AR(1) coefficient of the per-frame velocity noise.
  double noise_correlation = 0.9;
  double ball_height = 4.0;
  double ball_height_jitter = 0.25;
  double pass_arc = 3.0;
  // Half-width of the persistent per-agent offset from the role anchor.
  double anchor_jitter = 3.0;
  // Weight of the marked attacker against the role anchor in a defender's
  // target; defenders shadow the attacker of the same rank.
  double marking = 0.8;
  // Per-frame probability that an attacker picks a new spot around its
  // anchor, and the half-width of that spot's offset in feet.
  double cut_hazard = 0.01;
  double cut_range = 8.0;
  // When false, roles are dealt per game instead of tied to the agent.
  bool persistent_roles = true;
  // Agent i uses archetype i mod count.
  std::vector<Archetype> archetypes = default_archetypes();

  static std::vector<Archetype> default_archetypes();
  static const std::set<std::string>& known_keys(std::size_t archetype_count);

  // Throws ConfigError on unknown keys or invalid values.
  static SyntheticLeagueConfig from_settings(const Settings& settings);
  Settings to_settings() const;
  void validate() const;
};

// Frames land on court at 25 Hz; identical configs produce identical games.
std::vector<GameRecord> generate_synthetic_league(const SyntheticLeagueConfig& config);
GameRecord generate_synthetic_game(const SyntheticLeagueConfig& config, std::size_t index);

}  // namespace courtformer::data
