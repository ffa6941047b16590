#include "courtformer/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "courtformer/errors.hpp"

namespace courtformer::data {

namespace {

constexpr std::size_t kTeamSize = kPlayersOnCourt / 2;
constexpr int kPassFrames = 15;
// Largest player displacement per 5 Hz step the 11 ft bin grid resolves.
constexpr double kMaxStepFeet = 5.5;
// A marking defender stays this far from its attacker, toward the hoop.
constexpr double kMarkGap = 4.0;
constexpr double kHoopInset = 5.25;

// Team-relative anchors: distance past midcourt toward the attacked hoop,
// and lateral offset.
constexpr std::array<std::array<double, 2>, kTeamSize> kOffenseRoles{{{28, 0}, {34, 16}, {34, -16}, {40, 8}, {40, -8}}};
constexpr std::array<std::array<double, 2>, kTeamSize> kDefenseRoles{{{32, 0}, {37, 13}, {37, -13}, {42, 6}, {42, -6}}};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct AgentTraits {
  Archetype archetype;
  std::size_t role = 0;
  double jitter_u = 0.0, jitter_v = 0.0;
};

std::vector<AgentTraits> league_traits(const SyntheticLeagueConfig& c) {
  std::mt19937_64 rng(mix(c.seed));
  std::uniform_real_distribution<double> jitter(-c.anchor_jitter, c.anchor_jitter);
  std::vector<AgentTraits> out(c.league_size);
  for (std::size_t id = 0; id < c.league_size; ++id) {
    out[id].archetype = c.archetypes[id % c.archetypes.size()];
    out[id].role = id % kTeamSize;
    out[id].jitter_u = c.anchor_jitter > 0 ? jitter(rng) : 0.0;
    out[id].jitter_v = c.anchor_jitter > 0 ? jitter(rng) : 0.0;
  }
  return out;
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::vector<Archetype> SyntheticLeagueConfig::default_archetypes() {
  return {{3.6, 0.25, 0.3}, {2.4, 0.5, 0.1}, {1.2, 0.15, 0.6}, {0.6, 0.8, 0.0}};
}

const std::set<std::string>& SyntheticLeagueConfig::known_keys(std::size_t archetype_count) {
  static std::vector<std::set<std::string>> cache;
  if (cache.size() <= archetype_count) cache.resize(archetype_count + 1);
  auto& keys = cache[archetype_count];
  if (keys.empty()) {
    keys = {"seed", "league_size", "games", "frames_per_game", "periods", "pass_hazard",
            "turnover_probability", "noise_correlation", "ball_height", "ball_height_jitter", "pass_arc",
            "anchor_jitter", "marking", "cut_hazard", "cut_range", "persistent_roles", "archetype_count"};
    for (std::size_t i = 0; i < archetype_count; ++i) {
      for (const char* field : {"speed", "noise", "attraction"}) {
        keys.insert("archetype_" + std::to_string(i) + "_" + field);
      }
    }
  }
  return keys;
}

SyntheticLeagueConfig SyntheticLeagueConfig::from_settings(const Settings& s) {
  SyntheticLeagueConfig c;
  c.seed = s.get_uint("seed", c.seed);
  c.league_size = s.get_uint("league_size", c.league_size);
  c.games = s.get_uint("games", c.games);
  c.frames_per_game = s.get_uint("frames_per_game", c.frames_per_game);
  c.periods = static_cast<int>(s.get_int("periods", c.periods));
  c.pass_hazard = s.get_double("pass_hazard", c.pass_hazard);
  c.turnover_probability = s.get_double("turnover_probability", c.turnover_probability);
  c.noise_correlation = s.get_double("noise_correlation", c.noise_correlation);
  c.ball_height = s.get_double("ball_height", c.ball_height);
  c.ball_height_jitter = s.get_double("ball_height_jitter", c.ball_height_jitter);
  c.pass_arc = s.get_double("pass_arc", c.pass_arc);
  c.anchor_jitter = s.get_double("anchor_jitter", c.anchor_jitter);
  c.marking = s.get_double("marking", c.marking);
  c.cut_hazard = s.get_double("cut_hazard", c.cut_hazard);
  c.cut_range = s.get_double("cut_range", c.cut_range);
  c.persistent_roles = s.get_bool("persistent_roles", c.persistent_roles);
  const auto defaults = default_archetypes();
  const std::size_t count = s.get_uint("archetype_count", defaults.size());
  s.reject_unknown(known_keys(count), "synthetic league");
  c.archetypes.clear();
  for (std::size_t i = 0; i < count; ++i) {
    const std::string p = "archetype_" + std::to_string(i) + "_";
    Archetype a = i < defaults.size() ? defaults[i] : Archetype{};
    if (i >= defaults.size()) {
      for (const char* field : {"speed", "noise", "attraction"}) {
        if (!s.has(p + field)) throw ConfigError("missing setting " + p + field);
      }
    }
    a.speed = s.get_double(p + "speed", a.speed);
    a.noise = s.get_double(p + "noise", a.noise);
    a.attraction = s.get_double(p + "attraction", a.attraction);
    c.archetypes.push_back(a);
  }
  c.validate();
  return c;
}

Settings SyntheticLeagueConfig::to_settings() const {
  Settings s;
  s.set("seed", std::to_string(seed));
  s.set("league_size", std::to_string(league_size));
  s.set("games", std::to_string(games));
  s.set("frames_per_game", std::to_string(frames_per_game));
  s.set("periods", std::to_string(periods));
  s.set("pass_hazard", format_double(pass_hazard));
  s.set("turnover_probability", format_double(turnover_probability));
  s.set("noise_correlation", format_double(noise_correlation));
  s.set("ball_height", format_double(ball_height));
  s.set("ball_height_jitter", format_double(ball_height_jitter));
  s.set("pass_arc", format_double(pass_arc));
  s.set("anchor_jitter", format_double(anchor_jitter));
  s.set("marking", format_double(marking));
  s.set("cut_hazard", format_double(cut_hazard));
  s.set("cut_range", format_double(cut_range));
  s.set("persistent_roles", persistent_roles ? "true" : "false");
  s.set("archetype_count", std::to_string(archetypes.size()));
  for (std::size_t i = 0; i < archetypes.size(); ++i) {
    const std::string p = "archetype_" + std::to_string(i) + "_";
    s.set(p + "speed", format_double(archetypes[i].speed));
    s.set(p + "noise", format_double(archetypes[i].noise));
    s.set(p + "attraction", format_double(archetypes[i].attraction));
  }
  return s;
}

void SyntheticLeagueConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic league: " + m); };
  if (league_size < kPlayersOnCourt) fail("league_size must be at least 10");
  if (periods < 1) fail("periods must be at least 1");
  if (frames_per_game < static_cast<std::size_t>(periods)) fail("frames_per_game must cover every period");
  if (!(pass_hazard >= 0 && pass_hazard <= 1)) fail("pass_hazard must lie in [0, 1]");
  if (!(turnover_probability >= 0 && turnover_probability <= 1)) fail("turnover_probability must lie in [0, 1]");
  if (!(noise_correlation >= 0 && noise_correlation < 1)) fail("noise_correlation must lie in [0, 1)");
  if (!(ball_height >= 0) || !(ball_height_jitter >= 0) || !(pass_arc >= 0)) fail("ball settings must be non-negative");
  if (!(anchor_jitter >= 0 && anchor_jitter <= 5)) fail("anchor_jitter must lie in [0, 5]");
  if (!(marking >= 0 && marking <= 1)) fail("marking must lie in [0, 1]");
  if (!(cut_hazard >= 0 && cut_hazard <= 1)) fail("cut_hazard must lie in [0, 1]");
  if (!(cut_range >= 0 && cut_range <= 15)) fail("cut_range must lie in [0, 15]");
  if (archetypes.empty()) fail("archetype_count must be positive");
  for (std::size_t i = 0; i < archetypes.size(); ++i) {
    const auto& a = archetypes[i];
    const std::string name = "archetype " + std::to_string(i);
    if (!(a.speed >= 0) || !(a.noise >= 0) || !(a.attraction >= 0)) fail(name + " values must be non-negative");
    if (!(a.speed + 3 * a.noise < kMaxStepFeet)) {
      fail(name + " speed + 3 * noise must stay below 5.5 ft per step");
    }
  }
}

GameRecord generate_synthetic_game(const SyntheticLeagueConfig& c, std::size_t index) {
  c.validate();
  const auto traits = league_traits(c);
  std::mt19937_64 rng(mix(c.seed ^ mix(index + 1)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::int32_t> pool(c.league_size);
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);

  GameRecord game;
  game.game_id = "synth" + std::to_string(index);
  game.home_team = "home";
  game.away_team = "away";
  game.home_hoop = unit(rng) < 0.5 ? Side::Left : Side::Right;

  // Slots sorted by agent id so frames match ingest order.
  std::vector<std::int32_t> ids(pool.begin(), pool.begin() + kPlayersOnCourt);
  std::vector<bool> home(kPlayersOnCourt);
  for (std::size_t i = 0; i < kPlayersOnCourt; ++i) {
    game.roster.push_back({ids[i], i < kTeamSize, "agent_" + std::to_string(ids[i])});
  }
  std::sort(game.roster.begin(), game.roster.end(), [](const auto& a, const auto& b) { return a.agent_id < b.agent_id; });
  std::vector<std::size_t> role(kPlayersOnCourt);
  std::array<std::size_t, 2> dealt{0, 0};
  for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
    ids[k] = game.roster[k].agent_id;
    home[k] = game.roster[k].home;
    role[k] = c.persistent_roles ? traits[ids[k]].role : dealt[home[k] ? 0 : 1]++;
  }
  // Pair the teams rank by rank in role order.
  std::array<std::size_t, kPlayersOnCourt> marks{};
  {
    std::array<std::vector<std::size_t>, 2> teams;
    for (std::size_t k = 0; k < kPlayersOnCourt; ++k) teams[home[k] ? 0 : 1].push_back(k);
    for (auto& t : teams) {
      std::stable_sort(t.begin(), t.end(), [&](std::size_t a, std::size_t b) { return role[a] < role[b]; });
    }
    for (std::size_t r = 0; r < kTeamSize; ++r) {
      marks[teams[0][r]] = teams[1][r];
      marks[teams[1][r]] = teams[0][r];
    }
  }
  std::array<std::array<double, 2>, kPlayersOnCourt> cut{};
  std::uniform_real_distribution<double> cut_offset(-c.cut_range, c.cut_range);

  std::array<double, kPlayersOnCourt> px{}, py{}, nx{}, ny{};
  const double innovation = std::sqrt(1.0 - c.noise_correlation * c.noise_correlation);

  std::size_t holder = 0;
  while (!home[holder]) ++holder;
  std::array<double, 3> ball{};
  int pass_frame = -1;
  std::size_t pass_target = 0;
  std::array<double, 3> pass_from{};

  auto attack_dir = [&](int period) {
    const Side home_side = period <= 2 ? game.home_hoop : opposite(game.home_hoop);
    const Side attacked = home[holder] ? home_side : opposite(home_side);
    return attacked == Side::Right ? 1.0 : -1.0;
  };
  auto anchor = [&](std::size_t k, int period) {
    const bool offense = home[k] == home[holder];
    const double dir = attack_dir(period);
    const auto& r = offense ? kOffenseRoles[role[k]] : kDefenseRoles[role[k]];
    const auto& t = traits[ids[k]];
    const double u = std::min(r[0] + t.jitter_u, 45.0);
    return std::array<double, 2>{clip(47.0 + dir * u, 0.0, kCourtLength),
                                 clip(25.0 + dir * (r[1] + t.jitter_v), 0.0, kCourtWidth)};
  };
  // Where player k heads before the pull of the ball.
  auto target = [&](std::size_t k, int period) {
    auto spot = anchor(k, period);
    if (home[k] == home[holder]) {
      spot[0] = clip(spot[0] + cut[k][0], 0.0, kCourtLength);
      spot[1] = clip(spot[1] + cut[k][1], 0.0, kCourtWidth);
      return spot;
    }
    const std::size_t m = marks[k];
    const double hx = attack_dir(period) > 0 ? kCourtLength - kHoopInset : kHoopInset;
    const double gx = hx - px[m], gy = 25.0 - py[m];
    const double gap = std::min(kMarkGap, std::hypot(gx, gy));
    const double norm = std::max(std::hypot(gx, gy), 1e-9);
    const double mx = px[m] + gx / norm * gap, my = py[m] + gy / norm * gap;
    return std::array<double, 2>{(1.0 - c.marking) * spot[0] + c.marking * mx,
                                 (1.0 - c.marking) * spot[1] + c.marking * my};
  };

  for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
    const auto a = anchor(k, 1);
    px[k] = a[0];
    py[k] = a[1];
  }
  ball = {px[holder], py[holder], c.ball_height};

  const std::size_t per_period = c.frames_per_game / static_cast<std::size_t>(c.periods);
  for (int period = 1; period <= c.periods; ++period) {
    const std::size_t frames = period == c.periods ? c.frames_per_game - per_period * (c.periods - 1) : per_period;
    for (std::size_t i = 0; i < frames; ++i) {
      // Ball first, so players react to where it is now.
      if (pass_frame < 0 && c.pass_hazard > 0 && unit(rng) < c.pass_hazard) {
        const bool turnover = unit(rng) < c.turnover_probability;
        std::vector<std::size_t> options;
        for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
          if (k != holder && (home[k] == home[holder]) != turnover) options.push_back(k);
        }
        pass_target = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
        pass_from = ball;
        pass_frame = 0;
      }
      if (pass_frame >= 0) {
        ++pass_frame;
        const double s = static_cast<double>(pass_frame) / kPassFrames;
        ball[0] = pass_from[0] + s * (px[pass_target] - pass_from[0]);
        ball[1] = pass_from[1] + s * (py[pass_target] - pass_from[1]);
        ball[2] = pass_from[2] + s * (c.ball_height - pass_from[2]) + 4.0 * c.pass_arc * s * (1.0 - s);
        if (pass_frame == kPassFrames) {
          holder = pass_target;
          pass_frame = -1;
        }
      } else {
        ball[0] = px[holder];
        ball[1] = py[holder];
        ball[2] = std::max(0.0, c.ball_height + c.ball_height_jitter * normal(rng));
      }

      for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
        if (c.cut_hazard > 0 && c.cut_range > 0 && unit(rng) < c.cut_hazard) cut[k] = {cut_offset(rng), cut_offset(rng)};
      }
      // Targets from this frame's positions, so defenders trail by a frame.
      std::array<std::array<double, 2>, kPlayersOnCourt> spots{};
      for (std::size_t k = 0; k < kPlayersOnCourt; ++k) spots[k] = target(k, period);
      for (std::size_t k = 0; k < kPlayersOnCourt; ++k) {
        const Archetype& a = traits[ids[k]].archetype;
        const auto& home_spot = spots[k];
        const double w = a.attraction;
        const double ex = (home_spot[0] + w * ball[0]) / (1.0 + w);
        const double ey = (home_spot[1] + w * ball[1]) / (1.0 + w);
        const double dx = ex - px[k], dy = ey - py[k];
        const double dist = std::hypot(dx, dy);
        const double reach = std::min(a.speed / 5.0, dist);
        const double scale = a.noise / 5.0;
        nx[k] = c.noise_correlation * nx[k] + innovation * scale * normal(rng);
        ny[k] = c.noise_correlation * ny[k] + innovation * scale * normal(rng);
        if (dist > 0) {
          px[k] += dx / dist * reach;
          py[k] += dy / dist * reach;
        }
        px[k] = clip(px[k] + nx[k], 0.0, kCourtLength);
        py[k] = clip(py[k] + ny[k], 0.0, kCourtWidth);
      }

      Frame f;
      f.period = period;
      f.clock = static_cast<double>(frames - i) / kFrameRate;
      f.ball = {clip(ball[0], 0.0, kCourtLength), clip(ball[1], 0.0, kCourtWidth), ball[2]};
      for (std::size_t k = 0; k < kPlayersOnCourt; ++k) f.players[k] = {ids[k], px[k], py[k]};
      game.frames.push_back(f);
    }
  }
  return game;
}

std::vector<GameRecord> generate_synthetic_league(const SyntheticLeagueConfig& config) {
  config.validate();
  std::vector<GameRecord> out;
  out.reserve(config.games);
  for (std::size_t g = 0; g < config.games; ++g) out.push_back(generate_synthetic_game(config, g));
  return out;
}

}  // namespace courtformer::data
