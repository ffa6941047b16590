#include "courtformer/data/tracking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "courtformer/config.hpp"
#include "courtformer/errors.hpp"

namespace courtformer::data {

Side opposite(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

const char* side_name(Side s) { return s == Side::Left ? "left" : "right"; }

const RosterEntry* GameRecord::find_player(std::int32_t agent_id) const {
  for (const auto& r : roster) {
    if (r.agent_id == agent_id) return &r;
  }
  return nullptr;
}

Side GameRecord::attacking_side(std::int32_t agent_id, int period) const {
  const RosterEntry* entry = find_player(agent_id);
  if (entry == nullptr) throw IndexError("agent " + std::to_string(agent_id) + " is not on the roster");
  const Side home_side = period <= 2 ? home_hoop : opposite(home_hoop);
  return entry->home ? home_side : opposite(home_side);
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    while (sep == ' ' && pos < s.size() && s[pos] == ' ') ++pos;
    if (pos >= s.size()) break;
    auto next = s.find(sep, pos);
    if (next == std::string_view::npos) next = s.size();
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

template <typename T>
T number(std::string_view text, const std::string& source, std::size_t line, const char* what) {
  T out{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(source, line, std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw ParseError(source, line, std::string("non-finite ") + what);
  }
  return out;
}

bool on_court(double x, double y) { return x >= 0.0 && x <= kCourtLength && y >= 0.0 && y <= kCourtWidth; }

struct RawFrame {
  std::size_t line;
  Frame frame;
  std::size_t player_count;
};

}  // namespace

IngestResult parse_game(std::istream& in, const std::string& source) {
  IngestResult result;
  GameRecord& game = result.game;
  bool have_header = false, have_hoops = false;
  std::vector<RawFrame> raw;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split(line, ' ');
    if (fields.empty()) continue;
    const std::string_view kind = fields[0];
    if (!have_header && kind != "game") throw ParseError(source, n, "expected 'game' header first");
    if (kind == "game") {
      if (have_header) throw ParseError(source, n, "duplicate game header");
      if (fields.size() != 4) throw ParseError(source, n, "game header needs <game-id> <home> <away>");
      game.game_id = fields[1];
      game.home_team = fields[2];
      game.away_team = fields[3];
      if (game.home_team == game.away_team) throw ParseError(source, n, "home and away teams are identical");
      have_header = true;
    } else if (kind == "player") {
      if (fields.size() < 3) throw ParseError(source, n, "player line needs <agent-id> <team>");
      RosterEntry entry;
      entry.agent_id = number<std::int32_t>(fields[1], source, n, "agent id");
      if (entry.agent_id < 0) throw ParseError(source, n, "agent id must be non-negative");
      if (fields[2] == game.home_team) {
        entry.home = true;
      } else if (fields[2] == game.away_team) {
        entry.home = false;
      } else {
        throw ParseError(source, n, "team '" + std::string(fields[2]) + "' is neither home nor away");
      }
      if (fields.size() > 3) {
        const auto start = fields[3].data() - line.data();
        entry.name = line.substr(static_cast<std::size_t>(start));
      }
      if (game.find_player(entry.agent_id) != nullptr) {
        throw ParseError(source, n, "agent " + std::to_string(entry.agent_id) + " listed twice");
      }
      game.roster.push_back(std::move(entry));
    } else if (kind == "hoops") {
      if (have_hoops) throw ParseError(source, n, "duplicate hoops line");
      if (fields.size() != 2) throw ParseError(source, n, "hoops line needs left or right");
      if (fields[1] == "left") {
        game.home_hoop = Side::Left;
      } else if (fields[1] == "right") {
        game.home_hoop = Side::Right;
      } else {
        throw ParseError(source, n, "hoops side must be left or right");
      }
      have_hoops = true;
    } else if (kind == "f") {
      if (fields.size() < 6) throw ParseError(source, n, "frame line needs period, clock and ball coordinates");
      RawFrame rf{n, {}, fields.size() - 6};
      rf.frame.period = number<int>(fields[1], source, n, "period");
      if (rf.frame.period < 1) throw ParseError(source, n, "period must be at least 1");
      rf.frame.clock = number<double>(fields[2], source, n, "clock");
      for (int i = 0; i < 3; ++i) rf.frame.ball[i] = number<double>(fields[3 + i], source, n, "ball coordinate");
      for (std::size_t i = 6; i < fields.size(); ++i) {
        const auto triple = split(fields[i], ',');
        if (triple.size() != 3) throw ParseError(source, n, "player entry must be id,x,y");
        PlayerPosition p{number<std::int32_t>(triple[0], source, n, "agent id"),
                         number<double>(triple[1], source, n, "x"), number<double>(triple[2], source, n, "y")};
        if (i - 6 < kPlayersOnCourt) rf.frame.players[i - 6] = p;
      }
      raw.push_back(rf);
    } else {
      throw ParseError(source, n, "unknown line type '" + std::string(kind) + "'");
    }
  }
  if (!have_header) throw ParseError(source, n, "missing game header");
  if (!have_hoops) throw ParseError(source, n, "missing hoops line");

  auto warn = [&](std::size_t line_no, const std::string& why) {
    result.warnings.push_back(source + ":" + std::to_string(line_no) + ": frame dropped: " + why);
  };
  for (auto& rf : raw) {
    Frame& f = rf.frame;
    if (rf.player_count != kPlayersOnCourt) {
      warn(rf.line, "has " + std::to_string(rf.player_count) + " players, expected 10");
      continue;
    }
    if (!on_court(f.ball[0], f.ball[1]) || f.ball[2] < 0.0) {
      warn(rf.line, "ball outside the court");
      continue;
    }
    std::sort(f.players.begin(), f.players.end(),
              [](const PlayerPosition& a, const PlayerPosition& b) { return a.agent_id < b.agent_id; });
    std::string why;
    for (std::size_t i = 0; i < kPlayersOnCourt && why.empty(); ++i) {
      const auto& p = f.players[i];
      if (i > 0 && f.players[i - 1].agent_id == p.agent_id) why = "agent " + std::to_string(p.agent_id) + " repeated";
      else if (game.find_player(p.agent_id) == nullptr) why = "agent " + std::to_string(p.agent_id) + " not on roster";
      else if (!on_court(p.x, p.y)) why = "agent " + std::to_string(p.agent_id) + " outside the court";
    }
    if (why.empty() && !game.frames.empty()) {
      const Frame& last = game.frames.back();
      const bool later = f.period > last.period || (f.period == last.period && f.clock < last.clock);
      if (!later) why = "out of time order";
    }
    if (!why.empty()) {
      warn(rf.line, why);
      continue;
    }
    game.frames.push_back(f);
  }
  return result;
}

IngestResult ingest_game(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tracking file " + path.string());
  return parse_game(in, path.string());
}

void write_game(std::ostream& out, const GameRecord& game) {
  out << "game " << game.game_id << ' ' << game.home_team << ' ' << game.away_team << '\n';
  for (const auto& r : game.roster) {
    out << "player " << r.agent_id << ' ' << (r.home ? game.home_team : game.away_team);
    if (!r.name.empty()) out << ' ' << r.name;
    out << '\n';
  }
  out << "hoops " << side_name(game.home_hoop) << '\n';
  std::string row;
  for (const auto& f : game.frames) {
    row = "f " + std::to_string(f.period) + ' ' + format_double(f.clock);
    for (double b : f.ball) row += ' ' + format_double(b);
    for (const auto& p : f.players) {
      row += ' ' + std::to_string(p.agent_id) + ',' + format_double(p.x) + ',' + format_double(p.y);
    }
    row += '\n';
    out << row;
  }
}

void write_game_file(const std::filesystem::path& path, const GameRecord& game) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tracking file " + path.string());
  write_game(out, game);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace courtformer::data
