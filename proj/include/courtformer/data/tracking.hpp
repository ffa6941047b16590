#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace courtformer::data {

inline constexpr double kCourtLength = 94.0;
inline constexpr double kCourtWidth = 50.0;
inline constexpr std::size_t kPlayersOnCourt = 10;
inline constexpr int kFrameRate = 25;

enum class Side { Left, Right };

Side opposite(Side s);
const char* side_name(Side s);

struct PlayerPosition {
  std::int32_t agent_id = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlayerPosition&, const PlayerPosition&) = default;
};

// One 25 Hz snapshot. Players are kept sorted by agent id.
struct Frame {
  int period = 1;
  double clock = 0.0;
  std::array<double, 3> ball{};
  std::array<PlayerPosition, kPlayersOnCourt> players{};

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct RosterEntry {
  std::int32_t agent_id = 0;
  bool home = true;
  std::string name;

  friend bool operator==(const RosterEntry&, const RosterEntry&) = default;
};

struct GameRecord {
  std::string game_id;
  std::string home_team;
  std::string away_team;
  std::vector<RosterEntry> roster;
  // Hoop the home team attacks in periods 1 and 2; sides swap from period 3.
  Side home_hoop = Side::Right;
  std::vector<Frame> frames;

  const RosterEntry* find_player(std::int32_t agent_id) const;
  // Side of the hoop `agent_id`'s team attacks during `period`.
  Side attacking_side(std::int32_t agent_id, int period) const;

  friend bool operator==(const GameRecord&, const GameRecord&) = default;
};

struct IngestResult {
  GameRecord game;
  std::vector<std::string> warnings;
};

// Parses the text tracking format. Malformed lines raise ParseError with the
// line number; frames that break court bounds, list the wrong players or go
// backwards in time are dropped with a warning.
IngestResult parse_game(std::istream& in, const std::string& source);
IngestResult ingest_game(const std::filesystem::path& path);

// Writes the same format; numbers use shortest round-trip formatting, so
// parse_game(write_game(g)) == g.
void write_game(std::ostream& out, const GameRecord& game);
void write_game_file(const std::filesystem::path& path, const GameRecord& game);

}  // namespace courtformer::data
