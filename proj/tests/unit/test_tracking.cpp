#include <gtest/gtest.h>

#include <sstream>

#include "courtformer/data/synthetic.hpp"
#include "courtformer/data/tracking.hpp"
#include "courtformer/errors.hpp"

using namespace courtformer;
using namespace courtformer::data;

namespace {

const char* kHeader =
    "game g1 hawks owls\n"
    "player 3 hawks Ann Lee\n"
    "player 1 hawks\n"
    "player 4 hawks\n"
    "player 9 hawks\n"
    "player 12 hawks\n"
    "player 20 owls\n"
    "player 21 owls\n"
    "player 22 owls\n"
    "player 23 owls\n"
    "player 24 owls\n"
    "hoops left\n";

std::string frame_line(double clock, double first_x, bool shuffled = false) {
  std::string ids_fwd = " 1," + std::to_string(first_x) + ",10 3,20,10 4,30,10 9,40,10 12,50,10";
  std::string away = " 20,20,30 21,30,30 22,40,30 23,50,30 24,60,30";
  std::string players = shuffled ? " 24,60,30 12,50,10 3,20,10 20,20,30 1," + std::to_string(first_x) +
                                       ",10 23,50,30 9,40,10 22,40,30 4,30,10 21,30,30"
                                 : ids_fwd + away;
  std::ostringstream out;
  out << "f 1 " << clock << " 47 25 4.5" << players << "\n";
  return out.str();
}

IngestResult parse(const std::string& text) {
  std::istringstream in(text);
  return parse_game(in, "mem");
}

}  // namespace

TEST(Ingest, MinimalTwoFrameFile) {
  auto r = parse(std::string(kHeader) + frame_line(720, 10) + frame_line(719.96, 10.5));
  EXPECT_TRUE(r.warnings.empty());
  const auto& g = r.game;
  EXPECT_EQ(g.game_id, "g1");
  EXPECT_EQ(g.frames.size(), 2u);
  EXPECT_EQ(g.roster.size(), 10u);
  EXPECT_EQ(g.roster[0].name, "Ann Lee");
  EXPECT_EQ(g.home_hoop, Side::Left);
  EXPECT_EQ(g.frames[1].players[0].x, 10.5);
  EXPECT_EQ(g.frames[0].ball[2], 4.5);
}

TEST(Ingest, OutOfBoundsFrameIsDroppedWithWarning) {
  auto r = parse(std::string(kHeader) + frame_line(720, 95.0) + frame_line(719.96, 10));
  EXPECT_EQ(r.game.frames.size(), 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("mem:13"), std::string::npos);
  EXPECT_NE(r.warnings[0].find("outside the court"), std::string::npos);
}

TEST(Ingest, PlayerOrderWithinFrameIsIrrelevant) {
  auto a = parse(std::string(kHeader) + frame_line(720, 10) + frame_line(719.96, 11));
  auto b = parse(std::string(kHeader) + frame_line(720, 10, true) + frame_line(719.96, 11, true));
  EXPECT_EQ(a.game, b.game);
  EXPECT_EQ(b.game.frames[0].players[0].agent_id, 1);
  EXPECT_EQ(b.game.frames[0].players[9].agent_id, 24);
}

TEST(Ingest, ShortFrameIsDropped) {
  auto r = parse(std::string(kHeader) + "f 1 720 47 25 4 1,1,1 3,2,2\n" + frame_line(719, 10));
  EXPECT_EQ(r.game.frames.size(), 1u);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Ingest, UnknownAgentAndTimeOrderDrops) {
  std::string bad_agent = frame_line(719, 10);
  bad_agent.replace(bad_agent.find(" 24,"), 4, " 77,");
  auto r = parse(std::string(kHeader) + frame_line(720, 10) + bad_agent + frame_line(720, 10) + frame_line(718, 10));
  EXPECT_EQ(r.game.frames.size(), 2u);
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Ingest, MalformedRowReportsLine) {
  try {
    parse(std::string(kHeader) + frame_line(720, 10) + "f 1 719 47 x 4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 14u);
  }
}

TEST(Ingest, RejectsUnknownLineTypesAndMissingHeader) {
  EXPECT_THROW(parse(std::string(kHeader) + "score 10 12\n"), ParseError);
  EXPECT_THROW(parse("player 1 hawks\n"), ParseError);
  EXPECT_THROW(parse("game g a b\nplayer 1 c\n"), ParseError);
  EXPECT_THROW(parse("game g a b\n"), ParseError);
}

TEST(Ingest, MissingFileIsIoError) {
  EXPECT_THROW(ingest_game("/nonexistent/file.trk"), IoError);
}

TEST(Ingest, SyntheticGameRoundTripsLosslessly) {
  SyntheticLeagueConfig c;
  c.games = 1;
  c.frames_per_game = 400;
  const auto game = generate_synthetic_game(c, 0);
  std::stringstream buffer;
  write_game(buffer, game);
  auto back = parse_game(buffer, "synthetic");
  EXPECT_TRUE(back.warnings.empty());
  EXPECT_EQ(back.game, game);
}

TEST(GameRecord, AttackingSideSwapsAtHalftime) {
  auto r = parse(std::string(kHeader) + frame_line(720, 10));
  EXPECT_EQ(r.game.attacking_side(1, 1), Side::Left);
  EXPECT_EQ(r.game.attacking_side(20, 2), Side::Right);
  EXPECT_EQ(r.game.attacking_side(1, 3), Side::Right);
  EXPECT_THROW(r.game.attacking_side(99, 1), IndexError);
}
