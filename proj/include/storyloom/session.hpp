#pragma once

#include "storyloom/clock.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace storyloom {

enum class TurnRole { Player, Npc, Cutscene };
enum class SessionStatus { Active, Completed, Abandoned };

std::string_view to_string(TurnRole role);
std::string_view to_string(SessionStatus status);
TurnRole parse_role(std::string_view text);
SessionStatus parse_status(std::string_view text);

struct ChatTurn {
  TurnRole role = TurnRole::Npc;
  std::string text;
  int level_at_time = 0;
  std::vector<std::string> fired_trigger_ids;  // Player turns only
  Instant timestamp{};
  std::vector<std::string> media_ids;  // Cutscene turns only

  bool operator==(const ChatTurn&) const = default;
};

struct GameSession {
  std::string session_id;
  std::string corpus_hash;
  int current_level = 0;
  std::set<std::string> fired;
  std::vector<ChatTurn> history;
  SessionStatus status = SessionStatus::Active;
  Instant created_at{};
  Instant updated_at{};

  bool operator==(const GameSession&) const = default;
};

struct LevelTransition {
  std::string cutscene_text;
  std::string next_goal_text;  // empty when the game completed
  int new_level = 0;           // unchanged on completion
  std::string epilogue_text;   // set only on completion

  bool operator==(const LevelTransition&) const = default;
};

struct TurnOutcome {
  std::string npc_reply;
  std::vector<std::string> newly_fired;
  std::optional<LevelTransition> transition;
  bool completed = false;
  std::vector<std::string> unlocked_media;
  // The model's reply was blocked and replaced with the fallback line.
  bool moderated = false;

  bool operator==(const TurnOutcome&) const = default;
};

inline constexpr int kSessionSchemaVersion = 1;

nlohmann::ordered_json turn_to_json(const ChatTurn& turn);
nlohmann::ordered_json session_to_json(const GameSession& session);
nlohmann::ordered_json outcome_to_json(const TurnOutcome& outcome);

// Pretty JSON with a trailing newline; byte-stable for equal sessions.
std::string serialize_session(const GameSession& session);

// Throws ParseError on malformed or wrong-version documents.
GameSession parse_session(std::string_view document);

}  // namespace storyloom
