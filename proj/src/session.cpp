#include "storyloom/session.hpp"

#include "storyloom/errors.hpp"

namespace storyloom {

std::string_view to_string(TurnRole role) {
  switch (role) {
    case TurnRole::Player: return "player";
    case TurnRole::Npc: return "npc";
    case TurnRole::Cutscene: return "cutscene";
  }
  return "npc";
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Completed: return "completed";
    case SessionStatus::Abandoned: return "abandoned";
  }
  return "active";
}

TurnRole parse_role(std::string_view text) {
  if (text == "player") return TurnRole::Player;
  if (text == "npc") return TurnRole::Npc;
  if (text == "cutscene") return TurnRole::Cutscene;
  throw ParseError("role", 0, "unknown turn role '" + std::string(text) + "'");
}

SessionStatus parse_status(std::string_view text) {
  if (text == "active") return SessionStatus::Active;
  if (text == "completed") return SessionStatus::Completed;
  if (text == "abandoned") return SessionStatus::Abandoned;
  throw ParseError("status", 0, "unknown session status '" + std::string(text) + "'");
}

nlohmann::ordered_json turn_to_json(const ChatTurn& turn) {
  return {{"role", to_string(turn.role)},
          {"text", turn.text},
          {"level_at_time", turn.level_at_time},
          {"fired_trigger_ids", turn.fired_trigger_ids},
          {"timestamp", format_instant(turn.timestamp)},
          {"media_ids", turn.media_ids}};
}

nlohmann::ordered_json session_to_json(const GameSession& s) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSessionSchemaVersion;
  doc["session_id"] = s.session_id;
  doc["corpus_hash"] = s.corpus_hash;
  doc["current_level"] = s.current_level;
  doc["fired"] = std::vector<std::string>(s.fired.begin(), s.fired.end());
  doc["status"] = to_string(s.status);
  doc["created_at"] = format_instant(s.created_at);
  doc["updated_at"] = format_instant(s.updated_at);
  auto history = nlohmann::ordered_json::array();
  for (const auto& t : s.history) history.push_back(turn_to_json(t));
  doc["history"] = std::move(history);
  return doc;
}

nlohmann::ordered_json outcome_to_json(const TurnOutcome& o) {
  nlohmann::ordered_json doc;
  doc["npc_reply"] = o.npc_reply;
  doc["newly_fired"] = o.newly_fired;
  if (o.transition) {
    doc["transition"] = {{"cutscene_text", o.transition->cutscene_text},
                         {"next_goal_text", o.transition->next_goal_text},
                         {"new_level", o.transition->new_level},
                         {"epilogue_text", o.transition->epilogue_text}};
  } else {
    doc["transition"] = nullptr;
  }
  doc["completed"] = o.completed;
  doc["unlocked_media"] = o.unlocked_media;
  doc["moderated"] = o.moderated;
  return doc;
}

std::string serialize_session(const GameSession& session) { return session_to_json(session).dump(2) + "\n"; }

namespace {

template <typename T>
T field(const nlohmann::json& doc, const char* key, const std::string& path) {
  if (!doc.is_object() || !doc.contains(key)) throw ParseError(path + key, 0, "missing field");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + key, 0, e.what());
  }
}

}  // namespace

GameSession parse_session(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", 0, e.what());
  }
  if (field<int>(doc, "schema_version", "") != kSessionSchemaVersion) {
    throw ParseError("schema_version", 0, "unsupported session schema version");
  }
  GameSession s;
  s.session_id = field<std::string>(doc, "session_id", "");
  s.corpus_hash = field<std::string>(doc, "corpus_hash", "");
  s.current_level = field<int>(doc, "current_level", "");
  for (auto& id : field<std::vector<std::string>>(doc, "fired", "")) s.fired.insert(std::move(id));
  s.status = parse_status(field<std::string>(doc, "status", ""));
  s.created_at = parse_instant(field<std::string>(doc, "created_at", ""));
  s.updated_at = parse_instant(field<std::string>(doc, "updated_at", ""));
  const auto history = field<nlohmann::json>(doc, "history", "");
  if (!history.is_array()) throw ParseError("history", 0, "expected an array");
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto path = "history[" + std::to_string(i) + "].";
    const auto& h = history[i];
    ChatTurn t;
    t.role = parse_role(field<std::string>(h, "role", path));
    t.text = field<std::string>(h, "text", path);
    t.level_at_time = field<int>(h, "level_at_time", path);
    t.fired_trigger_ids = field<std::vector<std::string>>(h, "fired_trigger_ids", path);
    t.timestamp = parse_instant(field<std::string>(h, "timestamp", path));
    t.media_ids = field<std::vector<std::string>>(h, "media_ids", path);
    s.history.push_back(std::move(t));
  }
  return s;
}

}  // namespace storyloom
