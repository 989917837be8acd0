#include "storyloom/service.hpp"

#include "storyloom/log.hpp"

#include <algorithm>

namespace storyloom {

std::vector<FeedEntry> feed_entries(const NarrativeCorpus& corpus, const GameSession& session) {
  struct Ranked {
    FeedEntry entry;
    std::size_t order;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < corpus.media.size(); ++i) {
    const MediaPost& m = corpus.media[i];
    std::optional<Instant> when;
    if (const auto* by_trigger = std::get_if<UnlockByTrigger>(&m.unlock)) {
      if (session.fired.contains(by_trigger->trigger_id)) {
        when = session.updated_at;
        for (const auto& turn : session.history) {
          const auto& ids = turn.fired_trigger_ids;
          if (turn.role == TurnRole::Player && std::find(ids.begin(), ids.end(), by_trigger->trigger_id) != ids.end()) {
            when = turn.timestamp;
            break;
          }
        }
      }
    } else {
      for (const auto& turn : session.history) {
        const auto& ids = turn.media_ids;
        if (turn.role == TurnRole::Cutscene && std::find(ids.begin(), ids.end(), m.media_id) != ids.end()) {
          when = turn.timestamp;
          break;
        }
      }
    }
    if (when) ranked.push_back({FeedEntry{m.media_id, m.caption, "/assets/" + m.asset_path, *when}, i});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.entry.unlocked_at != b.entry.unlocked_at) return a.entry.unlocked_at > b.entry.unlocked_at;
    return a.order < b.order;
  });
  std::vector<FeedEntry> out;
  for (auto& r : ranked) out.push_back(std::move(r.entry));
  return out;
}

nlohmann::ordered_json feed_to_json(const std::vector<FeedEntry>& feed) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& e : feed) {
    out.push_back({{"media_id", e.media_id},
                   {"caption", e.caption},
                   {"asset_url", e.asset_url},
                   {"unlocked_at", format_instant(e.unlocked_at)}});
  }
  return out;
}

nlohmann::ordered_json session_view_json(const NarrativeCorpus& corpus, const GameSession& s) {
  auto history = nlohmann::ordered_json::array();
  for (const auto& t : s.history) history.push_back(turn_to_json(t));
  const bool finished = s.status == SessionStatus::Completed;
  return {{"session_id", s.session_id},
          {"corpus_id", corpus.corpus_id},
          {"status", to_string(s.status)},
          {"current_level", s.current_level},
          {"level_count", corpus.levels.size()},
          {"goal_text", finished ? std::string() : corpus.levels.at(s.current_level).goal_text},
          {"history", std::move(history)}};
}

GameService::GameService(std::vector<std::shared_ptr<const NarrativeCorpus>> corpora, Gateway& gateway,
                         SessionStore& store, ServiceOptions options)
    : corpora_(std::move(corpora)), store_(store), options_(std::move(options)) {
  if (corpora_.empty()) throw std::invalid_argument("service needs at least one corpus");
  if (!options_.ids) options_.ids = random_id_generator();
  for (const auto& c : corpora_) {
    if (hash_by_id_.contains(c->corpus_id)) throw std::invalid_argument("duplicate corpus id " + c->corpus_id);
    EngineOptions eo;
    eo.policy = options_.policy;
    eo.history_budget = options_.history_budget;
    eo.clock = options_.clock;
    eo.moderator = options_.moderator;
    eo.stage_hook = options_.stage_hook;
    hash_by_id_.emplace(c->corpus_id, c->content_hash);
    by_hash_.emplace(c->content_hash, Bound{c, std::make_unique<Engine>(c, gateway, std::move(eo))});
  }
}

const GameService::Bound& GameService::bound_for(const GameSession& session) const {
  auto it = by_hash_.find(session.corpus_hash);
  if (it == by_hash_.end()) {
    throw CorpusMismatch("session " + session.session_id + " belongs to a corpus version that is not loaded");
  }
  return it->second;
}

GameSession GameService::load_or_throw(std::string_view session_id) const {
  auto session = store_.load(session_id);
  if (!session) throw NotFound("no session '" + std::string(session_id) + "'");
  return std::move(*session);
}

std::shared_ptr<std::mutex> GameService::turn_lock(std::string_view session_id) {
  std::lock_guard lock(locks_mutex_);
  auto it = turn_locks_.find(session_id);
  if (it == turn_locks_.end()) {
    it = turn_locks_.emplace(std::string(session_id), std::make_shared<std::mutex>()).first;
  }
  return it->second;
}

GameSession GameService::create_session(std::string_view corpus_id) {
  auto it = hash_by_id_.find(corpus_id);
  if (it == hash_by_id_.end()) throw UnknownCorpus("no corpus '" + std::string(corpus_id) + "'");
  const Bound& bound = by_hash_.at(it->second);
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::string id = options_.ids();
    auto lock = turn_lock(id);
    std::unique_lock guard(*lock);
    if (store_.contains(id)) continue;
    GameSession session = bound.engine->new_session(std::move(id));
    store_.commit(session);
    return session;
  }
  throw Error("could not allocate a fresh session id");
}

TurnOutcome GameService::post_message(std::string_view session_id, std::string_view text) {
  if (!store_.contains(session_id)) throw NotFound("no session '" + std::string(session_id) + "'");
  auto lock = turn_lock(session_id);
  std::unique_lock guard(*lock, std::try_to_lock);
  if (!guard.owns_lock()) throw Conflict("another message for this session is being processed");

  GameSession session = load_or_throw(session_id);
  const Bound& bound = bound_for(session);
  TurnOutcome outcome;
  try {
    outcome = bound.engine->submit_message(session, text);
  } catch (const GatewayError& e) {
    log(LogLevel::Warning, std::string("turn failed upstream: ") + e.what());
    throw UpstreamUnavailable(std::string("language model unavailable: ") + e.what());
  }
  store_.commit(session);
  return outcome;
}

GameSession GameService::abandon(std::string_view session_id) {
  if (!store_.contains(session_id)) throw NotFound("no session '" + std::string(session_id) + "'");
  auto lock = turn_lock(session_id);
  std::unique_lock guard(*lock, std::try_to_lock);
  if (!guard.owns_lock()) throw Conflict("a message for this session is being processed");
  GameSession session = load_or_throw(session_id);
  bound_for(session).engine->abandon(session);
  store_.commit(session);
  return session;
}

GameSession GameService::get_session(std::string_view session_id) const { return load_or_throw(session_id); }

nlohmann::ordered_json GameService::session_view(std::string_view session_id) const {
  const GameSession session = load_or_throw(session_id);
  return session_view_json(*bound_for(session).corpus, session);
}

std::vector<FeedEntry> GameService::get_feed(std::string_view session_id) const {
  const GameSession session = load_or_throw(session_id);
  return feed_entries(*bound_for(session).corpus, session);
}

nlohmann::ordered_json GameService::health() const {
  nlohmann::ordered_json corpora = nlohmann::ordered_json::object();
  for (const auto& c : corpora_) corpora[c->corpus_id] = c->content_hash;
  return {{"status", "ok"}, {"corpus_hash", corpora_.front()->content_hash}, {"corpora", std::move(corpora)}};
}

std::optional<std::filesystem::path> GameService::resolve_asset(std::string_view relative) const {
  for (const auto& c : corpora_) {
    if (c->asset_root.empty()) continue;
    for (const auto& m : c->media) {
      if (m.asset_path != relative) continue;
      auto path = c->asset_root / m.asset_path;
      if (std::filesystem::is_regular_file(path)) return path;
    }
  }
  return std::nullopt;
}

}  // namespace storyloom
