#pragma once

#include "storyloom/clock.hpp"
#include "storyloom/corpus.hpp"
#include "storyloom/engine.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/gateway.hpp"
#include "storyloom/store.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storyloom {

class NotFound : public Error {
 public:
  using Error::Error;
};

class UnknownCorpus : public Error {
 public:
  using Error::Error;
};

// Another turn on the same session is in flight.
class Conflict : public Error {
 public:
  using Error::Error;
};

// The gateway failed; the stored session was not touched.
class UpstreamUnavailable : public Error {
 public:
  using Error::Error;
};

struct FeedEntry {
  std::string media_id;
  std::string caption;
  std::string asset_url;
  Instant unlocked_at{};

  bool operator==(const FeedEntry&) const = default;
};

// Unlocked media of `session`, newest first (ties in corpus order).
std::vector<FeedEntry> feed_entries(const NarrativeCorpus& corpus, const GameSession& session);

nlohmann::ordered_json feed_to_json(const std::vector<FeedEntry>& feed);

struct ServiceOptions {
  JudgePolicy policy = JudgePolicy::LexicalOnly;
  std::size_t history_budget = kDefaultHistoryBudget;
  Clock clock = system_clock();
  IdGenerator ids = random_id_generator();
  std::shared_ptr<const Moderator> moderator = default_moderator();
  std::function<void(TurnStage)> stage_hook;
};

// Sessions, turns and feeds over a set of loaded corpora. Safe for
// concurrent use; turns on one session are mutually exclusive and a second
// concurrent turn is rejected with Conflict.
class GameService {
 public:
  GameService(std::vector<std::shared_ptr<const NarrativeCorpus>> corpora, Gateway& gateway, SessionStore& store,
              ServiceOptions options = {});

  // Throws UnknownCorpus.
  GameSession create_session(std::string_view corpus_id);

  // Throws NotFound, Conflict, UpstreamUnavailable, SessionNotActive,
  // EmptyMessage.
  TurnOutcome post_message(std::string_view session_id, std::string_view text);

  // Throws NotFound, Conflict, SessionNotActive.
  GameSession abandon(std::string_view session_id);

  // Read-only. Throws NotFound.
  GameSession get_session(std::string_view session_id) const;
  nlohmann::ordered_json session_view(std::string_view session_id) const;
  std::vector<FeedEntry> get_feed(std::string_view session_id) const;

  nlohmann::ordered_json health() const;

  // Asset file for a `/assets/<path>` request, only if some corpus declares
  // that asset_path.
  std::optional<std::filesystem::path> resolve_asset(std::string_view relative) const;

  const std::vector<std::shared_ptr<const NarrativeCorpus>>& corpora() const { return corpora_; }

 private:
  struct Bound {
    std::shared_ptr<const NarrativeCorpus> corpus;
    std::unique_ptr<Engine> engine;
  };

  const Bound& bound_for(const GameSession& session) const;
  GameSession load_or_throw(std::string_view session_id) const;
  std::shared_ptr<std::mutex> turn_lock(std::string_view session_id);

  std::vector<std::shared_ptr<const NarrativeCorpus>> corpora_;
  std::map<std::string, Bound, std::less<>> by_hash_;
  std::map<std::string, std::string, std::less<>> hash_by_id_;
  SessionStore& store_;
  ServiceOptions options_;

  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>, std::less<>> turn_locks_;
};

nlohmann::ordered_json session_view_json(const NarrativeCorpus& corpus, const GameSession& session);

// HTTP front end over a GameService (cpp-httplib underneath).
class HttpFrontend {
 public:
  struct Options {
    std::string ui_origin;  // CORS allow-origin; empty disables CORS headers
  };

  HttpFrontend(GameService& service, Options options);
  ~HttpFrontend();

  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (or -1); then serve().
  int bind_any_port(const std::string& host);
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace storyloom
