#pragma once

#include "storyloom/session.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

namespace storyloom {

// Points inside a commit where a crash can be simulated.
enum class CommitPoint { BeforeWrite, TempWritten, Renamed, Indexed };

struct StoreEntry {
  SessionStatus status = SessionStatus::Active;
  Instant updated_at{};

  bool operator==(const StoreEntry&) const = default;
};

// One JSON document per session under `root`, replaced by
// write-temp-fsync-rename. Opening a store scans the directory, drops
// leftover temp files and rebuilds the index.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  void commit(const GameSession& session);

  std::optional<GameSession> load(std::string_view session_id) const;
  std::optional<std::string> load_raw(std::string_view session_id) const;
  bool contains(std::string_view session_id) const;

  std::map<std::string, StoreEntry> index() const;
  std::size_t size() const;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path document_path(std::string_view session_id) const;

  // Test hook, called at each CommitPoint.
  void set_commit_hook(std::function<void(CommitPoint, const std::string&)> hook);

  // [A-Za-z0-9_-]{1,128}
  static bool valid_id(std::string_view session_id);

 private:
  void recover();

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, StoreEntry, std::less<>> index_;
  std::function<void(CommitPoint, const std::string&)> hook_;
};

}  // namespace storyloom
