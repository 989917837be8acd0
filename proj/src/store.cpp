#include "storyloom/store.hpp"

#include "storyloom/errors.hpp"
#include "storyloom/log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

namespace storyloom {

namespace {

constexpr std::string_view kDocSuffix = ".json";
constexpr std::string_view kTempMarker = ".tmp-";

[[noreturn]] void fail_errno(const std::string& what) {
  throw Error(what + ": " + std::strerror(errno));
}

void write_all_synced(const std::filesystem::path& path, std::string_view bytes) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail_errno("open " + path.string());
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      fail_errno("write " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    fail_errno("fsync " + path.string());
  }
  ::close(fd);
}

void sync_directory(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
  recover();
}

bool SessionStore::valid_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

std::filesystem::path SessionStore::document_path(std::string_view id) const {
  return root_ / (std::string(id) + std::string(kDocSuffix));
}

void SessionStore::set_commit_hook(std::function<void(CommitPoint, const std::string&)> hook) {
  std::unique_lock lock(mutex_);
  hook_ = std::move(hook);
}

void SessionStore::recover() {
  std::unique_lock lock(mutex_);
  index_.clear();
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.find(kTempMarker) != std::string::npos) {
      std::error_code ec;
      std::filesystem::remove(entry.path(), ec);
      log(LogLevel::Info, "removed interrupted commit " + name);
      continue;
    }
    if (!name.ends_with(kDocSuffix)) continue;
    const std::string id = name.substr(0, name.size() - kDocSuffix.size());
    if (!valid_id(id)) continue;
    const auto raw = read_file(entry.path());
    try {
      const GameSession s = parse_session(raw.value_or(""));
      if (s.session_id != id) throw ParseError("session_id", 0, "does not match file name");
      index_[id] = StoreEntry{s.status, s.updated_at};
    } catch (const Error& e) {
      log(LogLevel::Warning, "skipping unreadable session document " + name + ": " + e.what());
    }
  }
}

void SessionStore::commit(const GameSession& session) {
  if (!valid_id(session.session_id)) throw Error("invalid session id '" + session.session_id + "'");
  static std::atomic<std::uint64_t> counter{0};
  const std::string bytes = serialize_session(session);
  const auto target = document_path(session.session_id);
  const auto temp = root_ / (session.session_id + std::string(kDocSuffix) + std::string(kTempMarker) +
                             std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));

  std::function<void(CommitPoint, const std::string&)> hook;
  {
    std::shared_lock lock(mutex_);
    hook = hook_;
  }
  auto at = [&](CommitPoint p) {
    if (hook) hook(p, session.session_id);
  };

  at(CommitPoint::BeforeWrite);
  write_all_synced(temp, bytes);
  at(CommitPoint::TempWritten);
  if (::rename(temp.c_str(), target.c_str()) != 0) {
    std::error_code ec;
    std::filesystem::remove(temp, ec);
    fail_errno("rename " + temp.string());
  }
  sync_directory(root_);
  at(CommitPoint::Renamed);
  {
    std::unique_lock lock(mutex_);
    index_[session.session_id] = StoreEntry{session.status, session.updated_at};
  }
  at(CommitPoint::Indexed);
}

std::optional<std::string> SessionStore::load_raw(std::string_view id) const {
  if (!valid_id(id)) return std::nullopt;
  return read_file(document_path(id));
}

std::optional<GameSession> SessionStore::load(std::string_view id) const {
  auto raw = load_raw(id);
  if (!raw) return std::nullopt;
  return parse_session(*raw);
}

bool SessionStore::contains(std::string_view id) const {
  std::shared_lock lock(mutex_);
  return index_.find(id) != index_.end();
}

std::map<std::string, StoreEntry> SessionStore::index() const {
  std::shared_lock lock(mutex_);
  return {index_.begin(), index_.end()};
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return index_.size();
}

}  // namespace storyloom
