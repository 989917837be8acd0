#pragma once

#include "storyloom/engine.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/gateway.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace storyloom {

// Plain-text golden transcript. One player message per line, with mock
// provisioning directives interleaved:
//
//   #reply <npc reply text>
//   #judge <rubric digest> yes|no
//   # free comment
//
// Blank lines are skipped. A message that must start with '#' is written
// with a leading backslash.
struct TranscriptEntry {
  enum class Kind { Message, Reply, Judge };
  Kind kind = Kind::Message;
  int line = 0;
  std::string text;    // message or reply text
  std::string digest;  // Judge only
  bool verdict = false;
};

std::vector<TranscriptEntry> parse_transcript(std::string_view text);

// Loads every directive into the gateway, ignoring messages.
void provision(ScriptedGateway& gateway, const std::vector<TranscriptEntry>& entries);

class ReplayError : public Error {
 public:
  ReplayError(int line, const std::string& message)
      : Error("transcript line " + std::to_string(line) + ": " + message), line_(line), detail_(message) {}
  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  int line_;
  std::string detail_;
};

// Applies directives to `gateway` and messages to `session` in file order.
// `engine` must have been constructed over `gateway`. Throws ReplayError
// naming the offending line.
void replay_transcript(const Engine& engine, ScriptedGateway& gateway, GameSession& session,
                       const std::vector<TranscriptEntry>& entries);

}  // namespace storyloom
