#include "storyloom/transcript.hpp"

#include "storyloom/text.hpp"

#include <cctype>
#include <sstream>

namespace storyloom {

namespace {

bool is_hex(std::string_view s) {
  return s.size() == 16 && s.find_first_not_of("0123456789abcdef") == std::string_view::npos;
}

}  // namespace

std::vector<TranscriptEntry> parse_transcript(std::string_view text) {
  std::vector<TranscriptEntry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;

    if (raw.starts_with("\\#")) {
      entries.push_back({TranscriptEntry::Kind::Message, line, raw.substr(1), {}, false});
      continue;
    }
    if (!raw.starts_with("#")) {
      entries.push_back({TranscriptEntry::Kind::Message, line, raw, {}, false});
      continue;
    }
    if (raw.size() == 1 || raw[1] == ' ' || raw[1] == '\t') continue;  // comment

    const auto space = raw.find(' ');
    const std::string directive = raw.substr(1, space == std::string::npos ? std::string::npos : space - 1);
    const std::string rest = space == std::string::npos ? std::string() : trim(raw.substr(space + 1));
    if (directive == "reply") {
      if (rest.empty()) throw ParseError("#reply", line, "reply text is empty");
      entries.push_back({TranscriptEntry::Kind::Reply, line, rest, {}, false});
    } else if (directive == "judge") {
      std::istringstream words(rest);
      std::string digest, answer, extra;
      words >> digest >> answer;
      for (char& ch : answer) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if (!is_hex(digest)) throw ParseError("#judge", line, "expected a 16-hex-digit rubric digest");
      bool verdict;
      if (answer == "yes") {
        verdict = true;
      } else if (answer == "no") {
        verdict = false;
      } else {
        throw ParseError("#judge", line, "verdict must be yes or no");
      }
      if (words >> extra) throw ParseError("#judge", line, "unexpected text after verdict");
      entries.push_back({TranscriptEntry::Kind::Judge, line, {}, digest, verdict});
    } else {
      throw ParseError("#" + directive, line, "unknown directive");
    }
  }
  return entries;
}

void provision(ScriptedGateway& gateway, const std::vector<TranscriptEntry>& entries) {
  for (const auto& e : entries) {
    if (e.kind == TranscriptEntry::Kind::Reply) gateway.push_reply(e.text);
    if (e.kind == TranscriptEntry::Kind::Judge) gateway.set_verdict(e.digest, e.verdict);
  }
}

void replay_transcript(const Engine& engine, ScriptedGateway& gateway, GameSession& session,
                       const std::vector<TranscriptEntry>& entries) {
  for (const auto& e : entries) {
    switch (e.kind) {
      case TranscriptEntry::Kind::Reply: gateway.push_reply(e.text); break;
      case TranscriptEntry::Kind::Judge: gateway.set_verdict(e.digest, e.verdict); break;
      case TranscriptEntry::Kind::Message:
        try {
          engine.submit_message(session, e.text);
        } catch (const Error& err) {
          throw ReplayError(e.line, err.what());
        }
        break;
    }
  }
}

}  // namespace storyloom
