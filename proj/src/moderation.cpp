#include "storyloom/moderation.hpp"

#include "storyloom/text.hpp"

#include <cctype>

namespace storyloom {

namespace {

// Non-alphanumeric ASCII becomes a space so terms match on word boundaries.
// Bytes >= 0x80 are kept as word characters.
std::string word_padded(std::string_view text) {
  std::string s = normalize_text(text);
  for (char& ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && !std::isalnum(u)) ch = ' ';
  }
  std::string out = " ";
  bool space = true;
  for (char ch : s) {
    if (ch == ' ') {
      if (!space) out += ' ';
      space = true;
    } else {
      out += ch;
      space = false;
    }
  }
  if (!space) out += ' ';
  return out;
}

}  // namespace

BlocklistModerator::BlocklistModerator(std::vector<std::string> terms) {
  for (const auto& t : terms) {
    auto padded = word_padded(t);
    if (padded.size() > 1) terms_.push_back(std::move(padded));
  }
}

std::optional<std::string> BlocklistModerator::find_violation(std::string_view text) const {
  const std::string haystack = word_padded(text);
  for (const auto& term : terms_) {
    if (haystack.find(term) != std::string::npos) return trim(term);
  }
  return std::nullopt;
}

const std::vector<std::string>& default_blocklist() {
  static const std::vector<std::string> terms{
      "fuck", "fucking", "motherfucker", "shit", "bullshit", "bitch", "cunt", "asshole",
      "bastard", "dickhead", "slut", "whore", "retard", "kill yourself", "kys",
  };
  return terms;
}

std::shared_ptr<const Moderator> default_moderator() {
  static const auto instance = std::make_shared<const BlocklistModerator>(default_blocklist());
  return instance;
}

}  // namespace storyloom
