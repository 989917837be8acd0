#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storyloom {

class Moderator {
 public:
  virtual ~Moderator() = default;
  // The offending term, or nullopt when the text may be shown.
  virtual std::optional<std::string> find_violation(std::string_view text) const = 0;
};

// Whole-word (or whole-phrase) match on normalized text.
class BlocklistModerator final : public Moderator {
 public:
  explicit BlocklistModerator(std::vector<std::string> terms);
  std::optional<std::string> find_violation(std::string_view text) const override;

 private:
  std::vector<std::string> terms_;  // normalized, word-padded
};

const std::vector<std::string>& default_blocklist();
std::shared_ptr<const Moderator> default_moderator();

}  // namespace storyloom
