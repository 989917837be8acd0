#pragma once

#include "storyloom/corpus.hpp"
#include "storyloom/session.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace storyloom {

inline constexpr std::size_t kDefaultHistoryBudget = 24;

// Everything the chat model sees for one NPC reply.
struct PromptBundle {
  std::string system_directives;
  std::vector<std::string> knowledge;  // fact texts visible at the current level
  std::vector<ChatTurn> window;        // suffix of history, at most the budget
  std::string player_message;

  bool operator==(const PromptBundle&) const = default;
};

// Longest suffix of at most `budget` turns that begins on a Player or Npc
// turn. Cutscenes inside the window are kept. Requires budget >= 2.
std::vector<ChatTurn> truncate_history(std::span<const ChatTurn> history, std::size_t budget);

// `outcome_so_far.newly_fired` reveals are appended as mandatory content for
// the reply. The identity secret is only included on the final level.
PromptBundle build_npc_prompt(const NarrativeCorpus& corpus, const GameSession& session,
                              const TurnOutcome& outcome_so_far, std::string_view player_message,
                              std::size_t budget = kDefaultHistoryBudget);

}  // namespace storyloom
