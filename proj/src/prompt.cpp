#include "storyloom/prompt.hpp"

#include <stdexcept>

namespace storyloom {

std::vector<ChatTurn> truncate_history(std::span<const ChatTurn> history, std::size_t budget) {
  if (budget < 2) throw std::invalid_argument("history budget must be at least 2");
  std::size_t start = history.size() > budget ? history.size() - budget : 0;
  while (start < history.size() && history[start].role == TurnRole::Cutscene) ++start;
  return {history.begin() + static_cast<std::ptrdiff_t>(start), history.end()};
}

// The persona prompt below is authored content for this engine.
PromptBundle build_npc_prompt(const NarrativeCorpus& corpus, const GameSession& session,
                              const TurnOutcome& outcome_so_far, std::string_view player_message,
                              std::size_t budget) {
  const Persona& persona = corpus.persona;
  const int level = session.current_level;
  const bool final_level = level == corpus.final_level();

  std::string d;
  d += "You are " + persona.character_name +
       ", a stranger who has reached the player through direct messages on a social media app.\n";
  if (!persona.backstory.empty()) d += persona.backstory + "\n";
  if (!persona.style_directives.empty()) {
    d += "\nHow you speak:\n";
    for (const auto& rule : persona.style_directives) d += "- " + rule + "\n";
  }
  d += "\nThe player is trying to help you recover your lost memories.\n";
  d += "Their current goal: " + corpus.levels.at(level).goal_text + "\n";
  d += "Stay in character. Draw only on the knowledge listed for you and on the conversation so far.\n";
  if (final_level) {
    d += "\nYour memory of what you truly are has returned. When it fits the conversation you may disclose it: " +
         persona.identity_secret + "\n";
  } else {
    d += "\nYou do not remember what you truly are. Never state or hint at your true nature; "
         "if asked, say that part of you is still lost.\n";
  }

  bool any_reveal = false;
  for (const auto& id : outcome_so_far.newly_fired) {
    const Trigger* t = corpus.find_trigger(id);
    if (t == nullptr) continue;
    if (!any_reveal) {
      d += "\nThe player's message has unlocked a memory. Your reply must disclose the following, "
           "in your own words:\n";
      any_reveal = true;
    }
    d += "- " + t->reveal_text + "\n";
  }

  PromptBundle bundle;
  bundle.system_directives = std::move(d);
  for (const auto& f : visible_facts(corpus, level)) bundle.knowledge.push_back(f.text);
  bundle.window = truncate_history(session.history, budget);
  bundle.player_message = std::string(player_message);
  return bundle;
}

}  // namespace storyloom
