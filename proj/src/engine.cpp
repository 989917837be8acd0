#include "storyloom/engine.hpp"

#include "storyloom/errors.hpp"
#include "storyloom/log.hpp"
#include "storyloom/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace storyloom {

JudgePolicy parse_policy(std::string_view text) {
  if (text == "lexical") return JudgePolicy::LexicalOnly;
  if (text == "judge") return JudgePolicy::LexicalThenJudge;
  throw std::invalid_argument("unknown judge policy '" + std::string(text) + "' (expected lexical or judge)");
}

std::string_view to_string(JudgePolicy policy) {
  return policy == JudgePolicy::LexicalOnly ? "lexical" : "judge";
}

std::string_view to_string(TurnStage stage) {
  switch (stage) {
    case TurnStage::EvaluateTriggers: return "evaluate_triggers";
    case TurnStage::BuildPrompt: return "build_prompt";
    case TurnStage::CompleteChat: return "complete_chat";
    case TurnStage::Moderate: return "moderate";
    case TurnStage::Advance: return "advance";
  }
  return "unknown";
}

GameSession new_session(const NarrativeCorpus& corpus, std::string session_id, const Clock& clock) {
  GameSession s;
  s.session_id = std::move(session_id);
  s.corpus_hash = corpus.content_hash;
  s.created_at = clock();
  s.updated_at = s.created_at;
  s.history.push_back(ChatTurn{TurnRole::Npc, corpus.prologue_text, 0, {}, s.created_at, {}});
  return s;
}

std::vector<std::string> lexical_prefilter(const NarrativeCorpus& corpus, const GameSession& session,
                                           std::string_view player_text) {
  std::vector<std::string> out;
  const std::string normalized = normalize_text(player_text);
  if (normalized.empty()) return out;
  for (const Trigger* t : corpus.level_triggers(session.current_level)) {
    if (session.fired.contains(t->trigger_id)) continue;
    if (matches_patterns(*t, normalized)) out.push_back(t->trigger_id);
  }
  return out;
}

std::vector<JudgeVerdict> evaluate_triggers(const NarrativeCorpus& corpus, const GameSession& session,
                                            std::string_view player_text, Gateway& gateway, JudgePolicy policy) {
  std::vector<JudgeVerdict> verdicts;
  const auto candidates = lexical_prefilter(corpus, session, player_text);
  if (candidates.empty()) return verdicts;

  if (policy == JudgePolicy::LexicalOnly) {
    for (const auto& id : candidates) {
      verdicts.push_back({id, true, "lexical pattern matched", VerdictSource::LexicalOnly});
    }
    return verdicts;
  }

  const auto& history = session.history;
  const std::size_t n = std::min(kJudgeContextTurns, history.size());
  const std::span<const ChatTurn> context(history.data() + history.size() - n, n);
  for (const auto& id : candidates) {
    const Trigger* t = corpus.find_trigger(id);
    JudgeVerdict v{id, false, {}, VerdictSource::LlmJudge};
    try {
      const JudgeReply reply = gateway.judge_trigger(t->judge_rubric, player_text, context);
      v.matched = reply.matched;
      v.rationale = reply.rationale.empty() ? (reply.matched ? "judge answered YES" : "judge answered NO")
                                            : reply.rationale;
    } catch (const JudgeUnparseable& e) {
      log(LogLevel::Warning, "judge reply for trigger " + id + " was unparseable; treating as not matched");
      v.matched = false;
      v.rationale = std::string("unparseable judge reply: ") + e.what();
    }
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

std::vector<std::string> media_unlocked_by_triggers(const NarrativeCorpus& corpus,
                                                    const std::vector<std::string>& trigger_ids) {
  std::vector<std::string> out;
  for (const auto& m : corpus.media) {
    const auto* by_trigger = std::get_if<UnlockByTrigger>(&m.unlock);
    if (by_trigger != nullptr &&
        std::find(trigger_ids.begin(), trigger_ids.end(), by_trigger->trigger_id) != trigger_ids.end()) {
      out.push_back(m.media_id);
    }
  }
  return out;
}

std::vector<std::string> media_unlocked_by_level(const NarrativeCorpus& corpus, int level) {
  std::vector<std::string> out;
  for (const auto& m : corpus.media) {
    const auto* by_level = std::get_if<UnlockByLevel>(&m.unlock);
    if (by_level != nullptr && by_level->level == level) out.push_back(m.media_id);
  }
  return out;
}

std::optional<LevelTransition> maybe_advance(GameSession& session, const NarrativeCorpus& corpus,
                                             const Clock& clock) {
  if (session.status != SessionStatus::Active) return std::nullopt;
  const int level = session.current_level;
  const auto triggers = corpus.level_triggers(level);
  const bool done = std::all_of(triggers.begin(), triggers.end(), [&](const Trigger* t) {
    return !t->required || session.fired.contains(t->trigger_id);
  });
  if (!done) return std::nullopt;

  const Cutscene& cut = corpus.levels.at(level).cutscene;
  const Instant now = clock();
  session.history.push_back(ChatTurn{TurnRole::Cutscene, cut.text, level, {}, now, media_unlocked_by_level(corpus, level)});
  session.updated_at = now;

  LevelTransition transition;
  transition.cutscene_text = cut.text;
  if (level == corpus.final_level()) {
    session.status = SessionStatus::Completed;
    transition.new_level = level;
    transition.epilogue_text = corpus.epilogue_text;
    if (!corpus.epilogue_text.empty()) {
      const Instant closing = clock();
      session.history.push_back(ChatTurn{TurnRole::Cutscene, corpus.epilogue_text, level, {}, closing, {}});
      session.updated_at = closing;
    }
  } else {
    session.current_level = level + 1;
    transition.new_level = level + 1;
    transition.next_goal_text = cut.next_goal_text;
  }
  return transition;
}

void abandon(GameSession& session, const Clock& clock) {
  if (session.status != SessionStatus::Active) {
    throw SessionNotActive("session " + session.session_id + " is already " + std::string(to_string(session.status)));
  }
  session.status = SessionStatus::Abandoned;
  session.updated_at = clock();
}

Engine::Engine(std::shared_ptr<const NarrativeCorpus> corpus, Gateway& gateway, EngineOptions options)
    : corpus_(std::move(corpus)), gateway_(gateway), options_(std::move(options)) {
  if (!corpus_) throw std::invalid_argument("engine needs a corpus");
  if (options_.history_budget < 2) throw std::invalid_argument("history budget must be at least 2");
  if (!options_.clock) options_.clock = system_clock();
}

GameSession Engine::new_session(std::string session_id) const {
  return storyloom::new_session(*corpus_, std::move(session_id), options_.clock);
}

void Engine::abandon(GameSession& session) const { storyloom::abandon(session, options_.clock); }

void Engine::check_binding(const GameSession& session) const {
  if (session.corpus_hash != corpus_->content_hash) {
    throw CorpusMismatch("session " + session.session_id + " was created from a different corpus version");
  }
}

TurnOutcome Engine::submit_message(GameSession& session, std::string_view player_text) const {
  if (session.status != SessionStatus::Active) {
    throw SessionNotActive("session " + session.session_id + " is " + std::string(to_string(session.status)));
  }
  if (normalize_text(player_text).empty()) throw EmptyMessage("message is empty");
  check_binding(session);

  const NarrativeCorpus& corpus = *corpus_;
  auto stage = [this](TurnStage s) {
    if (options_.stage_hook) options_.stage_hook(s);
  };

  // Work on a copy; `session` is only replaced once every stage succeeded.
  GameSession work = session;
  TurnOutcome outcome;

  stage(TurnStage::EvaluateTriggers);
  for (const auto& v : evaluate_triggers(corpus, work, player_text, gateway_, options_.policy)) {
    if (v.matched && work.fired.insert(v.trigger_id).second) outcome.newly_fired.push_back(v.trigger_id);
  }
  outcome.unlocked_media = media_unlocked_by_triggers(corpus, outcome.newly_fired);

  stage(TurnStage::BuildPrompt);
  const PromptBundle bundle = build_npc_prompt(corpus, work, outcome, player_text, options_.history_budget);
  const Instant said_at = options_.clock();
  work.history.push_back(
      ChatTurn{TurnRole::Player, std::string(player_text), work.current_level, outcome.newly_fired, said_at, {}});

  stage(TurnStage::CompleteChat);
  std::string reply = gateway_.complete_chat(bundle);
  if (trim(reply).empty()) throw GatewayRejected(0, "chat model returned an empty reply");

  stage(TurnStage::Moderate);
  if (options_.moderator) {
    if (auto term = options_.moderator->find_violation(reply)) {
      log(LogLevel::Warning, "moderation replaced an NPC reply in session " + work.session_id);
      reply = corpus.moderation_fallback;
      outcome.moderated = true;
    }
  }
  const Instant replied_at = options_.clock();
  work.history.push_back(ChatTurn{TurnRole::Npc, reply, work.current_level, {}, replied_at, {}});
  work.updated_at = replied_at;
  outcome.npc_reply = std::move(reply);

  stage(TurnStage::Advance);
  const int before = work.current_level;
  outcome.transition = maybe_advance(work, corpus, options_.clock);
  if (outcome.transition) {
    for (auto& id : media_unlocked_by_level(corpus, before)) outcome.unlocked_media.push_back(std::move(id));
    outcome.completed = work.status == SessionStatus::Completed;
  }

  session = std::move(work);
  return outcome;
}

}  // namespace storyloom
