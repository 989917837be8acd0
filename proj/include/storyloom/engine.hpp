#pragma once

#include "storyloom/clock.hpp"
#include "storyloom/corpus.hpp"
#include "storyloom/gateway.hpp"
#include "storyloom/moderation.hpp"
#include "storyloom/prompt.hpp"
#include "storyloom/session.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace storyloom {

enum class JudgePolicy { LexicalOnly, LexicalThenJudge };

// `lexical` or `judge`; throws std::invalid_argument.
JudgePolicy parse_policy(std::string_view text);
std::string_view to_string(JudgePolicy policy);

enum class VerdictSource { LexicalOnly, LlmJudge };

struct JudgeVerdict {
  std::string trigger_id;
  bool matched = false;
  std::string rationale;
  VerdictSource source = VerdictSource::LexicalOnly;
};

// Stages of the turn pipeline, in execution order.
enum class TurnStage { EvaluateTriggers, BuildPrompt, CompleteChat, Moderate, Advance };
inline constexpr TurnStage kTurnStages[] = {TurnStage::EvaluateTriggers, TurnStage::BuildPrompt,
                                            TurnStage::CompleteChat, TurnStage::Moderate, TurnStage::Advance};
std::string_view to_string(TurnStage stage);

// Prologue Npc turn at level 0, nothing fired, Active.
GameSession new_session(const NarrativeCorpus& corpus, std::string session_id, const Clock& clock);

// Unfired triggers of the current level with a matching pattern group, in
// corpus order.
std::vector<std::string> lexical_prefilter(const NarrativeCorpus& corpus, const GameSession& session,
                                           std::string_view player_text);

// One verdict per prefilter candidate, candidate order. An unparseable judge
// reply counts as not matched; other gateway errors propagate.
std::vector<JudgeVerdict> evaluate_triggers(const NarrativeCorpus& corpus, const GameSession& session,
                                            std::string_view player_text, Gateway& gateway, JudgePolicy policy);

// Advances at most one level when every required trigger of the current
// level has fired: appends the cutscene (and the epilogue on the final
// level).
std::optional<LevelTransition> maybe_advance(GameSession& session, const NarrativeCorpus& corpus,
                                             const Clock& clock);

// Throws SessionNotActive unless Active.
void abandon(GameSession& session, const Clock& clock);

// Media unlocked by firing the given triggers, corpus order.
std::vector<std::string> media_unlocked_by_triggers(const NarrativeCorpus& corpus,
                                                    const std::vector<std::string>& trigger_ids);

// Media unlocked by completing `level`, corpus order.
std::vector<std::string> media_unlocked_by_level(const NarrativeCorpus& corpus, int level);

struct EngineOptions {
  JudgePolicy policy = JudgePolicy::LexicalOnly;
  std::size_t history_budget = kDefaultHistoryBudget;
  Clock clock = system_clock();
  std::shared_ptr<const Moderator> moderator = default_moderator();
  // Called as each stage starts; tests throw from here to inject failures.
  std::function<void(TurnStage)> stage_hook;
};

// Runs turns against one corpus. Holds no per-session state: callers must not
// run two turns on the same session concurrently.
class Engine {
 public:
  Engine(std::shared_ptr<const NarrativeCorpus> corpus, Gateway& gateway, EngineOptions options = {});

  const NarrativeCorpus& corpus() const { return *corpus_; }
  const EngineOptions& options() const { return options_; }

  GameSession new_session(std::string session_id) const;

  // All-or-nothing: on any exception `session` is left exactly as it was.
  // Throws SessionNotActive, EmptyMessage, GatewayError.
  TurnOutcome submit_message(GameSession& session, std::string_view player_text) const;

  void abandon(GameSession& session) const;

  // Throws CorpusMismatch when the session belongs to another corpus version.
  void check_binding(const GameSession& session) const;

 private:
  std::shared_ptr<const NarrativeCorpus> corpus_;
  Gateway& gateway_;
  EngineOptions options_;
};

}  // namespace storyloom
