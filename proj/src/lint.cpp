#include "storyloom/corpus.hpp"
#include "storyloom/text.hpp"

#include <algorithm>

namespace storyloom {

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::TriggerCollision: return "trigger-collision";
    case DiagnosticKind::UnreachableMedia: return "unreachable-media";
    case DiagnosticKind::DeadFact: return "dead-fact";
    case DiagnosticKind::OrphanTrigger: return "orphan-trigger";
    case DiagnosticKind::SecretLeak: return "secret-leak";
  }
  return "unknown";
}

std::string format_diagnostic(const Diagnostic& d) {
  return "warning[" + std::string(to_string(d.kind)) + "] " + d.subject + ": " + d.message;
}

namespace {

std::string join_group(const PatternGroup& group) {
  std::string out;
  for (const auto& phrase : group) {
    if (!out.empty()) out += ' ';
    out += phrase;
  }
  return out;
}

// Would an utterance made of `source`'s keyphrases also satisfy `target`?
bool group_covers(const PatternGroup& source, const PatternGroup& target) {
  if (target.empty()) return false;
  const std::string utterance = normalize_text(join_group(source));
  return std::all_of(target.begin(), target.end(),
                     [&](const std::string& phrase) { return contains_normalized(utterance, phrase); });
}

bool triggers_collide(const Trigger& a, const Trigger& b) {
  for (const auto& ga : a.lexical_patterns) {
    for (const auto& gb : b.lexical_patterns) {
      if (group_covers(ga, gb) || group_covers(gb, ga)) return true;
    }
  }
  return false;
}

bool is_listed(const NarrativeCorpus& corpus, const Trigger& t) {
  if (t.level < 0 || t.level >= static_cast<int>(corpus.levels.size())) return false;
  const auto& ids = corpus.levels[t.level].trigger_ids;
  return std::find(ids.begin(), ids.end(), t.trigger_id) != ids.end();
}

void check_secret(const NarrativeCorpus& corpus, std::vector<Diagnostic>& out) {
  const std::string secret = normalize_text(corpus.persona.identity_secret);
  const int final_level = corpus.final_level();
  if (secret.empty() || final_level <= 0) return;
  auto probe = [&](std::string_view text, std::string subject) {
    if (normalize_text(text).find(secret) != std::string::npos) {
      out.push_back({DiagnosticKind::SecretLeak, std::move(subject),
                     "identity_secret appears in content reachable before the final level"});
    }
  };
  probe(corpus.persona.backstory, "persona.backstory");
  for (const auto& s : corpus.persona.style_directives) probe(s, "persona.style_directives");
  probe(corpus.prologue_text, "prologue");
  for (const auto& f : corpus.facts) {
    if (f.min_level < final_level) probe(f.text, f.fact_id);
  }
  for (const auto& t : corpus.triggers) {
    if (t.level < final_level) probe(t.reveal_text, t.trigger_id);
  }
  for (const auto& l : corpus.levels) {
    if (l.index < final_level) probe(l.goal_text, "levels[" + std::to_string(l.index) + "].goal_text");
    // A level-k cutscene sits in the history window from level k+1 onwards.
    if (l.index + 1 < final_level) {
      probe(l.cutscene.text, "levels[" + std::to_string(l.index) + "].cutscene");
      probe(l.cutscene.next_goal_text, "levels[" + std::to_string(l.index) + "].cutscene");
    }
  }
}

}  // namespace

std::vector<Diagnostic> lint_corpus(const NarrativeCorpus& corpus) {
  std::vector<Diagnostic> out;

  for (int level = 0; level < static_cast<int>(corpus.levels.size()); ++level) {
    const auto triggers = corpus.level_triggers(level);
    for (std::size_t i = 0; i < triggers.size(); ++i) {
      for (std::size_t j = i + 1; j < triggers.size(); ++j) {
        if (triggers_collide(*triggers[i], *triggers[j])) {
          out.push_back({DiagnosticKind::TriggerCollision,
                         triggers[i]->trigger_id + "," + triggers[j]->trigger_id,
                         "one utterance satisfies pattern groups of both triggers in level " +
                             std::to_string(level)});
        }
      }
    }
  }

  for (const auto& t : corpus.triggers) {
    if (!is_listed(corpus, t)) {
      out.push_back({DiagnosticKind::OrphanTrigger, t.trigger_id,
                     "not listed in level " + std::to_string(t.level) + " trigger_ids; it can never fire"});
    }
  }

  for (const auto& m : corpus.media) {
    if (const auto* by_trigger = std::get_if<UnlockByTrigger>(&m.unlock)) {
      const Trigger* t = corpus.find_trigger(by_trigger->trigger_id);
      if (t == nullptr || !is_listed(corpus, *t)) {
        out.push_back({DiagnosticKind::UnreachableMedia, m.media_id,
                       "unlock trigger '" + by_trigger->trigger_id + "' can never fire"});
      }
    } else {
      const int lvl = std::get<UnlockByLevel>(m.unlock).level;
      if (lvl < 0 || lvl > corpus.final_level()) {
        out.push_back({DiagnosticKind::UnreachableMedia, m.media_id,
                       "unlock level " + std::to_string(lvl) + " does not exist"});
      }
    }
    if (!corpus.asset_root.empty() && !std::filesystem::exists(corpus.asset_root / m.asset_path)) {
      out.push_back({DiagnosticKind::UnreachableMedia, m.media_id, "asset file missing: " + m.asset_path});
    }
  }

  for (const auto& f : corpus.facts) {
    if (f.min_level > corpus.final_level()) {
      out.push_back({DiagnosticKind::DeadFact, f.fact_id,
                     "min_level " + std::to_string(f.min_level) + " exceeds the final level " +
                         std::to_string(corpus.final_level())});
    }
  }

  check_secret(corpus, out);
  return out;
}

}  // namespace storyloom
