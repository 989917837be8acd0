#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace storyloom {

struct Persona {
  std::string character_name;
  std::string backstory;
  std::vector<std::string> style_directives;
  // The final reveal. Kept out of every prompt until the last level.
  std::string identity_secret;
};

struct WorldFact {
  std::string fact_id;
  std::string text;
  int min_level = 0;
};

// One pattern group matches when all of its keyphrases occur in the
// normalized utterance; a trigger prefilter-matches when any group does.
using PatternGroup = std::vector<std::string>;

struct Trigger {
  std::string trigger_id;
  int level = 0;
  std::vector<PatternGroup> lexical_patterns;
  std::string judge_rubric;
  std::string reveal_text;
  bool required = true;
};

struct Cutscene {
  std::string text;
  std::string next_goal_text;  // empty only on the final level
  std::vector<std::string> media_ids;
};

struct Level {
  int index = 0;
  std::string goal_text;
  std::vector<std::string> trigger_ids;
  Cutscene cutscene;
};

struct UnlockByTrigger {
  std::string trigger_id;
  bool operator==(const UnlockByTrigger&) const = default;
};

struct UnlockByLevel {
  int level = 0;
  bool operator==(const UnlockByLevel&) const = default;
};

using Unlock = std::variant<UnlockByTrigger, UnlockByLevel>;

struct MediaPost {
  std::string media_id;
  std::string caption;
  std::string asset_path;
  Unlock unlock;
};

inline constexpr int kCorpusSchemaVersion = 1;
inline constexpr std::string_view kDefaultModerationFallback =
    "Sorry... my thoughts scrambled for a moment. What were we talking about?";

// Immutable once loaded; share freely across sessions and threads.
struct NarrativeCorpus {
  std::string corpus_id;
  std::string content_hash;
  Persona persona;
  std::string prologue_text;
  std::string epilogue_text;
  std::string moderation_fallback{kDefaultModerationFallback};
  std::vector<WorldFact> facts;
  std::vector<Level> levels;
  // Document order. `trigger_index` maps trigger_id to a position here.
  std::vector<Trigger> triggers;
  std::map<std::string, std::size_t, std::less<>> trigger_index;
  std::vector<MediaPost> media;
  // Directory asset paths resolve against; empty for in-memory documents.
  std::filesystem::path asset_root;

  int final_level() const { return static_cast<int>(levels.size()) - 1; }
  const Trigger* find_trigger(std::string_view id) const;
  const MediaPost* find_media(std::string_view id) const;
  // Triggers of `level` that are listed in its trigger_ids, in document order.
  std::vector<const Trigger*> level_triggers(int level) const;
};

struct LoadOptions {
  // Ignore unknown fields instead of raising ParseError.
  bool lenient = false;
};

// Parses a YAML (or JSON) corpus document, validates every invariant and
// computes content_hash. Throws ParseError or ValidationError.
NarrativeCorpus load_corpus(std::string_view document, const LoadOptions& options = {});

// As load_corpus; asset_root is set to the file's directory.
NarrativeCorpus load_corpus_file(const std::filesystem::path& path, const LoadOptions& options = {});

// Canonical JSON: fixed field order, two-space indent, trailing newline.
// content_hash and asset_root are not part of the document.
std::string serialize_corpus(const NarrativeCorpus& corpus);

// SHA-256 of the compact canonical form.
std::string compute_content_hash(const NarrativeCorpus& corpus);

// Hard invariant check on an in-memory corpus; throws ValidationError.
// Rebuilds trigger_index.
void validate_corpus(NarrativeCorpus& corpus);

// Facts with min_level <= level, in corpus order. Throws OutOfRange.
std::vector<WorldFact> visible_facts(const NarrativeCorpus& corpus, int level);

// Does `normalized_text` satisfy any of the trigger's pattern groups?
bool matches_patterns(const Trigger& trigger, std::string_view normalized_text);

enum class DiagnosticKind {
  TriggerCollision,
  UnreachableMedia,
  DeadFact,
  OrphanTrigger,
  SecretLeak,
};

std::string_view to_string(DiagnosticKind kind);

struct Diagnostic {
  DiagnosticKind kind;
  std::string subject;  // the offending identifier(s)
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

// Soft warnings beyond validation. Never throws; empty means clean.
std::vector<Diagnostic> lint_corpus(const NarrativeCorpus& corpus);

// `warning[kind] subject: message`
std::string format_diagnostic(const Diagnostic& d);

}  // namespace storyloom
