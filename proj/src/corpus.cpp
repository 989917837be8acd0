#include "storyloom/corpus.hpp"

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace storyloom {

const Trigger* NarrativeCorpus::find_trigger(std::string_view id) const {
  auto it = trigger_index.find(id);
  return it == trigger_index.end() ? nullptr : &triggers[it->second];
}

const MediaPost* NarrativeCorpus::find_media(std::string_view id) const {
  auto it = std::find_if(media.begin(), media.end(), [&](const MediaPost& m) { return m.media_id == id; });
  return it == media.end() ? nullptr : &*it;
}

std::vector<const Trigger*> NarrativeCorpus::level_triggers(int level) const {
  std::vector<const Trigger*> out;
  if (level < 0 || level >= static_cast<int>(levels.size())) return out;
  const auto& listed = levels[level].trigger_ids;
  for (const auto& t : triggers) {
    if (t.level == level && std::find(listed.begin(), listed.end(), t.trigger_id) != listed.end()) {
      out.push_back(&t);
    }
  }
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// YAML reading with field paths

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

class Reader {
 public:
  explicit Reader(bool lenient) : lenient_(lenient) {}

  void expect_map(const YAML::Node& node, const std::string& path) const {
    if (!node.IsMap()) throw ParseError(path, line_of(node), "expected a mapping");
  }

  void check_fields(const YAML::Node& node, const std::string& path,
                    std::initializer_list<std::string_view> allowed) const {
    expect_map(node, path);
    if (lenient_) return;
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ParseError(join(path, key), line_of(kv.first), "unknown field");
      }
    }
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

  static YAML::Node child(const YAML::Node& node, std::string_view key, const std::string& path,
                          bool required) {
    YAML::Node value = node[std::string(key)];
    if (!value.IsDefined() && required) {
      throw ParseError(join(path, key), line_of(node), "missing required field");
    }
    return value;
  }

  static std::string text(const YAML::Node& node, std::string_view key, const std::string& path,
                          bool required = true) {
    YAML::Node v = child(node, key, path, required);
    if (!v.IsDefined() || v.IsNull()) return {};
    if (!v.IsScalar()) throw ParseError(join(path, key), line_of(v), "expected text");
    return v.Scalar();
  }

  static int integer(const YAML::Node& node, std::string_view key, const std::string& path) {
    YAML::Node v = child(node, key, path, true);
    if (!v.IsScalar()) throw ParseError(join(path, key), line_of(v), "expected an integer");
    try {
      return v.as<int>();
    } catch (const YAML::Exception&) {
      throw ParseError(join(path, key), line_of(v), "expected an integer, got '" + v.Scalar() + "'");
    }
  }

  static bool boolean(const YAML::Node& node, std::string_view key, const std::string& path, bool fallback) {
    YAML::Node v = child(node, key, path, false);
    if (!v.IsDefined()) return fallback;
    if (!v.IsScalar()) throw ParseError(join(path, key), line_of(v), "expected true or false");
    try {
      return v.as<bool>();
    } catch (const YAML::Exception&) {
      throw ParseError(join(path, key), line_of(v), "expected true or false, got '" + v.Scalar() + "'");
    }
  }

  static std::vector<std::string> text_list(const YAML::Node& node, std::string_view key,
                                            const std::string& path, bool required) {
    YAML::Node v = child(node, key, path, required);
    std::vector<std::string> out;
    if (!v.IsDefined() || v.IsNull()) return out;
    const auto field = join(path, key);
    if (!v.IsSequence()) throw ParseError(field, line_of(v), "expected a list");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].IsScalar()) {
        throw ParseError(field + "[" + std::to_string(i) + "]", line_of(v[i]), "expected text");
      }
      out.push_back(v[i].Scalar());
    }
    return out;
  }

  static YAML::Node sequence(const YAML::Node& node, std::string_view key, const std::string& path,
                             bool required) {
    YAML::Node v = child(node, key, path, required);
    if (v.IsDefined() && !v.IsNull() && !v.IsSequence()) {
      throw ParseError(join(path, key), line_of(v), "expected a list");
    }
    return v;
  }

 private:
  bool lenient_;
};

std::string indexed(std::string_view base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

NarrativeCorpus parse_document(std::string_view document, const LoadOptions& options) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(document));
  } catch (const YAML::ParserException& e) {
    throw ParseError("", e.mark.line >= 0 ? e.mark.line + 1 : 0, e.msg);
  }

  const Reader r(options.lenient);
  r.check_fields(root, "",
                 {"schema_version", "corpus_id", "persona", "prologue", "epilogue", "moderation_fallback",
                  "facts", "levels", "triggers", "media"});

  const int version = Reader::integer(root, "schema_version", "");
  if (version != kCorpusSchemaVersion) {
    throw ParseError("schema_version", line_of(root["schema_version"]),
                     "unsupported schema version " + std::to_string(version) + " (expected 1)");
  }

  NarrativeCorpus c;
  c.corpus_id = Reader::text(root, "corpus_id", "");

  const YAML::Node persona = Reader::child(root, "persona", "", true);
  r.check_fields(persona, "persona", {"character_name", "backstory", "style_directives", "identity_secret"});
  c.persona.character_name = Reader::text(persona, "character_name", "persona");
  c.persona.backstory = Reader::text(persona, "backstory", "persona", false);
  c.persona.style_directives = Reader::text_list(persona, "style_directives", "persona", false);
  c.persona.identity_secret = Reader::text(persona, "identity_secret", "persona");

  c.prologue_text = Reader::text(root, "prologue", "");
  c.epilogue_text = Reader::text(root, "epilogue", "", false);
  if (root["moderation_fallback"].IsDefined()) {
    c.moderation_fallback = Reader::text(root, "moderation_fallback", "");
  }

  const YAML::Node facts = Reader::sequence(root, "facts", "", false);
  for (std::size_t i = 0; facts.IsDefined() && i < facts.size(); ++i) {
    const auto path = indexed("facts", i);
    r.check_fields(facts[i], path, {"fact_id", "text", "min_level"});
    WorldFact f;
    f.fact_id = Reader::text(facts[i], "fact_id", path);
    f.text = Reader::text(facts[i], "text", path);
    f.min_level = Reader::integer(facts[i], "min_level", path);
    c.facts.push_back(std::move(f));
  }

  const YAML::Node levels = Reader::sequence(root, "levels", "", true);
  for (std::size_t i = 0; !levels.IsNull() && i < levels.size(); ++i) {
    const auto path = indexed("levels", i);
    r.check_fields(levels[i], path, {"index", "goal_text", "trigger_ids", "cutscene"});
    Level l;
    l.index = Reader::integer(levels[i], "index", path);
    l.goal_text = Reader::text(levels[i], "goal_text", path);
    l.trigger_ids = Reader::text_list(levels[i], "trigger_ids", path, true);
    const auto cpath = path + ".cutscene";
    const YAML::Node cut = Reader::child(levels[i], "cutscene", path, true);
    r.check_fields(cut, cpath, {"text", "next_goal_text", "media_ids"});
    l.cutscene.text = Reader::text(cut, "text", cpath);
    l.cutscene.next_goal_text = Reader::text(cut, "next_goal_text", cpath, false);
    l.cutscene.media_ids = Reader::text_list(cut, "media_ids", cpath, false);
    c.levels.push_back(std::move(l));
  }

  const YAML::Node triggers = Reader::sequence(root, "triggers", "", true);
  for (std::size_t i = 0; !triggers.IsNull() && i < triggers.size(); ++i) {
    const auto path = indexed("triggers", i);
    r.check_fields(triggers[i], path,
                   {"trigger_id", "level", "lexical_patterns", "judge_rubric", "reveal_text", "required"});
    Trigger t;
    t.trigger_id = Reader::text(triggers[i], "trigger_id", path);
    t.level = Reader::integer(triggers[i], "level", path);
    const YAML::Node groups = Reader::sequence(triggers[i], "lexical_patterns", path, true);
    for (std::size_t g = 0; !groups.IsNull() && g < groups.size(); ++g) {
      const auto gpath = indexed(path + ".lexical_patterns", g);
      PatternGroup group;
      if (groups[g].IsScalar()) {
        group.push_back(groups[g].Scalar());
      } else if (groups[g].IsSequence()) {
        for (std::size_t k = 0; k < groups[g].size(); ++k) {
          if (!groups[g][k].IsScalar()) throw ParseError(indexed(gpath, k), line_of(groups[g][k]), "expected text");
          group.push_back(groups[g][k].Scalar());
        }
      } else {
        throw ParseError(gpath, line_of(groups[g]), "expected a list of keyphrases");
      }
      t.lexical_patterns.push_back(std::move(group));
    }
    t.judge_rubric = Reader::text(triggers[i], "judge_rubric", path);
    t.reveal_text = Reader::text(triggers[i], "reveal_text", path);
    t.required = Reader::boolean(triggers[i], "required", path, true);
    c.triggers.push_back(std::move(t));
  }

  const YAML::Node media = Reader::sequence(root, "media", "", false);
  for (std::size_t i = 0; media.IsDefined() && !media.IsNull() && i < media.size(); ++i) {
    const auto path = indexed("media", i);
    r.check_fields(media[i], path, {"media_id", "caption", "asset_path", "unlock"});
    MediaPost m;
    m.media_id = Reader::text(media[i], "media_id", path);
    m.caption = Reader::text(media[i], "caption", path, false);
    m.asset_path = Reader::text(media[i], "asset_path", path);
    const auto upath = path + ".unlock";
    const YAML::Node unlock = Reader::child(media[i], "unlock", path, true);
    r.check_fields(unlock, upath, {"trigger_id", "level"});
    const bool by_trigger = unlock["trigger_id"].IsDefined();
    const bool by_level = unlock["level"].IsDefined();
    if (by_trigger == by_level) {
      throw ParseError(upath, line_of(unlock), "unlock needs exactly one of trigger_id or level");
    }
    if (by_trigger) {
      m.unlock = UnlockByTrigger{Reader::text(unlock, "trigger_id", upath)};
    } else {
      m.unlock = UnlockByLevel{Reader::integer(unlock, "level", upath)};
    }
    c.media.push_back(std::move(m));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Validation

bool safe_relative_path(std::string_view p) {
  if (p.empty() || p.front() == '/' || p.front() == '\\') return false;
  if (p.size() >= 2 && p[1] == ':') return false;  // drive letter
  std::size_t start = 0;
  while (start <= p.size()) {
    auto end = p.find_first_of("/\\", start);
    if (end == std::string_view::npos) end = p.size();
    const auto segment = p.substr(start, end - start);
    if (segment == "..") return false;
    start = end + 1;
  }
  return true;
}

class Validator {
 public:
  explicit Validator(NarrativeCorpus& c) : c_(c) {}

  void run() {
    const int level_count = static_cast<int>(c_.levels.size());
    if (trim(c_.corpus_id).empty()) add("corpus_id", "", "corpus_id is empty");
    if (trim(c_.persona.character_name).empty()) add("persona.character_name", "", "character_name is empty");
    if (trim(c_.persona.identity_secret).empty()) add("persona.identity_secret", "", "identity_secret is empty");
    if (trim(c_.prologue_text).empty()) add("prologue", "", "prologue is empty");
    if (level_count == 0) add("levels", "", "corpus needs at least one level");

    std::set<std::string> fact_ids;
    for (std::size_t i = 0; i < c_.facts.size(); ++i) {
      const auto& f = c_.facts[i];
      const auto path = indexed("facts", i);
      if (f.fact_id.empty()) add(path + ".fact_id", "", "fact_id is empty");
      if (!fact_ids.insert(f.fact_id).second) add(path + ".fact_id", f.fact_id, "duplicate fact_id");
      if (f.min_level < 0 || f.min_level >= level_count) {
        add(path + ".min_level", f.fact_id, "min_level " + std::to_string(f.min_level) + " is not a level index");
      }
    }

    c_.trigger_index.clear();
    for (std::size_t i = 0; i < c_.triggers.size(); ++i) {
      const auto& t = c_.triggers[i];
      const auto path = indexed("triggers", i);
      if (t.trigger_id.empty()) add(path + ".trigger_id", "", "trigger_id is empty");
      if (!c_.trigger_index.emplace(t.trigger_id, i).second) {
        add(path + ".trigger_id", t.trigger_id, "duplicate trigger_id");
      }
      if (t.level < 0 || t.level >= level_count) {
        add(path + ".level", t.trigger_id,
            "level " + std::to_string(t.level) + " does not exist (corpus has " + std::to_string(level_count) +
                " levels)");
      }
      if (t.lexical_patterns.empty()) add(path + ".lexical_patterns", t.trigger_id, "no pattern groups");
      for (std::size_t g = 0; g < t.lexical_patterns.size(); ++g) {
        const auto gpath = indexed(path + ".lexical_patterns", g);
        if (t.lexical_patterns[g].empty()) add(gpath, t.trigger_id, "empty pattern group");
        for (std::size_t k = 0; k < t.lexical_patterns[g].size(); ++k) {
          if (normalize_text(t.lexical_patterns[g][k]).empty()) {
            add(indexed(gpath, k), t.trigger_id, "keyphrase is empty after normalization");
          }
        }
      }
      if (trim(t.judge_rubric).empty()) add(path + ".judge_rubric", t.trigger_id, "judge_rubric is empty");
      if (trim(t.reveal_text).empty()) add(path + ".reveal_text", t.trigger_id, "reveal_text is empty");
    }

    std::set<std::string> media_ids;
    for (std::size_t i = 0; i < c_.media.size(); ++i) {
      const auto& m = c_.media[i];
      const auto path = indexed("media", i);
      if (m.media_id.empty()) add(path + ".media_id", "", "media_id is empty");
      if (!media_ids.insert(m.media_id).second) add(path + ".media_id", m.media_id, "duplicate media_id");
      if (!safe_relative_path(m.asset_path)) {
        add(path + ".asset_path", m.media_id, "asset_path must be relative without '..' segments");
      }
      if (const auto* by_trigger = std::get_if<UnlockByTrigger>(&m.unlock)) {
        if (!c_.trigger_index.contains(by_trigger->trigger_id)) {
          add(path + ".unlock.trigger_id", m.media_id, "unknown trigger '" + by_trigger->trigger_id + "'");
        }
      } else {
        const int lvl = std::get<UnlockByLevel>(m.unlock).level;
        if (lvl < 0 || lvl >= level_count) {
          add(path + ".unlock.level", m.media_id, "level " + std::to_string(lvl) + " does not exist");
        }
      }
    }

    for (std::size_t i = 0; i < c_.levels.size(); ++i) {
      const auto& l = c_.levels[i];
      const auto path = indexed("levels", i);
      const bool is_final = static_cast<int>(i) == level_count - 1;
      if (l.index != static_cast<int>(i)) {
        add(path + ".index", std::to_string(l.index),
            "level indices must be contiguous from 0; expected " + std::to_string(i));
      }
      bool has_required = false;
      std::set<std::string> listed;
      for (std::size_t k = 0; k < l.trigger_ids.size(); ++k) {
        const auto& id = l.trigger_ids[k];
        const auto tpath = indexed(path + ".trigger_ids", k);
        if (!listed.insert(id).second) add(tpath, id, "trigger listed twice");
        const Trigger* t = c_.find_trigger(id);
        if (t == nullptr) {
          add(tpath, id, "unknown trigger");
        } else if (t->level != static_cast<int>(i)) {
          add(tpath, id, "trigger belongs to level " + std::to_string(t->level));
        } else if (t->required) {
          has_required = true;
        }
      }
      if (!has_required) add(path + ".trigger_ids", std::to_string(i), "level has no required trigger");

      const auto cpath = path + ".cutscene";
      if (trim(l.cutscene.text).empty()) add(cpath + ".text", std::to_string(i), "cutscene text is empty");
      const bool no_next = trim(l.cutscene.next_goal_text).empty();
      if (is_final && !no_next) {
        add(cpath + ".next_goal_text", std::to_string(i), "final level cutscene must not introduce a next goal");
      } else if (!is_final && no_next) {
        add(cpath + ".next_goal_text", std::to_string(i), "non-final level cutscene needs a next goal");
      }
      for (std::size_t k = 0; k < l.cutscene.media_ids.size(); ++k) {
        const auto& id = l.cutscene.media_ids[k];
        const auto mpath = indexed(cpath + ".media_ids", k);
        const MediaPost* m = c_.find_media(id);
        if (m == nullptr) {
          add(mpath, id, "unknown media");
        } else if (std::get_if<UnlockByLevel>(&m->unlock) == nullptr ||
                   std::get<UnlockByLevel>(m->unlock).level != static_cast<int>(i)) {
          add(mpath, id, "media shown by this cutscene must unlock at level " + std::to_string(i));
        }
      }
    }

    if (!issues_.empty()) throw ValidationError(std::move(issues_));
  }

 private:
  void add(std::string path, std::string id, std::string message) {
    issues_.push_back({std::move(path), std::move(id), std::move(message)});
  }

  NarrativeCorpus& c_;
  std::vector<ValidationIssue> issues_;
};

// ---------------------------------------------------------------------------
// Canonical form

nlohmann::ordered_json canonical(const NarrativeCorpus& c) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["schema_version"] = kCorpusSchemaVersion;
  doc["corpus_id"] = c.corpus_id;
  doc["persona"] = ordered_json{{"character_name", c.persona.character_name},
                                {"backstory", c.persona.backstory},
                                {"style_directives", c.persona.style_directives},
                                {"identity_secret", c.persona.identity_secret}};
  doc["prologue"] = c.prologue_text;
  doc["epilogue"] = c.epilogue_text;
  doc["moderation_fallback"] = c.moderation_fallback;

  auto facts = ordered_json::array();
  for (const auto& f : c.facts) {
    facts.push_back(ordered_json{{"fact_id", f.fact_id}, {"text", f.text}, {"min_level", f.min_level}});
  }
  doc["facts"] = std::move(facts);

  auto levels = ordered_json::array();
  for (const auto& l : c.levels) {
    levels.push_back(ordered_json{{"index", l.index},
                                  {"goal_text", l.goal_text},
                                  {"trigger_ids", l.trigger_ids},
                                  {"cutscene", ordered_json{{"text", l.cutscene.text},
                                                            {"next_goal_text", l.cutscene.next_goal_text},
                                                            {"media_ids", l.cutscene.media_ids}}}});
  }
  doc["levels"] = std::move(levels);

  auto triggers = ordered_json::array();
  for (const auto& t : c.triggers) {
    triggers.push_back(ordered_json{{"trigger_id", t.trigger_id},
                                    {"level", t.level},
                                    {"lexical_patterns", t.lexical_patterns},
                                    {"judge_rubric", t.judge_rubric},
                                    {"reveal_text", t.reveal_text},
                                    {"required", t.required}});
  }
  doc["triggers"] = std::move(triggers);

  auto media = ordered_json::array();
  for (const auto& m : c.media) {
    ordered_json unlock;
    if (const auto* by_trigger = std::get_if<UnlockByTrigger>(&m.unlock)) {
      unlock["trigger_id"] = by_trigger->trigger_id;
    } else {
      unlock["level"] = std::get<UnlockByLevel>(m.unlock).level;
    }
    media.push_back(ordered_json{
        {"media_id", m.media_id}, {"caption", m.caption}, {"asset_path", m.asset_path}, {"unlock", unlock}});
  }
  doc["media"] = std::move(media);
  return doc;
}

}  // namespace

void validate_corpus(NarrativeCorpus& corpus) { Validator(corpus).run(); }

NarrativeCorpus load_corpus(std::string_view document, const LoadOptions& options) {
  NarrativeCorpus corpus = parse_document(document, options);
  validate_corpus(corpus);
  corpus.content_hash = compute_content_hash(corpus);
  return corpus;
}

NarrativeCorpus load_corpus_file(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read corpus file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  NarrativeCorpus corpus = load_corpus(buffer.str(), options);
  corpus.asset_root = std::filesystem::absolute(path).parent_path();
  return corpus;
}

std::string serialize_corpus(const NarrativeCorpus& corpus) { return canonical(corpus).dump(2) + "\n"; }

std::string compute_content_hash(const NarrativeCorpus& corpus) { return sha256_hex(canonical(corpus).dump()); }

std::vector<WorldFact> visible_facts(const NarrativeCorpus& corpus, int level) {
  if (level < 0 || level >= static_cast<int>(corpus.levels.size())) {
    throw OutOfRange("level " + std::to_string(level) + " out of range");
  }
  std::vector<WorldFact> out;
  std::copy_if(corpus.facts.begin(), corpus.facts.end(), std::back_inserter(out),
               [level](const WorldFact& f) { return f.min_level <= level; });
  return out;
}

bool matches_patterns(const Trigger& trigger, std::string_view normalized_text) {
  return std::any_of(trigger.lexical_patterns.begin(), trigger.lexical_patterns.end(), [&](const PatternGroup& g) {
    return !g.empty() && std::all_of(g.begin(), g.end(), [&](const std::string& phrase) {
      return contains_normalized(normalized_text, phrase);
    });
  });
}

}  // namespace storyloom
