// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include "storyloom/engine.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/log.hpp"
#include "storyloom/service.hpp"
#include "storyloom/store.hpp"
#include "storyloom/text.hpp"
#include "storyloom/transcript.hpp"

#include "http_harness.hpp"
#include "oracle.hpp"
#include "process.hpp"
#include "test_support.hpp"

#include <chrono>
#include <future>
#include <iostream>
#include <regex>

using namespace storyloom;
using namespace storyloom::testing;

namespace {

// Pinned tolerances.
constexpr double kCorpusBudgetSeconds = 1.0;
constexpr double kOracleBudgetSeconds = 10.0;
constexpr int kOracleTranscripts = 200;
constexpr int kInvariantSequences = 500;
constexpr int kUnparseableReplies = 20;

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// C1: every shipped corpus round-trips with a stable hash and each malformed
// document is rejected with the expected field path.
Verdict corpus_round_trip() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::filesystem::path> docs{source_path("corpora/eternagram-sample/corpus.yaml")};
  for (auto n : {"minimal", "two_level", "three_level"}) docs.push_back(source_path(std::string("tests/fixtures/corpora/") + n + ".yaml"));
  for (const auto& p : docs) {
    const auto c = load_corpus_file(p);
    const auto text = serialize_corpus(c);
    const auto again = load_corpus(text);
    if (again.content_hash != c.content_hash || serialize_corpus(again) != text) v.fail("round trip differs for " + p.string());
  }
  int malformed = 0;
  static const std::regex kind_re("# kind: (\\w+)"), expect_re("# expect: ([^\\n]*)");
  for (const auto& entry : std::filesystem::directory_iterator(source_path("tests/fixtures/malformed"))) {
    const auto body = read_text(entry.path());
    std::smatch kind, expect;
    std::regex_search(body, kind, kind_re);
    std::regex_search(body, expect, expect_re);
    const std::string name = entry.path().filename().string();
    try {
      load_corpus(body);
      v.fail(name + " loaded");
    } catch (const ParseError& e) {
      if (kind[1] != "parse" || e.field_path() != expect[1].str()) v.fail(name + " reported " + e.field_path());
    } catch (const ValidationError& e) {
      bool found = false;
      for (const auto& i : e.issues()) found = found || i.field_path == expect[1].str();
      if (kind[1] != "validation" || !found) v.fail(name + " reported " + e.issues().front().field_path);
    }
    ++malformed;
  }
  if (malformed < 10) v.fail("only " + std::to_string(malformed) + " malformed documents");
  const double took = seconds_since(start);
  if (took >= kCorpusBudgetSeconds) v.fail("took " + std::to_string(took) + "s");
  if (v.pass) v.detail = std::to_string(docs.size()) + " corpora, " + std::to_string(malformed) + " malformed rejected, " +
                         std::to_string(took) + "s";
  return v;
}

// C2: randomized transcripts agree with the brute-force walker after every
// message, under both policies.
Verdict oracle_equivalence() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::shared_ptr<const NarrativeCorpus>> corpora{load_fixture("minimal"), load_fixture("two_level"),
                                                                    load_fixture("three_level")};
  std::mt19937_64 rng(20240101);
  int messages = 0;
  for (int n = 0; n < kOracleTranscripts && v.pass; ++n) {
    const auto& corpus = corpora[n % corpora.size()];
    const bool judged = n % 2 == 1;
    const auto vocab = message_vocabulary(*corpus);
    ScriptedGateway gateway;
    EngineOptions options;
    options.policy = judged ? JudgePolicy::LexicalThenJudge : JudgePolicy::LexicalOnly;
    options.clock = fixed_clock();
    const Engine engine(corpus, gateway, options);
    GameSession session = engine.new_session("o");
    std::vector<OracleStep> steps;
    const int length = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < length && session.status == SessionStatus::Active; ++i) {
      OracleStep step{random_message(rng, vocab), {}};
      for (const auto& t : corpus->triggers) {
        const bool yes = rng() % 4 != 0;
        step.verdicts[t.trigger_id] = yes;
        gateway.set_verdict(rubric_digest(t.judge_rubric), yes);
      }
      gateway.push_reply("reply " + std::to_string(i));
      steps.push_back(step);
      engine.submit_message(session, step.message);
      ++messages;
      const auto expect = oracle_walk(*corpus, steps, judged);
      const bool completed = session.status == SessionStatus::Completed;
      if (expect.level != session.current_level || expect.fired != session.fired || expect.completed != completed) {
        v.fail("transcript " + std::to_string(n) + " diverged at message " + std::to_string(i) + " '" + step.message + "'");
        break;
      }
    }
  }
  const double took = seconds_since(start);
  if (took >= kOracleBudgetSeconds) v.fail("took " + std::to_string(took) + "s");
  if (v.pass) v.detail = std::to_string(kOracleTranscripts) + " transcripts, " + std::to_string(messages) + " messages, " +
                         std::to_string(took) + "s";
  return v;
}

// C3: the CLI replays the golden walkthrough byte-identically to completion,
// through every level transition and the epilogue.
Verdict golden_replay() {
  Verdict v;
  const std::vector<std::string> cmd{cli_path(), "--corpus", source_path("corpora/eternagram-sample/corpus.yaml").string(),
                                     "--policy", "judge", "replay",
                                     source_path("tests/golden/eternagram_walkthrough.txt").string()};
  const auto a = run_process(cmd);
  const auto b = run_process(cmd);
  if (a.code != 0 || b.code != 0) {
    v.fail("replay exited " + std::to_string(a.code) + ": " + a.err);
    return v;
  }
  if (a.out != b.out) v.fail("two replays differ");
  if (a.out != read_text(source_path("tests/golden/eternagram_walkthrough.expected.json"))) v.fail("differs from golden");
  const auto s = parse_session(a.out);
  const auto corpus = sample_corpus();
  if (s.status != SessionStatus::Completed) v.fail("status " + std::string(to_string(s.status)));
  std::vector<std::string> cutscenes;
  for (const auto& t : s.history) if (t.role == TurnRole::Cutscene) cutscenes.push_back(t.text);
  std::vector<std::string> expected;
  for (const auto& l : corpus->levels) expected.push_back(l.cutscene.text);
  expected.push_back(corpus->epilogue_text);
  if (cutscenes != expected) v.fail("cutscene sequence mismatch (" + std::to_string(cutscenes.size()) + " seen)");
  if (v.pass) v.detail = std::to_string(s.history.size()) + " turns, " + std::to_string(corpus->levels.size()) +
                         " transitions + epilogue";
  return v;
}

// C4: invariants over random sequences on every corpus.
Verdict invariants() {
  Verdict v;
  const std::vector<std::shared_ptr<const NarrativeCorpus>> corpora{sample_corpus(), load_fixture("minimal"),
                                                                    load_fixture("two_level"), load_fixture("three_level")};
  std::mt19937_64 rng(99);
  int turns = 0;
  for (int n = 0; n < kInvariantSequences && v.pass; ++n) {
    const auto& corpus = corpora[n % corpora.size()];
    const auto vocab = message_vocabulary(*corpus);
    RecordingGateway gateway;
    gateway.on_judge = [&rng](std::string_view) { return JudgeReply{rng() % 3 != 0, "r"}; };
    EngineOptions options;
    options.policy = n % 2 ? JudgePolicy::LexicalThenJudge : JudgePolicy::LexicalOnly;
    options.clock = fixed_clock();
    options.history_budget = 2 + rng() % 30;
    const Engine engine(corpus, gateway, options);
    GameSession s = engine.new_session("i");
    std::vector<int> prompt_levels;
    const int length = 1 + static_cast<int>(rng() % 25);
    for (int i = 0; i < length; ++i) {
      const auto before = s;
      const std::string msg = rng() % 10 == 0 ? std::string(" \t") : random_message(rng, vocab);
      try {
        const int level_before = s.current_level;
        const auto outcome = engine.submit_message(s, msg);
        prompt_levels.push_back(level_before);
        ++turns;
        if (s.current_level < before.current_level) v.fail("level decreased");
        if (s.current_level > before.current_level + 1) v.fail("advanced more than one level");
        if (!std::includes(s.fired.begin(), s.fired.end(), before.fired.begin(), before.fired.end())) v.fail("fired shrank");
        for (const auto& id : outcome.newly_fired) {
          if (before.fired.contains(id)) v.fail("refired " + id);
          if (corpus->find_trigger(id)->level != before.current_level) v.fail("fired off-level " + id);
        }
        if (s.current_level > before.current_level || s.status == SessionStatus::Completed) {
          for (const auto* t : corpus->level_triggers(before.current_level)) {
            if (t->required && !s.fired.contains(t->trigger_id)) v.fail("advanced with " + t->trigger_id + " unfired");
          }
        }
      } catch (const EmptyMessage&) {
        if (normalize_text(msg) != "" || s != before) v.fail("empty rejection mutated the session");
      } catch (const SessionNotActive&) {
        if (before.status == SessionStatus::Active || s != before) v.fail("bad SessionNotActive");
      }
    }
    // Single-fire across the whole history.
    std::map<std::string, int> seen;
    for (const auto& t : s.history) for (const auto& id : t.fired_trigger_ids) ++seen[id];
    for (const auto& [id, count] : seen) if (count != 1) v.fail(id + " fired " + std::to_string(count) + " times");
    // Secret containment and fact scoping in every prompt.
    const auto prompts = gateway.prompts();
    for (std::size_t k = 0; k < prompts.size(); ++k) {
      const int level = prompt_levels.at(k);
      const bool has_secret = prompts[k].system_directives.find(corpus->persona.identity_secret) != std::string::npos;
      if (has_secret != (level == corpus->final_level())) v.fail("secret exposure at level " + std::to_string(level));
      for (const auto& f : corpus->facts) {
        const bool shown = std::find(prompts[k].knowledge.begin(), prompts[k].knowledge.end(), f.text) != prompts[k].knowledge.end();
        if (shown != (f.min_level <= level)) v.fail("fact scoping broken for " + f.fact_id);
      }
      if (prompts[k].window.size() > options.history_budget) v.fail("window over budget");
    }
    if (!v.pass) v.detail = "sequence " + std::to_string(n) + ": " + v.detail;
  }
  if (v.pass) v.detail = std::to_string(kInvariantSequences) + " sequences, " + std::to_string(turns) + " turns";
  return v;
}

// C5: a failure at any stage leaves the session byte-identical, in memory and
// on disk, and a killed commit recovers on restart.
Verdict atomic_turns() {
  Verdict v;
  const auto corpus = load_fixture("two_level");
  for (auto failing : kTurnStages) {
    ScriptedGateway gateway;
    EngineOptions options;
    options.clock = fixed_clock();
    options.stage_hook = [failing](TurnStage s) {
      if (s == failing) throw GatewayTimeout("injected");
    };
    const Engine engine(corpus, gateway, options);
    auto s = engine.new_session("a");
    gateway.push_reply("fine");
    const auto before = serialize_session(s);
    try {
      engine.submit_message(s, "rain on the river bank");
      v.fail("no failure at " + std::string(to_string(failing)));
    } catch (const GatewayError&) {
    }
    if (serialize_session(s) != before) v.fail("engine mutated at " + std::string(to_string(failing)));

    // Same through the service: the stored document keeps its bytes.
    auto dir = scratch_dir("accept-stage");
    {
      ScriptedGateway g2;
      g2.push_reply("fine");
      SessionStore store(dir);
      ServiceOptions so;
      so.clock = fixed_clock();
      so.stage_hook = options.stage_hook;
      GameService service({corpus}, g2, store, so);
      const auto id = service.create_session("two-level").session_id;
      const auto raw = read_text(store.document_path(id));
      try {
        service.post_message(id, "rain on the river bank");
      } catch (const UpstreamUnavailable&) {
      }
      if (read_text(store.document_path(id)) != raw) v.fail("stored document changed at " + std::string(to_string(failing)));
    }
    std::filesystem::remove_all(dir);
  }

  for (auto point : {CommitPoint::BeforeWrite, CommitPoint::TempWritten, CommitPoint::Renamed, CommitPoint::Indexed}) {
    auto dir = scratch_dir("accept-kill");
    std::string id;
    std::string old_raw;
    {
      ScriptedGateway g;
      SessionStore store(dir);
      ServiceOptions so;
      so.clock = fixed_clock();
      GameService service({corpus}, g, store, so);
      id = service.create_session("two-level").session_id;
      old_raw = read_text(store.document_path(id));
    }
    std::cout.flush();
    const pid_t pid = fork();
    if (pid == 0) {
      ScriptedGateway g;
      g.push_reply("It rained.");
      SessionStore store(dir);
      store.set_commit_hook([point](CommitPoint p, const std::string&) {
        if (p == point) _exit(0);
      });
      ServiceOptions so;
      so.clock = fixed_clock();
      GameService service({corpus}, g, store, so);
      service.post_message(id, "rain on the river bank");
      _exit(3);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) v.fail("child did not stop at the commit point");
    ScriptedGateway g;
    g.push_reply("Again.");
    SessionStore store(dir);
    GameService service({corpus}, g, store, {});
    const auto raw = store.load_raw(id);
    const bool durable = point == CommitPoint::Renamed || point == CommitPoint::Indexed;
    if (!raw) {
      v.fail("session lost after kill");
    } else if (durable ? *raw == old_raw : *raw != old_raw) {
      v.fail("unexpected document after kill at point " + std::to_string(static_cast<int>(point)));
    }
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.path().filename().string().find(".tmp-") != std::string::npos) v.fail("temp file survived restart");
    }
    try {
      service.post_message(id, "a boat");
    } catch (const std::exception& e) {
      v.fail(std::string("restarted service cannot continue: ") + e.what());
    }
    std::filesystem::remove_all(dir);
  }
  if (v.pass) v.detail = "5 stages x engine+service, 4 kill points";
  return v;
}

// C6: unparseable judge replies count as not matched and never crash.
Verdict unparseable_judge() {
  Verdict v;
  const std::vector<std::string> replies{
      "Maybe", "", "   ", "I think so", "Nope", "Y E S", "perhaps yes", "N/A", "{\"verdict\": true}", "yess",
      "NOT SURE", "Yesterday", "Nobody knows", "?", "0", "1", "true", "The answer is YES", "ye", "\xE2\x80\x94 YES"};
  if (static_cast<int>(replies.size()) != kUnparseableReplies) v.fail("fixture size");
  const auto previous = set_log_sink([](LogLevel, std::string_view) {});
  const auto corpus = load_fixture("two_level");
  ScriptedGateway gateway;
  EngineOptions options;
  options.policy = JudgePolicy::LexicalThenJudge;
  options.clock = fixed_clock();
  const Engine engine(corpus, gateway, options);
  auto s = engine.new_session("u");
  int unmatched = 0;
  for (const auto& r : replies) {
    gateway.push_raw_judge_reply(r);
    gateway.push_reply("Hm.");
    try {
      const auto outcome = engine.submit_message(s, "rain");
      if (!outcome.newly_fired.empty()) v.fail("reply '" + r + "' fired a trigger");
      else ++unmatched;
    } catch (const std::exception& e) {
      v.fail("reply '" + r + "' raised " + e.what());
    }
  }
  set_log_sink(previous);
  if (!s.fired.empty()) v.fail("session has fired triggers");
  if (gateway.judge_calls() != replies.size()) v.fail("judge not consulted for every reply");
  if (v.pass) v.detail = std::to_string(unmatched) + "/" + std::to_string(replies.size()) + " not matched, 0 fired";
  return v;
}

// C7: HTTP contract of every endpoint, plus double-post conflict.
Verdict service_contract() {
  Verdict v;
  GateGateway gateway;
  ServiceOptions so;
  so.clock = fixed_clock();
  ServiceHarness h({load_fixture("two_level")}, gateway, scratch_dir("accept-http"), so);
  auto expect = [&](const httplib::Result& r, int status, const std::string& what) -> nlohmann::json {
    if (!r) {
      v.fail(what + ": no response");
      return {};
    }
    if (r->status != status) v.fail(what + ": status " + std::to_string(r->status));
    try {
      return r->get_header_value("Content-Type").starts_with("application/json") ? nlohmann::json::parse(r->body)
                                                                                  : nlohmann::json();
    } catch (const std::exception&) {
      v.fail(what + ": body is not JSON");
      return {};
    }
  };
  auto created = expect(h.post("/api/sessions", {{"corpus_id", "two-level"}}), 201, "create");
  const std::string id = created.value("session_id", "");
  for (auto key : {"session_id", "corpus_id", "corpus_hash", "goal_text", "history"}) {
    if (!created.contains(key)) v.fail(std::string("create lacks ") + key);
  }
  auto turn = expect(h.post("/api/sessions/" + id + "/messages", {{"text", "a boat"}}), 200, "message");
  for (auto key : {"npc_reply", "newly_fired", "transition", "completed", "unlocked_media"}) {
    if (!turn.contains(key)) v.fail(std::string("message lacks ") + key);
  }
  auto view = expect(h.get("/api/sessions/" + id), 200, "get");
  if (view.value("status", "") != "active" || view["history"].size() != 3) v.fail("get: wrong view");
  auto feed = expect(h.get("/api/sessions/" + id + "/feed"), 200, "feed");
  if (!feed.is_array() || feed.size() != 1 || feed[0]["asset_url"] != "/assets/boat.png") v.fail("feed: wrong entries");
  const auto asset = h.get("/assets/boat.png");
  if (!asset || asset->status != 200 || asset->body.empty()) v.fail("asset not served");
  expect(h.get("/assets/../README.md"), 404, "asset confinement");
  auto health = expect(h.get("/healthz"), 200, "healthz");
  if (health.value("corpus_hash", "") != load_fixture("two_level")->content_hash) v.fail("healthz: wrong hash");
  expect(h.get("/api/sessions/nope"), 404, "unknown session");
  expect(h.post("/api/sessions/" + id + "/messages", {{"text", ""}}), 400, "empty message");

  gateway.hold();
  auto first = std::async(std::launch::async, [&] { return h.post("/api/sessions/" + id + "/messages", {{"text", "rain"}}); });
  gateway.wait_for_waiter();
  auto second = expect(h.post("/api/sessions/" + id + "/messages", {{"text", "river bank"}}), 409, "double post");
  if (second.value("error", "") != "conflict") v.fail("double post: wrong error code");
  gateway.release();
  expect(first.get(), 200, "first of double post");

  auto abandoned = expect(h.post("/api/sessions/" + id + "/abandon", nlohmann::json::object()), 200, "abandon");
  if (abandoned.value("status", "") != "abandoned") v.fail("abandon: wrong status");
  expect(h.post("/api/sessions/" + id + "/messages", {{"text", "hi"}}), 409, "message after abandon");
  std::filesystem::remove_all(h.dir);
  if (v.pass) v.detail = "7 endpoints, conflict on concurrent post";
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, Verdict (*)()> criteria[] = {
      {"corpus-round-trip", corpus_round_trip}, {"oracle-equivalence", oracle_equivalence},
      {"golden-replay", golden_replay},         {"session-invariants", invariants},
      {"atomic-turns", atomic_turns},           {"unparseable-judge", unparseable_judge},
      {"service-contract", service_contract},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    failures += v.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
