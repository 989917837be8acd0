// storyloom: play, lint and replay narrative corpora from the terminal.

#include "storyloom/corpus.hpp"
#include "storyloom/engine.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/gateway.hpp"
#include "storyloom/log.hpp"
#include "storyloom/text.hpp"
#include "storyloom/transcript.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace {

using namespace storyloom;

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitLoad = 2;

constexpr std::string_view kDefaultReplayClock = "2024-01-01T00:00:00.000Z";

struct GlobalFlags {
  std::string corpus;
  std::string policy = "lexical";
  std::string seedclock;
  bool lenient = false;
};

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::shared_ptr<const NarrativeCorpus> load_or_report(const GlobalFlags& flags) {
  if (flags.corpus.empty()) {
    std::cerr << "error: --corpus is required\n";
    return nullptr;
  }
  try {
    LoadOptions options;
    options.lenient = flags.lenient;
    return std::make_shared<const NarrativeCorpus>(load_corpus_file(flags.corpus, options));
  } catch (const Error& e) {
    std::cerr << flags.corpus << ": " << e.what() << "\n";
    return nullptr;
  }
}

void print_frame(std::ostream& out, std::string_view title, std::string_view body) {
  const std::string rule(56, '=');
  out << "\n" << rule << "\n  " << title << "\n" << rule << "\n" << body << "\n" << rule << "\n\n";
}

int cmd_lint(const GlobalFlags& flags, bool digests) {
  auto corpus = load_or_report(flags);
  if (!corpus) return kExitLoad;
  if (digests) {
    for (const auto& t : corpus->triggers) {
      std::cout << "digest " << t.trigger_id << " " << rubric_digest(t.judge_rubric) << "\n";
    }
  }
  const auto diagnostics = lint_corpus(*corpus);
  for (const auto& d : diagnostics) std::cout << format_diagnostic(d) << "\n";
  return diagnostics.empty() ? kExitOk : kExitFindings;
}

Clock clock_from(const GlobalFlags& flags, bool deterministic) {
  if (!flags.seedclock.empty()) return stepping_clock(parse_instant(flags.seedclock));
  if (deterministic) return stepping_clock(parse_instant(kDefaultReplayClock));
  return system_clock();
}

int cmd_replay(const GlobalFlags& flags, const std::string& transcript_path) {
  auto corpus = load_or_report(flags);
  if (!corpus) return kExitLoad;
  const auto text = slurp(transcript_path);
  if (!text) {
    std::cerr << "error: cannot read transcript " << transcript_path << "\n";
    return kExitLoad;
  }
  try {
    const auto entries = parse_transcript(*text);
    ScriptedGateway gateway;
    EngineOptions options;
    options.policy = parse_policy(flags.policy);
    options.clock = clock_from(flags, true);
    const Engine engine(corpus, gateway, options);
    GameSession session = engine.new_session("replay-1");
    replay_transcript(engine, gateway, session, entries);
    std::cout << serialize_session(session);
    return kExitOk;
  } catch (const ParseError& e) {
    std::cerr << transcript_path << ": " << e.what() << "\n";
    return kExitFindings;
  } catch (const ReplayError& e) {
    std::cerr << transcript_path << ":" << e.line() << ": " << e.detail() << "\n";
    return kExitFindings;
  }
}

int cmd_play(const GlobalFlags& flags, const std::string& script_path) {
  auto corpus = load_or_report(flags);
  if (!corpus) return kExitLoad;

  std::unique_ptr<Gateway> gateway;
  ScriptedGateway* scripted = nullptr;
  if (!script_path.empty()) {
    const auto text = slurp(script_path);
    if (!text) {
      std::cerr << "error: cannot read script " << script_path << "\n";
      return kExitLoad;
    }
    auto mock = std::make_unique<ScriptedGateway>();
    try {
      provision(*mock, parse_transcript(*text));
    } catch (const ParseError& e) {
      std::cerr << script_path << ": " << e.what() << "\n";
      return kExitLoad;
    }
    scripted = mock.get();
    gateway = std::move(mock);
  } else {
    try {
      gateway = std::make_unique<HttpGateway>(GatewayConfig::from_env());
    } catch (const std::exception& e) {
      std::cerr << "error: gateway configuration: " << e.what() << "\n";
      return kExitLoad;
    }
  }

  EngineOptions options;
  options.policy = parse_policy(flags.policy);
  options.clock = clock_from(flags, false);
  const Engine engine(corpus, *gateway, options);
  GameSession session = engine.new_session("local");

  const std::string& npc = corpus->persona.character_name;
  std::cout << npc << ": " << corpus->prologue_text << "\n";
  std::cout << "[goal] " << corpus->levels.front().goal_text << "\n";
  std::cout << "(type /quit to stop)\n";

  auto report_calls = [&] {
    if (scripted != nullptr) {
      std::cerr << "gateway calls: chat=" << scripted->chat_calls() << " judge=" << scripted->judge_calls() << "\n";
    }
  };

  std::string line;
  while (true) {
    std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line) || trim(line) == "/quit") {
      engine.abandon(session);
      std::cout << "\n" << npc << " goes quiet. You can come back any time.\n";
      report_calls();
      return kExitOk;
    }
    if (trim(line).empty()) continue;
    try {
      const TurnOutcome outcome = engine.submit_message(session, line);
      std::cout << npc << ": " << outcome.npc_reply << "\n";
      if (outcome.transition) {
        print_frame(std::cout, "CUTSCENE", outcome.transition->cutscene_text);
        if (outcome.completed) {
          if (!outcome.transition->epilogue_text.empty()) {
            print_frame(std::cout, "EPILOGUE", outcome.transition->epilogue_text);
          }
          report_calls();
          return kExitOk;
        }
        std::cout << "[goal] " << outcome.transition->next_goal_text << "\n";
      }
      for (const auto& id : outcome.unlocked_media) {
        if (const MediaPost* m = corpus->find_media(id)) std::cout << "[new post] " << m->caption << "\n";
      }
    } catch (const GatewayError& e) {
      std::cerr << "(no reply: " << e.what() << ")\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"storyloom: play, lint and replay conversational narrative corpora"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--corpus", flags.corpus, "Corpus document (YAML or JSON)");
  app.add_option("--policy", flags.policy, "Trigger judging: lexical or judge")
      ->check(CLI::IsMember({"lexical", "judge"}));
  app.add_option("--seedclock", flags.seedclock, "Fixed start instant, e.g. 2024-01-01T00:00:00Z");
  app.add_flag("--lenient", flags.lenient, "Ignore unknown corpus fields");

  std::string script;
  auto* play = app.add_subcommand("play", "Play a corpus in the terminal");
  play->add_option("--script", script, "Transcript-format file provisioning the offline mock gateway");

  bool digests = false;
  auto* lint = app.add_subcommand("lint", "Report corpus warnings; exit 0 only when clean");
  lint->add_flag("--digests", digests, "Also print each trigger's rubric digest");

  std::string transcript;
  auto* replay = app.add_subcommand("replay", "Replay a golden transcript and print the final session");
  replay->add_option("transcript", transcript, "Transcript file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitLoad;
  }

  storyloom::set_log_sink([](storyloom::LogLevel level, std::string_view message) {
    if (level >= storyloom::LogLevel::Warning) std::cerr << "warning: " << message << "\n";
  });

  try {
    if (*lint) return cmd_lint(flags, digests);
    if (*replay) return cmd_replay(flags, transcript);
    if (*play) return cmd_play(flags, script);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitLoad;
  }
  return kExitLoad;
}
