// storyloom-server: HTTP JSON API over one or more corpora.
//
// Environment: PORT, CORPUS_PATH (comma-separated), DATA_DIR, JUDGE_POLICY,
// UI_ORIGIN, HISTORY_BUDGET, LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY,
// LLM_TIMEOUT_S, LLM_MOCK_SCRIPT.

#include "storyloom/corpus.hpp"
#include "storyloom/gateway.hpp"
#include "storyloom/log.hpp"
#include "storyloom/service.hpp"
#include "storyloom/transcript.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : std::move(fallback);
}

storyloom::HttpFrontend* g_frontend = nullptr;

void on_signal(int) {
  if (g_frontend != nullptr) g_frontend->stop();
}

}  // namespace

int main() {
  using namespace storyloom;
  try {
    std::vector<std::shared_ptr<const NarrativeCorpus>> corpora;
    std::stringstream paths(env_or("CORPUS_PATH", "corpora/eternagram-sample/corpus.yaml"));
    for (std::string path; std::getline(paths, path, ',');) {
      if (path.empty()) continue;
      corpora.push_back(std::make_shared<const NarrativeCorpus>(load_corpus_file(path)));
      log(LogLevel::Info, "loaded corpus " + corpora.back()->corpus_id + " (" + corpora.back()->content_hash + ")");
    }

    std::unique_ptr<Gateway> gateway;
    if (const auto script = env_or("LLM_MOCK_SCRIPT", ""); !script.empty()) {
      std::ifstream in(script);
      if (!in) throw Error("cannot read LLM_MOCK_SCRIPT " + script);
      std::ostringstream text;
      text << in.rdbuf();
      auto mock = std::make_unique<ScriptedGateway>();
      provision(*mock, parse_transcript(text.str()));
      gateway = std::move(mock);
      log(LogLevel::Info, "using scripted gateway from " + script);
    } else {
      auto config = GatewayConfig::from_env();
      log(LogLevel::Info, "gateway " + config.describe());
      gateway = std::make_unique<HttpGateway>(std::move(config));
    }

    SessionStore store(env_or("DATA_DIR", "data"));
    ServiceOptions options;
    options.policy = parse_policy(env_or("JUDGE_POLICY", "lexical"));
    options.history_budget = std::stoul(env_or("HISTORY_BUDGET", std::to_string(kDefaultHistoryBudget)));
    GameService service(std::move(corpora), *gateway, store, std::move(options));

    HttpFrontend frontend(service, HttpFrontend::Options{env_or("UI_ORIGIN", "")});
    g_frontend = &frontend;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    const int port = std::stoi(env_or("PORT", "8080"));
    log(LogLevel::Info, "listening on port " + std::to_string(port) + " with " + std::to_string(store.size()) +
                            " stored session(s)");
    if (!frontend.listen("0.0.0.0", port)) throw Error("cannot listen on port " + std::to_string(port));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "storyloom-server: " << e.what() << "\n";
    return 1;
  }
}
