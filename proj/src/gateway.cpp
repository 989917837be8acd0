#include "storyloom/gateway.hpp"

#include "storyloom/errors.hpp"
#include "storyloom/log.hpp"
#include "storyloom/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace storyloom {

// ---------------------------------------------------------------------------
// Verdict parsing and message shapes

namespace {

bool starts_with_word(std::string_view s, std::string_view word) {
  if (s.size() < word.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(s[i])) != word[i]) return false;
  }
  return s.size() == word.size() || !std::isalnum(static_cast<unsigned char>(s[word.size()]));
}

std::string_view strip_separators(std::string_view s) {
  static constexpr std::string_view kSeparators[] = {"\xE2\x80\x94", "\xE2\x80\x93", "-", ":", ",", ".", ";",
                                                     "!", "*", " ", "\t", "\n", "\r"};
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (auto sep : kSeparators) {
      if (s.starts_with(sep)) {
        s.remove_prefix(sep.size());
        changed = true;
      }
    }
  }
  return s;
}

}  // namespace

JudgeReply parse_verdict(std::string_view reply) {
  std::string_view s = reply;
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) || s.front() == '*' ||
                        s.front() == '"' || s.front() == '`')) {
    s.remove_prefix(1);
  }
  JudgeReply out;
  if (starts_with_word(s, "YES")) {
    out.matched = true;
    s.remove_prefix(3);
  } else if (starts_with_word(s, "NO")) {
    out.matched = false;
    s.remove_prefix(2);
  } else {
    throw JudgeUnparseable("judge reply lacks a leading YES/NO verdict");
  }
  out.rationale = trim(strip_separators(s));
  return out;
}

std::vector<ChatMessage> npc_messages(const PromptBundle& bundle) {
  std::string system = bundle.system_directives;
  if (!bundle.knowledge.empty()) {
    system += "\nWhat you know about your world:\n";
    for (const auto& fact : bundle.knowledge) system += "- " + fact + "\n";
  }
  std::vector<ChatMessage> messages{{"system", std::move(system)}};
  for (const auto& turn : bundle.window) {
    switch (turn.role) {
      case TurnRole::Player: messages.push_back({"user", turn.text}); break;
      case TurnRole::Npc: messages.push_back({"assistant", turn.text}); break;
      case TurnRole::Cutscene: messages.push_back({"system", "Narration shown to the player: " + turn.text}); break;
    }
  }
  messages.push_back({"user", bundle.player_message});
  return messages;
}

std::vector<ChatMessage> judge_messages(std::string_view rubric, std::string_view player_text,
                                        std::span<const ChatTurn> context) {
  std::string user = "Criterion: " + std::string(rubric) + "\n\n";
  if (!context.empty()) {
    user += "Recent conversation:\n";
    for (const auto& turn : context) {
      user += std::string(turn.role == TurnRole::Player ? "Player" : turn.role == TurnRole::Npc ? "Character" : "Narration");
      user += ": " + turn.text + "\n";
    }
    user += "\n";
  }
  user += "Player's latest message: " + std::string(player_text);
  return {
      {"system",
       "You judge a conversational game. Decide whether the player's latest message satisfies the criterion, "
       "reading it in the context of the recent conversation. Begin your reply with exactly YES or NO, "
       "then give one short sentence of rationale."},
      {"user", std::move(user)},
  };
}

// ---------------------------------------------------------------------------
// ScriptedGateway

void ScriptedGateway::push_reply(std::string reply) {
  if (trim(reply).empty()) throw std::invalid_argument("scripted replies must be non-empty");
  std::lock_guard lock(mutex_);
  replies_.push_back(std::move(reply));
}

void ScriptedGateway::set_verdict(std::string digest, bool matched) {
  std::lock_guard lock(mutex_);
  verdicts_[std::move(digest)] = matched;
}

void ScriptedGateway::push_raw_judge_reply(std::string reply) {
  std::lock_guard lock(mutex_);
  raw_judge_replies_.push_back(std::move(reply));
}

std::string ScriptedGateway::complete_chat(const PromptBundle&) {
  std::lock_guard lock(mutex_);
  ++chat_calls_;
  if (replies_.empty()) throw ScriptExhausted("scripted gateway has no reply left");
  std::string reply = std::move(replies_.front());
  replies_.pop_front();
  return reply;
}

JudgeReply ScriptedGateway::judge_trigger(std::string_view rubric, std::string_view, std::span<const ChatTurn>) {
  std::unique_lock lock(mutex_);
  ++judge_calls_;
  if (!raw_judge_replies_.empty()) {
    std::string raw = std::move(raw_judge_replies_.front());
    raw_judge_replies_.pop_front();
    lock.unlock();
    return parse_verdict(raw);
  }
  const auto digest = rubric_digest(rubric);
  auto it = verdicts_.find(digest);
  if (it == verdicts_.end()) throw ScriptExhausted("no scripted verdict for rubric " + digest);
  return {it->second, it->second ? "scripted verdict: yes" : "scripted verdict: no"};
}

std::size_t ScriptedGateway::chat_calls() const {
  std::lock_guard lock(mutex_);
  return chat_calls_;
}

std::size_t ScriptedGateway::judge_calls() const {
  std::lock_guard lock(mutex_);
  return judge_calls_;
}

std::size_t ScriptedGateway::pending_replies() const {
  std::lock_guard lock(mutex_);
  return replies_.size();
}

// ---------------------------------------------------------------------------
// Configuration and backoff

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : std::move(fallback);
}

}  // namespace

GatewayConfig GatewayConfig::from_env() {
  GatewayConfig c;
  c.endpoint_url = env_or("LLM_ENDPOINT", "https://api.openai.com/v1/chat/completions");
  c.model_name = env_or("LLM_MODEL", c.model_name);
  c.api_key = env_or("LLM_API_KEY", "");
  const auto timeout = env_or("LLM_TIMEOUT_S", "");
  if (!timeout.empty()) {
    try {
      c.timeout_s = std::stod(timeout);
    } catch (const std::exception&) {
      throw std::invalid_argument("LLM_TIMEOUT_S is not a number");
    }
  }
  return c;
}

void GatewayConfig::validate() const {
  if (endpoint_url.find("://") == std::string::npos) throw std::invalid_argument("endpoint_url must be an http(s) URL");
  if (!(timeout_s > 0)) throw std::invalid_argument("timeout must be positive");
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");
  if (!(temperature >= 0 && temperature <= 2)) throw std::invalid_argument("temperature must be in [0, 2]");
}

std::string GatewayConfig::describe() const {
  return "endpoint=" + endpoint_url + " model=" + model_name + " timeout_s=" + std::to_string(timeout_s) +
         " max_attempts=" + std::to_string(max_attempts) + " api_key=" + (api_key.empty() ? "<unset>" : "<redacted>");
}

std::chrono::milliseconds BackoffPolicy::ceiling(int retry) const {
  return std::chrono::milliseconds(
      static_cast<std::int64_t>(std::llround(static_cast<double>(base.count()) * std::pow(factor, retry))));
}

std::chrono::milliseconds BackoffPolicy::delay(int retry, double unit_random) const {
  const double u = std::clamp(unit_random, 0.0, 1.0);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::floor(static_cast<double>(ceiling(retry).count()) * u)));
}

nlohmann::ordered_json chat_request_body(const GatewayConfig& config, std::span<const ChatMessage> messages,
                                         double temperature) {
  auto list = nlohmann::ordered_json::array();
  for (const auto& m : messages) list.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", config.model_name}, {"messages", std::move(list)}, {"temperature", temperature}};
}

// ---------------------------------------------------------------------------
// HttpGateway

namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

enum class Failure { None, Timeout, Transient };

}  // namespace

HttpGateway::HttpGateway(GatewayConfig config, Sleeper sleeper, std::uint64_t jitter_seed)
    : config_(std::move(config)), sleeper_(std::move(sleeper)), rng_(jitter_seed) {
  config_.validate();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

double HttpGateway::next_unit_random() {
  std::lock_guard lock(rng_mutex_);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
}

std::string HttpGateway::send(std::span<const ChatMessage> messages, double temperature) {
  const Endpoint endpoint = split_url(config_.endpoint_url);
  const std::string body = chat_request_body(config_, messages, temperature).dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(config_.timeout_s * 1000));
  Failure last = Failure::None;
  std::string last_detail;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0) sleeper_(backoff_.delay(attempt - 1, next_unit_random()));

    httplib::Client client(endpoint.scheme_host_port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (!res) {
      const auto elapsed = std::chrono::steady_clock::now() - started;
      const bool timed_out = res.error() == httplib::Error::ConnectionTimeout || elapsed >= timeout * 9 / 10;
      last = timed_out ? Failure::Timeout : Failure::Transient;
      last_detail = httplib::to_string(res.error());
      log(LogLevel::Warning, "gateway attempt " + std::to_string(attempt + 1) + " failed: " + last_detail);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_detail = "HTTP " + std::to_string(res->status);
      if (!retryable_status(res->status)) {
        throw GatewayRejected(res->status, "chat endpoint rejected the request: " + last_detail);
      }
      last = Failure::Transient;
      log(LogLevel::Warning, "gateway attempt " + std::to_string(attempt + 1) + " failed: " + last_detail);
      continue;
    }
    std::string content;
    try {
      const auto doc = nlohmann::json::parse(res->body);
      content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw GatewayRejected(res->status, std::string("malformed chat completion response: ") + e.what());
    }
    if (trim(content).empty()) {
      last = Failure::Transient;
      last_detail = "empty completion";
      log(LogLevel::Warning, "gateway attempt " + std::to_string(attempt + 1) + " returned an empty completion");
      continue;
    }
    return content;
  }
  const auto summary = "gateway gave up after " + std::to_string(config_.max_attempts) + " attempt(s): " + last_detail;
  if (last == Failure::Timeout) throw GatewayTimeout(summary);
  throw GatewayExhausted(summary);
}

std::string HttpGateway::complete_chat(const PromptBundle& bundle) {
  const auto messages = npc_messages(bundle);
  return send(messages, config_.temperature);
}

JudgeReply HttpGateway::judge_trigger(std::string_view rubric, std::string_view player_text,
                                      std::span<const ChatTurn> context) {
  const auto messages = judge_messages(rubric, player_text, context);
  return parse_verdict(send(messages, 0.0));
}

}  // namespace storyloom
