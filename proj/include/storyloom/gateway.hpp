#pragma once

#include "storyloom/prompt.hpp"
#include "storyloom/session.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storyloom {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct JudgeReply {
  bool matched = false;
  std::string rationale;
};

// Boundary to a chat-completion model. Implementations must be safe to call
// from several sessions at once.
class Gateway {
 public:
  virtual ~Gateway() = default;

  // Never returns empty or whitespace-only text.
  virtual std::string complete_chat(const PromptBundle& bundle) = 0;

  virtual JudgeReply judge_trigger(std::string_view rubric, std::string_view player_text,
                                   std::span<const ChatTurn> context) = 0;
};

// Number of most recent turns that accompany a judge rubric.
inline constexpr std::size_t kJudgeContextTurns = 4;

// Leading case-insensitive YES or NO, as a whole word; the rest, stripped of
// separators, is the rationale. Throws JudgeUnparseable.
JudgeReply parse_verdict(std::string_view reply);

// system / user / assistant messages for an NPC reply.
std::vector<ChatMessage> npc_messages(const PromptBundle& bundle);

// Messages for a verdict-first judgment request.
std::vector<ChatMessage> judge_messages(std::string_view rubric, std::string_view player_text,
                                        std::span<const ChatTurn> context);

// Deterministic offline gateway driven by a canned reply queue and a table
// of rubric digest -> verdict.
class ScriptedGateway final : public Gateway {
 public:
  void push_reply(std::string reply);
  void set_verdict(std::string digest, bool matched);
  // Consumed before the verdict table; parsed with parse_verdict.
  void push_raw_judge_reply(std::string reply);

  std::string complete_chat(const PromptBundle& bundle) override;
  JudgeReply judge_trigger(std::string_view rubric, std::string_view player_text,
                           std::span<const ChatTurn> context) override;

  std::size_t chat_calls() const;
  std::size_t judge_calls() const;
  std::size_t pending_replies() const;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> replies_;
  std::deque<std::string> raw_judge_replies_;
  std::map<std::string, bool> verdicts_;
  std::size_t chat_calls_ = 0;
  std::size_t judge_calls_ = 0;
};

struct GatewayConfig {
  std::string endpoint_url;  // full URL of the chat-completions resource
  std::string model_name = "gpt-4";
  std::string api_key;
  double timeout_s = 30.0;
  int max_attempts = 3;
  double temperature = 0.8;

  // LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY, LLM_TIMEOUT_S.
  static GatewayConfig from_env();

  // Throws std::invalid_argument.
  void validate() const;

  // Loggable summary; never contains the key.
  std::string describe() const;
};

// Full-jitter exponential backoff: uniform in [0, base * factor^retry].
struct BackoffPolicy {
  std::chrono::milliseconds base{500};
  double factor = 2.0;

  std::chrono::milliseconds ceiling(int retry) const;
  std::chrono::milliseconds delay(int retry, double unit_random) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Request body in the chat-completion JSON convention.
nlohmann::ordered_json chat_request_body(const GatewayConfig& config, std::span<const ChatMessage> messages,
                                         double temperature);

class HttpGateway final : public Gateway {
 public:
  explicit HttpGateway(GatewayConfig config, Sleeper sleeper = {}, std::uint64_t jitter_seed = std::random_device{}());

  std::string complete_chat(const PromptBundle& bundle) override;
  JudgeReply judge_trigger(std::string_view rubric, std::string_view player_text,
                           std::span<const ChatTurn> context) override;

  const GatewayConfig& config() const { return config_; }

 private:
  std::string send(std::span<const ChatMessage> messages, double temperature);
  double next_unit_random();

  GatewayConfig config_;
  BackoffPolicy backoff_;
  Sleeper sleeper_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

}  // namespace storyloom
