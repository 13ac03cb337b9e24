#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mmx/games/cop.hpp"

// Optional language-model policy for COP. Talks to an OpenAI-style
// completions endpoint over plain HTTP.
namespace mmx::cop {

struct LlmConfig {
  std::string url;                   // e.g. http://localhost:8000
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key;
  double temperature = 0.7;
  int max_tokens = 256;
  int timeout_seconds = 30;
  int max_attempts = 3;   // replies that fail to parse are retried this often
  int max_parallel = 1;   // concurrent requests per endpoint

  // MMX_LLM_URL, MMX_LLM_PATH, MMX_LLM_MODEL, MMX_LLM_API_KEY,
  // MMX_LLM_TEMPERATURE, MMX_LLM_MAX_TOKENS, MMX_LLM_TIMEOUT.
  static LlmConfig from_env();
  void validate() const;
};

// Raised for network failures, timeouts, HTTP errors, and replies that could
// not be parsed after every attempt. `transcript` holds each raw reply.
class LlmError : public Error {
 public:
  LlmError(const std::string& what, std::vector<std::string> transcript = {})
      : Error(what), transcript_(std::move(transcript)) {}
  const std::vector<std::string>& transcript() const { return transcript_; }

 private:
  std::vector<std::string> transcript_;
};

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const std::string& prompt, double temperature, int max_tokens) const = 0;
};

class HttpCompletionClient final : public CompletionClient {
 public:
  explicit HttpCompletionClient(LlmConfig config);
  std::string complete(const std::string& prompt, double temperature, int max_tokens) const override;

 private:
  LlmConfig config_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable int in_flight_ = 0;
};

// The bundled template (assets/prompts/cop_prompt.txt).
const std::string& default_prompt_template();

std::string personality_text(Personality p);

// Fills {{agent}}, {{others}}, {{rounds}}, {{personality}}, {{chat_history}},
// {{stage}} and {{format}}.
std::string render_prompt(const std::string& tmpl, const CopState& s, AgentId agent, const std::string& personality);

// "(b=guilty, c=innocent)" in any order or case; nullopt if the reply does
// not name both other agents.
std::optional<Announcement> parse_announcement(const std::string& reply, AgentId agent);

// First line of the form "B: text" naming another agent.
std::optional<Message> parse_message(const std::string& reply, AgentId agent);

class LlmPolicy final : public Policy<CopState, CopAction> {
 public:
  LlmPolicy(std::shared_ptr<const CompletionClient> client, Personality type, LlmConfig config,
            std::string prompt_template = default_prompt_template());

  CopAction sample(const CopState& s, AgentId agent, Rng& rng) const override;
  std::optional<CopAction> mode(const CopState& s, AgentId agent) const override;
  bool greedy_decode_only() const override { return true; }

  CopAction query(const CopState& s, AgentId agent, double temperature) const;

 private:
  std::shared_ptr<const CompletionClient> client_;
  Personality type_;
  LlmConfig config_;
  std::string template_;
};

}  // namespace mmx::cop
