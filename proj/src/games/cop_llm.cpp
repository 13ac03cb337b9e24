#include "mmx/games/cop_llm.hpp"

#include <httplib.h>

#include <cstdlib>
#include <regex>
#include <sstream>

namespace mmx::cop {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) s.replace(pos, from.size(), to);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"'`");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n\"'`");
  return s.substr(b, e - b + 1);
}

}  // namespace

LlmConfig LlmConfig::from_env() {
  LlmConfig c;
  c.url = env_or("MMX_LLM_URL", "");
  c.path = env_or("MMX_LLM_PATH", c.path);
  c.model = env_or("MMX_LLM_MODEL", "");
  c.api_key = env_or("MMX_LLM_API_KEY", "");
  try {
    c.temperature = std::stod(env_or("MMX_LLM_TEMPERATURE", "0.7"));
    c.max_tokens = std::stoi(env_or("MMX_LLM_MAX_TOKENS", "256"));
    c.timeout_seconds = std::stoi(env_or("MMX_LLM_TIMEOUT", "30"));
  } catch (const std::exception&) {
    throw ConfigError("MMX_LLM_TEMPERATURE, MMX_LLM_MAX_TOKENS and MMX_LLM_TIMEOUT must be numbers");
  }
  return c;
}

void LlmConfig::validate() const {
  if (url.empty()) throw ConfigError("LLM endpoint not configured (set MMX_LLM_URL)");
  if (url.rfind("http://", 0) != 0) throw ConfigError("LLM endpoint must be an http:// URL");
  if (!(temperature >= 0.0)) throw ConfigError("LLM temperature must be >= 0");
  if (max_tokens < 1 || timeout_seconds < 1 || max_attempts < 1 || max_parallel < 1)
    throw ConfigError("LLM max_tokens, timeout, attempts and parallelism must be positive");
}

HttpCompletionClient::HttpCompletionClient(LlmConfig config) : config_(std::move(config)) { config_.validate(); }

std::string HttpCompletionClient::complete(const std::string& prompt, double temperature, int max_tokens) const {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < config_.max_parallel; });
    ++in_flight_;
  }
  struct Release {
    const HttpCompletionClient* self;
    ~Release() {
      std::lock_guard lock(self->mu_);
      --self->in_flight_;
      self->cv_.notify_one();
    }
  } release{this};

  httplib::Client client(config_.url);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const json body = {{"model", config_.model}, {"prompt", prompt}, {"temperature", temperature}, {"max_tokens", max_tokens}};
  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) throw LlmError("LLM request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw LlmError("LLM endpoint returned HTTP " + std::to_string(res->status), {res->body});
  try {
    const json reply = json::parse(res->body);
    const json& choice = reply.at("choices").at(0);
    if (choice.contains("text")) return choice.at("text").get<std::string>();
    return choice.at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw LlmError(std::string("unexpected LLM response: ") + e.what(), {res->body});
  }
}

const std::string& default_prompt_template() {
  static const std::string text =
#include "cop_prompt.inc"
      ;
  return text;
}

std::string personality_text(Personality p) {
  switch (p) {
    case Personality::con_artist:
      return "You are a smooth talker who looks out only for yourself. You lie when it pays, make promises you have no "
             "intention of keeping, and do not mind if the others get hurt.";
    case Personality::simple_person:
      return "You speak plainly and care a great deal about the people around you. You are fairly easy to persuade, "
             "but once you think someone lied to you, you do not let it go.";
    case Personality::politician:
      return "You read people quickly and ask pointed questions. You look after yourself but stay honest when you can. "
             "You prefer straightforward, friendly partners and turn against anyone who tries to manipulate you.";
  }
  return "";
}

std::string render_prompt(const std::string& tmpl, const CopState& s, AgentId agent, const std::string& personality) {
  std::string out = tmpl;
  std::string others;
  std::vector<AgentId> other_ids;
  for (AgentId j = 0; j < kAgents; ++j)
    if (j != agent) other_ids.push_back(j);
  others = std::string(1, agent_letter(other_ids[0])) + "/" + agent_letter(other_ids[1]);

  std::ostringstream history;
  for (AgentId j : other_ids) {
    history << "with " << agent_letter(j) << ":";
    bool line = false;
    for (const auto& e : s.chat) {
      const bool involved = (e.sender == agent && e.message.recipient == j) || (e.sender == j && e.message.recipient == agent);
      if (!involved) continue;
      history << "\n  " << agent_letter(e.sender) << " to " << agent_letter(e.message.recipient) << ": " << e.message.text;
      line = true;
    }
    if (!line) history << " null";
    history << "\n";
  }

  std::string stage, format;
  if (s.phase == Phase::announce) {
    stage = "announce";
    const char a = static_cast<char>('a' + other_ids[0]), b = static_cast<char>('a' + other_ids[1]);
    format = std::string("Reply with only your announcement in the form (") + a + "=guilty|innocent, " + b + "=guilty|innocent).";
  } else {
    stage = "communicate (round " + std::to_string(s.round + 1) + " of " + std::to_string(s.rounds) + ")";
    format = "Pick one recipient (" + others + ") and reply with a single line of the form <recipient>: <message>.";
  }
  std::string hist = history.str();
  if (!hist.empty() && hist.back() == '\n') hist.pop_back();

  replace_all(out, "{{agent}}", std::string(1, agent_letter(agent)));
  replace_all(out, "{{others}}", others);
  replace_all(out, "{{rounds}}", std::to_string(s.rounds));
  replace_all(out, "{{personality}}", personality);
  replace_all(out, "{{chat_history}}", hist);
  replace_all(out, "{{stage}}", stage);
  replace_all(out, "{{format}}", format);
  return out;
}

std::optional<Announcement> parse_announcement(const std::string& reply, AgentId agent) {
  static const std::regex re(R"(\(\s*([a-c])\s*=\s*(guilty|innocent|1|0)\s*,\s*([a-c])\s*=\s*(guilty|innocent|1|0)\s*\))",
                             std::regex::icase);
  std::smatch m;
  if (!std::regex_search(reply, m, re)) return std::nullopt;
  auto who = [](const std::string& s) { return static_cast<AgentId>(std::tolower(static_cast<unsigned char>(s[0])) - 'a'); };
  auto verdict = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s == "guilty" || s == "1";
  };
  const AgentId x = who(m[1].str()), y = who(m[3].str());
  if (x == agent || y == agent || x == y) return std::nullopt;
  Announcement a;
  a.by = agent;
  a.guilty[static_cast<std::size_t>(x)] = verdict(m[2].str());
  a.guilty[static_cast<std::size_t>(y)] = verdict(m[4].str());
  return a;
}

std::optional<Message> parse_message(const std::string& reply, AgentId agent) {
  static const std::regex re(R"(^\s*(?:to\s+)?(?:agent\s+)?([a-c])\s*[:\-]\s*(.+)$)", std::regex::icase);
  std::istringstream lines(reply);
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, re)) continue;
    const AgentId r = static_cast<AgentId>(std::toupper(static_cast<unsigned char>(m[1].str()[0])) - 'A');
    const std::string text = trim(m[2].str());
    if (r == agent || text.empty()) continue;
    return Message{r, Template::free_text, -1, text};
  }
  return std::nullopt;
}

LlmPolicy::LlmPolicy(std::shared_ptr<const CompletionClient> client, Personality type, LlmConfig config,
                     std::string prompt_template)
    : client_(std::move(client)), type_(type), config_(std::move(config)), template_(std::move(prompt_template)) {
  if (!client_) throw ConfigError("LLM policy needs a completion client");
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

CopAction LlmPolicy::query(const CopState& s, AgentId agent, double temperature) const {
  if (s.phase == Phase::terminal) throw IllegalActionError("no action is possible in a terminal state");
  const std::string prompt = render_prompt(template_, s, agent, personality_text(type_));
  std::vector<std::string> transcript;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    std::string reply = client_->complete(prompt, temperature, config_.max_tokens);
    if (s.phase == Phase::announce) {
      if (auto a = parse_announcement(reply, agent)) return *a;
    } else if (auto m = parse_message(reply, agent)) {
      return *m;
    }
    transcript.push_back(std::move(reply));
  }
  throw LlmError(agent_label(agent) + ": no parseable reply after " + std::to_string(config_.max_attempts) + " attempts",
                 std::move(transcript));
}

CopAction LlmPolicy::sample(const CopState& s, AgentId agent, Rng&) const { return query(s, agent, config_.temperature); }

std::optional<CopAction> LlmPolicy::mode(const CopState& s, AgentId agent) const { return query(s, agent, 0.0); }

}  // namespace mmx::cop
