#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "mmx/core/explain.hpp"
#include "mmx/core/json_text.hpp"

// Communicate-out-of-prison: three suspects exchange private messages for K
// rounds and then simultaneously announce who they think is guilty.
namespace mmx::cop {

inline constexpr int kAgents = 3;

enum class Template { accuse, defend_self, propose_alliance, affirm_trust, sow_doubt, smalltalk, free_text };

std::string to_string(Template t);
Template template_from_string(const std::string& s);

// A private message. `target` is used by accuse, sow_doubt, propose_alliance
// and affirm_trust; -1 otherwise.
struct Message {
  AgentId recipient = -1;
  Template kind = Template::smalltalk;
  AgentId target = -1;
  std::string text;

  bool operator==(const Message&) const = default;
};

// guilty[j] for each j != by; guilty[by] is always false.
struct Announcement {
  AgentId by = 0;
  std::array<bool, kAgents> guilty{};

  bool operator==(const Announcement&) const = default;
};

using CopAction = std::variant<Message, Announcement>;

struct ChatEntry {
  int round = 0;
  AgentId sender = 0;
  Message message;

  bool operator==(const ChatEntry&) const = default;
};

enum class Phase { communicate, announce, terminal };

std::string to_string(Phase p);

struct CopState {
  int round = 0;  // communicate rounds are 0..K-1, the announcement is round K
  int rounds = 4;
  std::uint64_t precedence_seed = 0;
  std::array<AgentId, kAgents> precedence{0, 1, 2};
  Phase phase = Phase::communicate;
  std::vector<ChatEntry> chat;
  std::array<Announcement, kAgents> announcements{};
  UtilityVector payoffs;  // set once terminal

  bool operator==(const CopState&) const = default;
};

char agent_letter(AgentId id);  // 'A', 'B', 'C'

// Payoffs (negative prison years). Every counted blame costs 10 years; if no
// one blames anyone each agent gets 5. A blame from y on x is void when x and
// the third agent z both blame y and z does not blame x.
UtilityVector cop_payoffs(const Announcement& a, const Announcement& b, const Announcement& c);

// Announcement by `by` from the two flags for the other agents, in agent
// order.
Announcement make_announcement(AgentId by, bool first_other_guilty, bool second_other_guilty);

std::array<AgentId, kAgents> precedence_for_round(std::uint64_t seed, int round);

struct CopConfig {
  int rounds = 4;
  std::uint64_t seed = 0;  // drives the per-round precedence orders

  void validate() const;
};

class CopEnv final : public Environment<CopState, CopAction> {
 public:
  explicit CopEnv(CopConfig config = {});

  int num_agents() const override { return kAgents; }
  double discount() const override { return 1.0; }
  bool is_terminal(const CopState& s) const override { return s.phase == Phase::terminal; }
  CopState transition(const CopState& s, std::span<const CopAction> joint, Rng& rng) const override;
  UtilityVector reward(const CopState& prev, const CopState& next) const override;
  bool is_legal(const CopState& s, AgentId agent, const CopAction& a) const override;
  std::optional<std::vector<CopAction>> legal_actions(const CopState& s, AgentId agent) const override;
  std::string encode(const CopAction& a) const override;

  CopState initial_state() const;
  const CopConfig& config() const { return config_; }

 private:
  CopConfig config_;
};

// Applies one protocol step. Throws IllegalActionError on phase mismatch or
// malformed actions.
CopState cop_step(const CopState& s, std::span<const CopAction> joint);

// Canned text for a template message.
std::string render(AgentId sender, const Message& m);

std::string announcement_text(const Announcement& a);  // "(b=guilty, c=innocent)"

enum class Personality { con_artist, simple_person, politician };

std::string to_string(Personality p);
Personality personality_from_string(const std::string& s);

struct PersonalityParams {
  double accusation_bias = 1.0;      // weight of accusations received and reported
  double trust_decay = 1.0;          // per-round retention of friendly evidence, in (0, 1]
  double alliance_preference = 1.0;  // weight of friendly evidence, drive to propose alliances
  double honesty_weight = 1.0;       // distrust of senders who sow doubt; restraint from doing so
  double gullibility = 0.0;          // how much doubt sown about a third agent sticks
  double p_both_guilty = 0.0;        // announcement mass on (guilty, guilty)
  double temperature = 1.0;

  void validate() const;
};

PersonalityParams default_params(Personality p);

// Evidence an agent has accumulated about each other agent from the messages
// it received.
struct Evidence {
  std::array<double, kAgents> hostile{};   // accused me or sowed doubt about me
  std::array<double, kAgents> reported{};  // accused by a third agent
  std::array<double, kAgents> doubted{};   // doubt sown about them by a third agent
  std::array<double, kAgents> manipulative{};
  std::array<double, kAgents> friendly{};
  bool empty = true;
};

Evidence gather_evidence(const CopState& s, AgentId agent, double trust_decay);
std::array<double, kAgents> suspicion(const Evidence& e, const PersonalityParams& p, AgentId agent);

// Type-conditioned policy over the template vocabulary and announcements.
class ScriptedPolicy final : public Policy<CopState, CopAction> {
 public:
  ScriptedPolicy(Personality type, PersonalityParams params);
  explicit ScriptedPolicy(Personality type) : ScriptedPolicy(type, default_params(type)) {}

  CopAction sample(const CopState& s, AgentId agent, Rng& rng) const override;
  std::optional<double> prob(const CopState& s, AgentId agent, const CopAction& a) const override;
  std::optional<CopAction> mode(const CopState& s, AgentId agent) const override;

  // Full action distribution in the current phase (probabilities sum to 1).
  std::vector<std::pair<CopAction, double>> distribution(const CopState& s, AgentId agent) const;

  std::shared_ptr<ScriptedPolicy> at_temperature(double tau) const;

  Personality type() const { return type_; }
  const PersonalityParams& params() const { return params_; }

 private:
  Personality type_;
  PersonalityParams params_;
};

using CopModel = GameModel<CopState, CopAction>;

// Mean terminal payoff over n complete rollouts from s. Terminal states
// return their recorded payoff.
UtilityVector cop_value_estimate(const CopEnv& env, const std::vector<std::shared_ptr<const Policy<CopState, CopAction>>>& policies,
                                 const CopState& s, int n, Rng& rng);
UtilityVector cop_value_estimate(const CopEnv& env, const std::vector<std::shared_ptr<const Policy<CopState, CopAction>>>& policies,
                                 const CopState& s, int n, SeededRng seed);

// Rollout value V. Returns zero at terminal states because the terminal
// payoff is paid as the reward of the announcement step.
class CopValue final : public ValueFunction<CopState> {
 public:
  CopValue(std::shared_ptr<const CopEnv> env, std::vector<std::shared_ptr<const Policy<CopState, CopAction>>> policies,
           int rollouts);
  UtilityVector evaluate(const CopState& s, Rng& rng) const override;

 private:
  std::shared_ptr<const CopEnv> env_;
  std::vector<std::shared_ptr<const Policy<CopState, CopAction>>> policies_;
  int rollouts_;
};

struct CopSetup {
  CopConfig config;
  std::array<Personality, kAgents> types{Personality::con_artist, Personality::simple_person, Personality::politician};
  int value_rollouts = 8;
  std::optional<double> temperature;  // overrides every type's default

  static CopSetup standard();
  static CopSetup two_politicians();
};

struct CopGame {
  std::shared_ptr<const CopEnv> env;
  CopModel model;
  std::vector<std::string> agent_names;
};

CopGame make_game(const CopSetup& setup);
CopSetup setup_from_json(const json& j);

json state_to_json(const CopState& s);
json action_to_json(const CopAction& a);
// Parses {"type":"message","recipient":"B","template":"accuse","target":"C"}
// or {"type":"announce","guilty":{"b":true,"c":false}} for `agent`.
CopAction action_from_json(const json& j, AgentId agent);

// One JSON line per message or announcement: {round, sender, recipient, text,
// template}.
void write_game_log(std::ostream& out, const CopState& s);

}  // namespace mmx::cop
