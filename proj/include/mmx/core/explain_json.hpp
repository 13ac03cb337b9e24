#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmx/core/explain.hpp"
#include "mmx/core/json_text.hpp"

namespace mmx {

// Wire form shared by the CLI and the service:
// {type, agents, values, matrix, modal_actions, meta{k, d, seed}}.

struct ExplanationMeta {
  std::size_t k = 0;
  std::size_t d = 1;
  std::uint64_t seed = 0;
};

json meta_json(const ExplanationMeta& meta);

json sbue_to_json(const SbueExplanation& e, const std::vector<std::string>& agents, const ExplanationMeta& meta);

json sica_to_json(const RelationMatrix& m, const std::vector<std::string>& agents, const ExplanationMeta& meta,
                  const RelationBands& bands = {});

json mask_json(const std::vector<bool>& mask);

template <class A>
json modal_actions_json(const ProbableActions<A>& pa, const std::vector<std::string>& agents) {
  json modal = json::array();
  for (std::size_t i = 0; i < pa.per_agent.size(); ++i) {
    if (!pa.per_agent[i]) continue;
    const auto& m = *pa.per_agent[i];
    json hist = json::array();
    for (const auto& [enc, f] : m.histogram) hist.push_back({{"action", enc}, {"frequency", f}});
    modal.push_back({{"agent", agents.at(i)}, {"action", m.encoding}, {"frequency", m.frequency}, {"distribution", hist}});
  }
  return modal;
}

template <class A>
json probable_to_json(const ProbableActions<A>& pa, const std::vector<std::string>& agents,
                      const ExplanationMeta& meta) {
  json j;
  j["type"] = "probable";
  j["agents"] = agents;
  j["values"] = json::array();
  j["matrix"] = json::array();
  j["modal_actions"] = modal_actions_json(pa, agents);
  j["meta"] = meta_json(meta);
  if (pa.greedy_decode) j["meta"]["note"] = pa.note;
  return j;
}

template <class S, class A>
json trajectory_to_json(const Environment<S, A>& env, const ProbableTrajectory<S, A>& t,
                        const std::vector<std::string>& agents, const ExplanationMeta& meta) {
  json j;
  j["type"] = "probable";
  j["agents"] = agents;
  j["values"] = json::array();
  j["matrix"] = json::array();
  j["modal_actions"] = t.turns.empty() ? json::array() : modal_actions_json(t.turns.front(), agents);
  json turns = json::array();
  for (std::size_t h = 0; h < t.turns.size(); ++h) {
    json joint = json::array();
    for (const auto& a : t.joint_actions[h]) joint.push_back(env.encode(a));
    turns.push_back({{"turn", h + 1}, {"modal_actions", modal_actions_json(t.turns[h], agents)}, {"joint_action", joint}});
  }
  j["trajectory"] = turns;
  j["meta"] = meta_json(meta);
  j["meta"]["truncated"] = t.truncated;
  return j;
}

}  // namespace mmx
