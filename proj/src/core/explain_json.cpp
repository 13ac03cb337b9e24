#include "mmx/core/explain_json.hpp"

namespace mmx {

json meta_json(const ExplanationMeta& meta) {
  return {{"k", meta.k}, {"d", meta.d}, {"seed", meta.seed}};
}

json mask_json(const std::vector<bool>& mask) {
  json out = json::array();
  for (bool b : mask) out.push_back(b);
  return out;
}

json sbue_to_json(const SbueExplanation& e, const std::vector<std::string>& agents, const ExplanationMeta& meta) {
  json j;
  j["type"] = "sbue";
  j["agents"] = agents;
  j["values"] = e.expected_utility;
  j["matrix"] = json::array();
  j["modal_actions"] = json::array();
  if (e.standardized) {
    j["standardized"] = *e.standardized;
    j["degenerate"] = mask_json(e.degenerate);
  }
  j["meta"] = meta_json(meta);
  return j;
}

json sica_to_json(const RelationMatrix& m, const std::vector<std::string>& agents, const ExplanationMeta& meta,
                  const RelationBands& bands) {
  json j;
  j["type"] = "sica";
  j["agents"] = agents;
  j["values"] = json::array();
  json rows = json::array();
  json labels = json::array();
  for (std::size_t i = 0; i < m.p; ++i) {
    json row = json::array();
    json label_row = json::array();
    for (std::size_t c = 0; c < m.p; ++c) {
      row.push_back(m(i, c));
      label_row.push_back(i == c ? "self" : (m.degenerate[i] || m.degenerate[c]) ? "degenerate" : bands.label(m(i, c)));
    }
    rows.push_back(std::move(row));
    labels.push_back(std::move(label_row));
  }
  j["matrix"] = std::move(rows);
  j["labels"] = std::move(labels);
  j["degenerate"] = mask_json(m.degenerate);
  j["modal_actions"] = json::array();
  j["meta"] = meta_json(meta);
  return j;
}

}  // namespace mmx
