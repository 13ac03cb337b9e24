#include "mmx/eval/eval.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <set>
#include <sstream>

namespace mmx::eval {

json report_to_json(const ConvergenceReport& r) {
  json j = {{"op", r.op}, {"sizes", r.sizes}, {"reps", r.reps}, {"excluded", r.excluded}};
  if (r.op == "sbue") {
    j["truth_k"] = r.truth_k;
    j["rmse"] = r.rmse;
  } else {
    j["d"] = r.depth;
    json c = json::array();
    for (double v : r.cosine) c.push_back(std::isfinite(v) ? json(v) : json());
    j["cosine"] = c;
  }
  return j;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("cosine similarity needs equal-length vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> rmse(const std::vector<UtilityVector>& estimates, const UtilityVector& truth) {
  if (estimates.empty()) throw ConfigError("RMSE needs at least one estimate");
  std::vector<double> out(truth.size(), 0.0);
  for (const auto& e : estimates) {
    if (e.size() != truth.size()) throw DimensionError("estimate length does not match the truth");
    for (std::size_t i = 0; i < e.size(); ++i) out[i] += (e[i] - truth[i]) * (e[i] - truth[i]);
  }
  for (double& v : out) v = std::sqrt(v / static_cast<double>(estimates.size()));
  return out;
}

double mean_pairwise_cosine(const std::vector<RelationMatrix>& ms) {
  if (ms.size() < 2) throw ConfigError("mean pairwise cosine needs at least two matrices");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < ms.size(); ++a)
    for (std::size_t b = a + 1; b < ms.size(); ++b) {
      total += cosine_similarity(ms[a].r, ms[b].r);
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

ApResult average_precision_at_k(const std::vector<AgentId>& predicted, const std::vector<AgentId>& reference, int k) {
  if (k < 1) throw ConfigError("K must be >= 1");
  if (std::set<AgentId>(predicted.begin(), predicted.end()).size() != predicted.size())
    throw ConfigError("predicted ranking has duplicates");
  const std::set<AgentId> relevant(reference.begin(), reference.end());
  if (relevant.empty()) return {0.0, true};
  double sum = 0.0;
  int hits = 0;
  const std::size_t limit = std::min(predicted.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < limit; ++i) {
    if (!relevant.contains(predicted[i])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return {sum / static_cast<double>(std::min<std::size_t>(static_cast<std::size_t>(k), relevant.size())), false};
}

std::vector<AgentId> filled(const PartialRanking& r) {
  std::vector<AgentId> out;
  for (const auto& a : r)
    if (a) out.push_back(*a);
  return out;
}

void validate(const AnnotationRecord& r, int num_agents) {
  const std::string where = "annotation for state " + r.state_id + " by " + r.annotator;
  if (r.agent < 0 || r.agent >= num_agents) throw ConfigError(where + ": acting agent out of range");
  std::set<AgentId> seen;
  for (const auto* list : {&r.friends, &r.enemies}) {
    if (list->empty() || list->size() > 2) throw ConfigError(where + ": friends and enemies need one or two slots");
    for (const auto& a : *list) {
      if (!a) continue;
      if (*a < 0 || *a >= num_agents) throw ConfigError(where + ": agent out of range");
      if (*a == r.agent) throw ConfigError(where + ": the acting agent cannot rank itself");
      if (!seen.insert(*a).second) throw ConfigError(where + ": " + agent_label(*a) + " listed twice");
    }
  }
}

AgentId parse_agent(const json& j, int num_agents) {
  if (j.is_number_integer()) return j.get<AgentId>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0]))) {
      const AgentId a = std::toupper(static_cast<unsigned char>(s[0])) - 'A';
      if (a < num_agents) return a;
    }
    for (AgentId a = 0; a < num_agents; ++a)
      if (s == agent_label(a)) return a;
  }
  throw ConfigError("cannot read agent from " + j.dump());
}

namespace {

PartialRanking parse_ranking(const json& j, int num_agents) {
  PartialRanking out;
  for (const json& e : j) {
    if (e.is_null()) out.emplace_back(std::nullopt);
    else out.emplace_back(parse_agent(e, num_agents));
  }
  return out;
}

}  // namespace

std::vector<AnnotationRecord> read_annotations(std::istream& in, int num_agents) {
  std::vector<AnnotationRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      AnnotationRecord r;
      const json& sid = j.at("state_id");
      r.state_id = sid.is_string() ? sid.get<std::string>() : sid.dump();
      r.annotator = j.value("annotator", "");
      r.agent = parse_agent(j.at("agent"), num_agents);
      r.friends = parse_ranking(j.at("friends"), num_agents);
      r.enemies = parse_ranking(j.at("enemies"), num_agents);
      validate(r, num_agents);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ConfigError("annotation line " + std::to_string(number) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("annotation line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

json map_to_json(const MapScore& m) {
  json j = {{"map", m.value}, {"k", m.k}, {"n", m.n}, {"empty_references", m.empty_references}};
  if (m.lower) j["lower"] = *m.lower;
  if (m.upper) j["upper"] = *m.upper;
  return j;
}

MapBounds ap_bounds(const std::vector<AgentId>& predicted, const PartialRanking& reference, const std::vector<AgentId>& pool,
                    int k) {
  std::vector<AgentId> base = filled(reference);
  const std::size_t open = reference.size() - base.size();
  std::vector<AgentId> free;
  for (AgentId a : pool)
    if (std::find(base.begin(), base.end(), a) == base.end()) free.push_back(a);
  std::sort(free.begin(), free.end());
  free.erase(std::unique(free.begin(), free.end()), free.end());

  MapBounds b{INFINITY, -INFINITY};
  auto consider = [&](const std::vector<AgentId>& ref) {
    const double v = average_precision_at_k(predicted, ref, k).value;
    b.lower = std::min(b.lower, v);
    b.upper = std::max(b.upper, v);
  };
  if (free.size() > 20) throw ConfigError("too many agents to enumerate reference completions");
  // AP only depends on the relevant set. Each unfilled slot takes a distinct
  // free agent or stays empty, so every subset of at most `open` free agents
  // is one reading.
  for (std::uint32_t mask = 0; mask < (1u << free.size()); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > open) continue;
    std::vector<AgentId> ref = base;
    for (std::size_t i = 0; i < free.size(); ++i)
      if (mask & (1u << i)) ref.push_back(free[i]);
    consider(ref);
  }
  return b;
}

MapBounds map_bounds(const std::vector<std::vector<AgentId>>& predicted, const std::vector<PartialRanking>& references,
                     const std::vector<std::vector<AgentId>>& pools, int k) {
  if (predicted.size() != references.size() || pools.size() != references.size())
    throw DimensionError("predictions, references and pools must align");
  if (references.empty()) throw ConfigError("MAP bounds need at least one record");
  MapBounds total{0.0, 0.0};
  for (std::size_t n = 0; n < references.size(); ++n) {
    const MapBounds b = ap_bounds(predicted[n], references[n], pools[n], k);
    total.lower += b.lower;
    total.upper += b.upper;
  }
  total.lower /= static_cast<double>(references.size());
  total.upper /= static_cast<double>(references.size());
  return total;
}

MapScore evaluate_map(const std::map<PredictionKey, RankedPrediction>& predictions,
                      const std::vector<AnnotationRecord>& references, Relation relation, int k, int num_agents) {
  if (references.empty()) throw ConfigError("no reference annotations to score against");
  MapScore out;
  out.k = k;
  std::vector<std::vector<AgentId>> preds, pools;
  std::vector<PartialRanking> refs;
  bool partial = false;
  double sum = 0.0;
  for (const auto& r : references) {
    validate(r, num_agents);
    const auto it = predictions.find({r.state_id, r.agent});
    if (it == predictions.end())
      throw ConfigError("no prediction for state " + r.state_id + ", " + agent_label(r.agent));
    const auto& pred = relation == Relation::friends ? it->second.friends : it->second.enemies;
    const auto& ref = relation == Relation::friends ? r.friends : r.enemies;
    const auto& other = relation == Relation::friends ? r.enemies : r.friends;
    std::vector<AgentId> pool;
    for (AgentId a = 0; a < num_agents; ++a) {
      const auto o = filled(other);
      if (a != r.agent && std::find(o.begin(), o.end(), a) == o.end()) pool.push_back(a);
    }
    const ApResult ap = average_precision_at_k(pred, filled(ref), k);
    if (ap.empty_reference) ++out.empty_references;
    sum += ap.value;
    partial = partial || filled(ref).size() != ref.size();
    preds.push_back(pred);
    refs.push_back(ref);
    pools.push_back(std::move(pool));
  }
  out.n = references.size();
  out.value = sum / static_cast<double>(out.n);
  if (partial) {
    const MapBounds b = map_bounds(preds, refs, pools, k);
    out.lower = b.lower;
    out.upper = b.upper;
  }
  return out;
}

double strength_entropy(const std::vector<double>& shares) {
  double total = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) throw ConfigError("shares must be non-negative");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("shares must sum to 1");
  double h = 0.0;
  for (double s : shares)
    if (s > 0.0) h -= s * std::log(s);
  return h;
}

std::vector<int> entropy_bands(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<int> band(values.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) band[order[rank]] = static_cast<int>(3 * rank / order.size());
  return band;
}

RankedPrediction baseline_ranking(BaselineMode mode, AgentId agent, int num_agents, const std::optional<std::vector<double>>& strength,
                                  Rng* rng) {
  std::vector<AgentId> others;
  for (AgentId a = 0; a < num_agents; ++a)
    if (a != agent) others.push_back(a);
  RankedPrediction out;
  if (mode == BaselineMode::strength) {
    if (!strength) throw ConfigError("strength baseline needs a per-agent strength for every state");
    if (strength->size() != static_cast<std::size_t>(num_agents)) throw DimensionError("strength vector length does not match agents");
    std::stable_sort(others.begin(), others.end(), [&](AgentId a, AgentId b) {
      return (*strength)[static_cast<std::size_t>(a)] > (*strength)[static_cast<std::size_t>(b)];
    });
  } else {
    if (!rng) throw ConfigError("random baseline needs a random stream");
    for (std::size_t i = others.size(); i > 1; --i) std::swap(others[i - 1], others[rng->uniform_int(i)]);
  }
  out.friends = others;
  out.enemies.assign(others.rbegin(), others.rend());
  return out;
}

double expected_random_ap(int m, int r, int k) {
  if (m < 1 || r < 0 || r > m || k < 1) throw ConfigError("need 0 <= r <= m and k >= 1");
  if (r == 0) return 0.0;
  const double p1 = static_cast<double>(r) / m;
  const double p2 = m > 1 ? static_cast<double>(r) * (r - 1) / (static_cast<double>(m) * (m - 1)) : 0.0;
  double sum = 0.0;
  for (int i = 1; i <= std::min(k, m); ++i) sum += (p1 + (i - 1) * p2) / i;
  return sum / std::min(k, r);
}

std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < cells.size() ? cells[c] : "";
      out << cell;
      if (c + 1 < width.size()) out << std::string(width[c] - cell.size() + 2, ' ');
    }
    out << "\n";
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c + 1 < width.size() ? 2 : 0);
  out << std::string(total, '-') << "\n";
  for (const auto& row : rows) line(row);
  return out.str();
}

}  // namespace mmx::eval
