#include "mmx/core/counterfactual.hpp"

namespace mmx {

bool satisfies(const std::vector<SubOrder>& orders, const std::vector<Constraint>& constraints) {
  const std::set<SubOrder> present(orders.begin(), orders.end());
  for (const auto& c : constraints) {
    const bool has = present.contains(c.sub_order);
    if (c.polarity == Polarity::require && !has) return false;
    if (c.polarity == Polarity::forbid && has) return false;
  }
  return true;
}

double order_similarity(const std::vector<SubOrder>& a, const std::vector<SubOrder>& b) {
  std::map<std::string, std::string> left, right;
  for (const auto& o : a) left[o.unit] = o.order;
  for (const auto& o : b) right[o.unit] = o.order;
  std::set<std::string> units;
  for (const auto& [u, _] : left) units.insert(u);
  for (const auto& [u, _] : right) units.insert(u);
  if (units.empty()) return 1.0;
  std::size_t matching = 0;
  for (const auto& u : units) {
    auto l = left.find(u);
    auto r = right.find(u);
    if (l != left.end() && r != right.end() && l->second == r->second) ++matching;
  }
  return static_cast<double>(matching) / static_cast<double>(units.size());
}

}  // namespace mmx
