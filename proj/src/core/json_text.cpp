#include "mmx/core/json_text.hpp"

#include <cmath>
#include <cstdio>

namespace mmx {
namespace {

void write(const json& j, int indent, int level, std::string& out) {
  const bool pretty = indent >= 0;
  auto newline = [&](int lvl) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * lvl), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(level + 1);
        out += json(it.key()).dump();
        out += pretty ? ": " : ":";
        write(it.value(), indent, level + 1, out);
      }
      newline(level);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line to keep matrices readable.
      bool scalars = true;
      for (const auto& e : j)
        if (e.is_structured()) scalars = false;
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += scalars && pretty ? ", " : ",";
        first = false;
        if (!scalars) newline(level + 1);
        write(e, indent, level + 1, out);
      }
      if (!scalars) newline(level);
      out += ']';
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_json_text(const json& j, int indent) {
  std::string out;
  write(j, indent, 0, out);
  return out;
}

}  // namespace mmx
