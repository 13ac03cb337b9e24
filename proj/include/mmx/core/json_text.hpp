#pragma once

#include <string>

#include <json.hpp>

namespace mmx {

using json = nlohmann::json;

// Serializes with every floating-point number printed at 17 significant
// digits ("%.17g"), so artifacts replay and diff bit-exactly. Non-finite
// numbers become null. indent < 0 gives a single line.
std::string to_json_text(const json& j, int indent = 2);

// "%.17g" for one number.
std::string format_double(double v);

}  // namespace mmx
