#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>

namespace stormbench {

using ParamValue = std::variant<std::int64_t, double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

std::string describe(const ParamValue& v);

// Typed lookups with fallbacks, used by the generator factories. Integers
// widen to double; anything else falls back.
double get_number(const ParamMap& params, const std::string& name, double fallback);
std::int64_t get_integer(const ParamMap& params, const std::string& name, std::int64_t fallback);
std::string get_string(const ParamMap& params, const std::string& name, const std::string& fallback);

}  // namespace stormbench
