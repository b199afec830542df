#pragma once

#include <string>

#include <json.hpp>

namespace nete {

// Serializes with sorted keys, two-space indentation and every floating-point
// number printed with 17 significant digits, so equal documents are equal
// byte for byte. Non-finite doubles are written as the strings "inf", "-inf"
// and "nan".
std::string write_json(const nlohmann::json& doc);

// JSON value for a double that may be non-finite.
nlohmann::json json_number(double v);

std::string format_double(double v);

// Shortest text that reads back to the same double; for identity strings.
std::string format_double_short(double v);

}  // namespace nete
