#pragma once

#include <exception>

#include "json.hpp"
#include "stormbench/error.hpp"
#include "stormbench/registry.hpp"

namespace stormbench {

nlohmann::json to_json(const Violation& v);
nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const RegistryEntry& e);

// {"error": "<ErrorCode>", "message": ..., "report": [...]?}; the report is
// present for ValidationError.
nlohmann::json error_json(const Error& e);
// Any exception; unknown types map to a generic internal error.
nlohmann::json error_json(const std::exception& e);

// HTTP status for an error class: 409 for state conflicts, 404 for unknown
// ids, 422 for validation, 400 for malformed input, 500 for I/O.
int http_status(ErrorCode code) noexcept;

}  // namespace stormbench
