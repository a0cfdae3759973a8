#include "stormbench/json_codec.hpp"

namespace stormbench {

using nlohmann::json;

json to_json(const Violation& v) {
    return json{{"code", std::string(to_string(v.code))}, {"path", v.path}, {"message", v.message}};
}

json to_json(const ValidationReport& r) {
    json list = json::array();
    for (const auto& v : r.violations) list.push_back(to_json(v));
    return json{{"ok", r.ok()}, {"violations", std::move(list)}};
}

json to_json(const RegistryEntry& e) {
    return json{{"id", e.id.value},
                {"waveform_name", e.descriptor.waveform_name},
                {"category", std::string(to_string(e.descriptor.category))},
                {"execution_mode", std::string(to_string(e.descriptor.execution_mode))},
                {"binding", e.binding},
                {"builtin", e.builtin},
                {"descriptor", to_json(e.descriptor)}};
}

json error_json(const Error& e) {
    json j{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (const auto* v = dynamic_cast<const ValidationError*>(&e)) j["report"] = to_json(v->report());
    return j;
}

json error_json(const std::exception& e) {
    if (const auto* se = dynamic_cast<const Error*>(&e)) return error_json(*se);
    return json{{"error", "InternalError"}, {"message", e.what()}};
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::IllegalState:
        case ErrorCode::RoleConflict:
        case ErrorCode::DuplicateError:
        case ErrorCode::CompatibilityError: return 409;
        case ErrorCode::UnknownWaveform:
        case ErrorCode::UnknownDevice: return 404;
        case ErrorCode::ValidationFailed: return 422;
        case ErrorCode::IoError: return 500;
        case ErrorCode::LengthError:
        case ErrorCode::RangeError:
        case ErrorCode::ConfigError:
        case ErrorCode::ShapeError:
        case ErrorCode::InsufficientData:
        case ErrorCode::ParseError: return 400;
    }
    return 500;
}

}  // namespace stormbench
