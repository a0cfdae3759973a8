#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stormbench/catalog.hpp"
#include "stormbench/error.hpp"
#include "stormbench/generators.hpp"
#include "stormbench/params.hpp"

namespace stormbench {

inline constexpr int kDescriptorSchemaVersion = 1;

enum class ParamKind { Integer, Float, Enumerated };

std::string_view to_string(ParamKind k) noexcept;

struct ParameterDef {
    std::string name;
    ParamKind kind = ParamKind::Float;
    double min = 0.0;  // numeric kinds, inclusive
    double max = 0.0;
    std::vector<std::string> options;  // enumerated kind
    std::string units;
    ParamValue default_value;

    bool operator==(const ParameterDef&) const = default;
};

struct WaveformDescriptor {
    int schema_version = kDescriptorSchemaVersion;
    std::string waveform_name;
    Category category = Category::Narrowband;
    ExecutionMode execution_mode = ExecutionMode::DirectGraph;
    std::vector<ParameterDef> parameters;

    const ParameterDef* find_parameter(std::string_view name) const noexcept;
    bool operator==(const WaveformDescriptor&) const = default;
};

enum class ViolationCode {
    MissingField,
    BadType,
    RangeViolation,
    BadCategory,
    DuplicateName,
    DefaultOutOfRange,
    UnknownParameter,
};

std::string_view to_string(ViolationCode c) noexcept;

struct Violation {
    ViolationCode code;
    std::string path;  // e.g. "parameters[1].default" or "gain"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    std::size_t count(ViolationCode c) const noexcept;
    std::string summary() const;
};

// Thrown where a ValidationReport has to cross an API that otherwise
// returns values (registration, session start).
class ValidationError : public Error {
public:
    explicit ValidationError(ValidationReport report);
    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

template <class T>
struct Validated {
    std::optional<T> value;
    ValidationReport report;

    bool ok() const noexcept { return value.has_value(); }
};

// Checks a descriptor document and lists every violation found, not only the
// first. A document with k independent faults produces exactly k entries.
// Throws ParseError when `text` is not JSON.
Validated<WaveformDescriptor> validate_descriptor(std::string_view text);
Validated<WaveformDescriptor> validate_descriptor(const nlohmann::json& document);
// Text overloads; without them a std::string converts equally well to both.
inline Validated<WaveformDescriptor> validate_descriptor(const std::string& text) {
    return validate_descriptor(std::string_view(text));
}
inline Validated<WaveformDescriptor> validate_descriptor(const char* text) {
    return validate_descriptor(std::string_view(text));
}

nlohmann::json to_json(const WaveformDescriptor& d);
std::string serialize(const WaveformDescriptor& d);

enum class WidgetKind { IntegerInput, FloatInput, Dropdown };

std::string_view to_string(WidgetKind k) noexcept;

struct Widget {
    std::string name;
    std::string label;
    WidgetKind kind = WidgetKind::FloatInput;
    double min = 0.0;
    double max = 0.0;
    std::vector<std::string> options;
    std::string units;
    ParamValue default_value;
};

struct FormSpec {
    std::string waveform_name;
    std::vector<Widget> widgets;
};

FormSpec form_spec(const WaveformDescriptor& d);
nlohmann::json to_json(const FormSpec& f);

struct RegistryId {
    std::string value;
    bool operator==(const RegistryId&) const = default;
};

struct RegistryEntry {
    RegistryId id;
    WaveformDescriptor descriptor;
    std::string binding;
    bool builtin = false;
};

// Validation & registration store. Concurrent readers, serialised writers;
// an entry becomes visible only once fully registered.
class Registry {
public:
    Registry() = default;

    // Registry pre-loaded with every shipped descriptor. Throws if one of
    // them fails validation.
    static Registry with_builtins();

    // Throws ValidationError for an invalid descriptor, CompatibilityError
    // when the binding is unknown, implements a different category or does
    // not support the execution mode, and DuplicateError for a taken name.
    RegistryId register_waveform(const WaveformDescriptor& descriptor, const std::string& binding);

    std::vector<RegistryEntry> list() const;
    std::optional<RegistryEntry> find(const RegistryId& id) const;
    bool contains(const RegistryId& id) const;

    // Type and range checks every supplied value, rejects unknown names and
    // fills missing ones from defaults. Throws UnknownWaveform for an
    // unregistered id.
    Validated<ParamMap> validate_params(const RegistryId& id, const ParamMap& values) const;
    Validated<ParamMap> validate_params(const RegistryId& id, const nlohmann::json& values) const;

    FormSpec form_spec(const RegistryId& id) const;

    // Builds a generator for already-validated parameters.
    std::unique_ptr<WaveformGenerator> instantiate(const RegistryId& id, const ParamMap& params, double sample_rate,
                                                   std::uint64_t seed) const;

    Registry(const Registry& other);
    Registry& operator=(const Registry& other);

private:
    std::shared_ptr<const RegistryEntry> entry(const RegistryId& id) const;

    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const RegistryEntry>> entries_;
};

// Optional "binding" key of a descriptor document; defaults to the
// waveform_name when absent.
std::string binding_hint(const nlohmann::json& document);

nlohmann::json to_json(const ParamValue& v);
nlohmann::json to_json(const ParamMap& m);
// Numbers keep their JSON integer/float distinction; other JSON types are
// reported through `bad_keys`.
ParamMap params_from_json(const nlohmann::json& object, std::vector<std::string>* bad_keys = nullptr);

}  // namespace stormbench
