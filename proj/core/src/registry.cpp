#include "stormbench/registry.hpp"

#include <cctype>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>

#include "stormbench/resources.hpp"

namespace stormbench {

using nlohmann::json;

namespace {

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    }
    return true;
}

std::optional<ParamKind> parse_kind(const std::string& s) {
    if (s == "integer") return ParamKind::Integer;
    if (s == "float") return ParamKind::Float;
    if (s == "enumerated") return ParamKind::Enumerated;
    return std::nullopt;
}

std::optional<Category> parse_category(const std::string& s) {
    if (s == "narrowband") return Category::Narrowband;
    if (s == "wideband") return Category::Wideband;
    return std::nullopt;
}

std::optional<ExecutionMode> parse_mode(const std::string& s) {
    if (s == "direct_graph") return ExecutionMode::DirectGraph;
    if (s == "composed_base_chain") return ExecutionMode::ComposedBaseChain;
    return std::nullopt;
}

bool is_integral_json(const json& v) { return v.is_number_integer(); }

// Integral doubles (31.0) are accepted for integer parameters; 31.5 is not.
std::optional<std::int64_t> as_integer(const ParamValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* d = std::get_if<double>(&v)) {
        if (std::isfinite(*d) && std::floor(*d) == *d && std::abs(*d) < 9.0e15) return static_cast<std::int64_t>(*d);
    }
    return std::nullopt;
}

std::optional<double> as_float(const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) {
        if (std::isfinite(*d)) return *d;
        return std::nullopt;
    }
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::nullopt;
}

std::string fmt_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

struct Collector {
    ValidationReport report;
    void add(ViolationCode c, std::string path, std::string msg) {
        report.violations.push_back({c, std::move(path), std::move(msg)});
    }
};

// Checks a value against a parameter definition. Returns the normalised
// value, or records exactly one violation.
std::optional<ParamValue> check_value(const ParameterDef& def, const ParamValue& v, const std::string& path,
                                      Collector& out, ViolationCode range_code) {
    switch (def.kind) {
        case ParamKind::Integer: {
            auto i = as_integer(v);
            if (!i) {
                out.add(ViolationCode::BadType, path, def.name + " expects an integer, got " + describe(v));
                return std::nullopt;
            }
            const double x = static_cast<double>(*i);
            if (x < def.min || x > def.max) {
                out.add(range_code, path,
                        def.name + " = " + std::to_string(*i) + " outside [" + fmt_number(def.min) + ", " +
                            fmt_number(def.max) + "]");
                return std::nullopt;
            }
            return ParamValue{*i};
        }
        case ParamKind::Float: {
            auto d = as_float(v);
            if (!d) {
                out.add(ViolationCode::BadType, path, def.name + " expects a finite number, got " + describe(v));
                return std::nullopt;
            }
            if (*d < def.min || *d > def.max) {
                out.add(range_code, path,
                        def.name + " = " + fmt_number(*d) + " outside [" + fmt_number(def.min) + ", " +
                            fmt_number(def.max) + "]" + (def.units.empty() ? "" : " " + def.units));
                return std::nullopt;
            }
            return ParamValue{*d};
        }
        case ParamKind::Enumerated: {
            const auto* s = std::get_if<std::string>(&v);
            if (!s) {
                out.add(ViolationCode::BadType, path, def.name + " expects one of its listed values, got " + describe(v));
                return std::nullopt;
            }
            for (const auto& o : def.options) {
                if (o == *s) return ParamValue{*s};
            }
            out.add(range_code, path, def.name + " = \"" + *s + "\" is not one of the listed values");
            return std::nullopt;
        }
    }
    return std::nullopt;
}

std::optional<ParamValue> json_to_param(const json& v) {
    if (v.is_number_integer()) return ParamValue{v.get<std::int64_t>()};
    if (v.is_number_float()) return ParamValue{v.get<double>()};
    if (v.is_string()) return ParamValue{v.get<std::string>()};
    return std::nullopt;
}

std::optional<ParameterDef> parse_parameter(const json& p, const std::string& base, std::set<std::string>& seen,
                                            Collector& out) {
    if (!p.is_object()) {
        out.add(ViolationCode::BadType, base, "parameter definition must be an object");
        return std::nullopt;
    }
    ParameterDef def;
    bool ok = true;

    if (!p.contains("name")) {
        out.add(ViolationCode::MissingField, base + ".name", "missing parameter name");
        ok = false;
    } else if (!p["name"].is_string() || !is_identifier(p["name"].get<std::string>())) {
        out.add(ViolationCode::BadType, base + ".name", "parameter name must be an identifier string");
        ok = false;
    } else {
        def.name = p["name"].get<std::string>();
        if (!seen.insert(def.name).second) {
            out.add(ViolationCode::DuplicateName, base + ".name", "duplicate parameter name " + def.name);
            ok = false;
        }
    }

    std::optional<ParamKind> kind;
    if (!p.contains("kind")) {
        out.add(ViolationCode::MissingField, base + ".kind", "missing parameter kind");
    } else if (!p["kind"].is_string() || !(kind = parse_kind(p["kind"].get<std::string>()))) {
        out.add(ViolationCode::BadType, base + ".kind", "kind must be integer, float or enumerated");
    }
    if (kind) def.kind = *kind;

    if (!p.contains("units")) {
        out.add(ViolationCode::MissingField, base + ".units", "missing units");
        ok = false;
    } else if (!p["units"].is_string()) {
        out.add(ViolationCode::BadType, base + ".units", "units must be a string");
        ok = false;
    } else {
        def.units = p["units"].get<std::string>();
    }

    // Range and default can only be judged against a known kind.
    bool range_ok = false;
    if (!p.contains("range")) {
        out.add(ViolationCode::MissingField, base + ".range", "missing range");
    } else if (kind) {
        const json& r = p["range"];
        if (*kind == ParamKind::Enumerated) {
            bool strings = r.is_array();
            if (strings) {
                for (const auto& o : r) strings = strings && o.is_string();
            }
            if (!strings) {
                out.add(ViolationCode::BadType, base + ".range", "enumerated range must be a list of strings");
            } else if (r.empty()) {
                out.add(ViolationCode::RangeViolation, base + ".range", "enumerated value list is empty");
            } else {
                std::set<std::string> uniq;
                bool dup = false;
                for (const auto& o : r) {
                    def.options.push_back(o.get<std::string>());
                    dup = dup || !uniq.insert(def.options.back()).second;
                }
                if (dup) {
                    out.add(ViolationCode::DuplicateName, base + ".range", "enumerated values repeat");
                } else {
                    range_ok = true;
                }
            }
        } else {
            const bool integral = *kind == ParamKind::Integer;
            const bool shape = r.is_array() && r.size() == 2 && r[0].is_number() && r[1].is_number() &&
                               (!integral || (is_integral_json(r[0]) && is_integral_json(r[1])));
            if (!shape) {
                out.add(ViolationCode::BadType, base + ".range",
                        integral ? "range must be [min, max] integers" : "range must be [min, max] numbers");
            } else {
                def.min = r[0].get<double>();
                def.max = r[1].get<double>();
                if (!(def.min <= def.max)) {
                    out.add(ViolationCode::RangeViolation, base + ".range", "range minimum exceeds maximum");
                } else {
                    range_ok = true;
                }
            }
        }
    }

    if (!p.contains("default")) {
        out.add(ViolationCode::MissingField, base + ".default", "missing default");
        ok = false;
    } else if (kind) {
        auto v = json_to_param(p["default"]);
        if (!v) {
            out.add(ViolationCode::BadType, base + ".default", "default must be a number or string");
            ok = false;
        } else if (range_ok) {
            auto norm = check_value(def, *v, base + ".default", out, ViolationCode::DefaultOutOfRange);
            if (norm) {
                def.default_value = *norm;
            } else {
                ok = false;
            }
        } else {
            // Type-check only.
            ParameterDef loose = def;
            loose.min = -INFINITY;
            loose.max = INFINITY;
            if (*kind == ParamKind::Enumerated) {
                if (!std::holds_alternative<std::string>(*v)) {
                    out.add(ViolationCode::BadType, base + ".default", "default must be a string");
                }
            } else if (!check_value(loose, *v, base + ".default", out, ViolationCode::DefaultOutOfRange)) {
                // check_value recorded the BadType.
            }
            ok = false;
        }
    }

    if (!ok || !kind || !range_ok) return std::nullopt;
    return def;
}

std::string label_of(const std::string& name) {
    std::string label = name;
    for (auto& c : label) {
        if (c == '_') c = ' ';
    }
    if (!label.empty()) label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
    return label;
}

}  // namespace

std::string_view to_string(ParamKind k) noexcept {
    switch (k) {
        case ParamKind::Integer: return "integer";
        case ParamKind::Float: return "float";
        case ParamKind::Enumerated: return "enumerated";
    }
    return "?";
}

std::string_view to_string(ViolationCode c) noexcept {
    switch (c) {
        case ViolationCode::MissingField: return "MissingField";
        case ViolationCode::BadType: return "BadType";
        case ViolationCode::RangeViolation: return "RangeViolation";
        case ViolationCode::BadCategory: return "BadCategory";
        case ViolationCode::DuplicateName: return "DuplicateName";
        case ViolationCode::DefaultOutOfRange: return "DefaultOutOfRange";
        case ViolationCode::UnknownParameter: return "UnknownParameter";
    }
    return "?";
}

std::string_view to_string(WidgetKind k) noexcept {
    switch (k) {
        case WidgetKind::IntegerInput: return "integer";
        case WidgetKind::FloatInput: return "float";
        case WidgetKind::Dropdown: return "dropdown";
    }
    return "?";
}

std::size_t ValidationReport::count(ViolationCode c) const noexcept {
    std::size_t n = 0;
    for (const auto& v : violations) n += v.code == c ? 1 : 0;
    return n;
}

std::string ValidationReport::summary() const {
    std::string s;
    for (const auto& v : violations) {
        if (!s.empty()) s += "; ";
        s += std::string(to_string(v.code)) + " at " + v.path + ": " + v.message;
    }
    return s;
}

ValidationError::ValidationError(ValidationReport report)
    : Error(ErrorCode::ValidationFailed, report.summary()), report_(std::move(report)) {}

const ParameterDef* WaveformDescriptor::find_parameter(std::string_view name) const noexcept {
    for (const auto& p : parameters) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

Validated<WaveformDescriptor> validate_descriptor(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, std::string("descriptor is not valid JSON: ") + e.what());
    }
    return validate_descriptor(doc);
}

Validated<WaveformDescriptor> validate_descriptor(const json& doc) {
    Collector out;
    WaveformDescriptor d;
    if (!doc.is_object()) {
        out.add(ViolationCode::BadType, "", "descriptor must be a JSON object");
        return {std::nullopt, std::move(out.report)};
    }

    if (!doc.contains("schema_version")) {
        out.add(ViolationCode::MissingField, "schema_version", "missing schema_version");
    } else if (!doc["schema_version"].is_number_integer()) {
        out.add(ViolationCode::BadType, "schema_version", "schema_version must be an integer");
    } else if (doc["schema_version"].get<std::int64_t>() != kDescriptorSchemaVersion) {
        out.add(ViolationCode::RangeViolation, "schema_version",
                "unsupported schema_version, expected " + std::to_string(kDescriptorSchemaVersion));
    }

    if (!doc.contains("waveform_name")) {
        out.add(ViolationCode::MissingField, "waveform_name", "missing waveform_name");
    } else if (!doc["waveform_name"].is_string() || !is_identifier(doc["waveform_name"].get<std::string>())) {
        out.add(ViolationCode::BadType, "waveform_name", "waveform_name must be an identifier string");
    } else {
        d.waveform_name = doc["waveform_name"].get<std::string>();
    }

    if (!doc.contains("category")) {
        out.add(ViolationCode::MissingField, "category", "missing category");
    } else if (!doc["category"].is_string()) {
        out.add(ViolationCode::BadType, "category", "category must be a string");
    } else if (auto c = parse_category(doc["category"].get<std::string>())) {
        d.category = *c;
    } else {
        out.add(ViolationCode::BadCategory, "category",
                "category \"" + doc["category"].get<std::string>() + "\" is not narrowband or wideband");
    }

    if (!doc.contains("execution_mode")) {
        out.add(ViolationCode::MissingField, "execution_mode", "missing execution_mode");
    } else if (!doc["execution_mode"].is_string() || !parse_mode(doc["execution_mode"].get<std::string>())) {
        out.add(ViolationCode::BadType, "execution_mode", "execution_mode must be direct_graph or composed_base_chain");
    } else {
        d.execution_mode = *parse_mode(doc["execution_mode"].get<std::string>());
    }

    if (!doc.contains("parameters")) {
        out.add(ViolationCode::MissingField, "parameters", "missing parameters");
    } else if (!doc["parameters"].is_array()) {
        out.add(ViolationCode::BadType, "parameters", "parameters must be a list");
    } else {
        std::set<std::string> seen;
        const auto& params = doc["parameters"];
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto def = parse_parameter(params[i], "parameters[" + std::to_string(i) + "]", seen, out);
            if (def) d.parameters.push_back(std::move(*def));
        }
    }

    if (!out.report.ok()) return {std::nullopt, std::move(out.report)};
    return {std::move(d), {}};
}

json to_json(const ParamValue& v) {
    return std::visit([](const auto& x) { return json(x); }, v);
}

json to_json(const ParamMap& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[k] = to_json(v);
    return j;
}

ParamMap params_from_json(const json& object, std::vector<std::string>* bad_keys) {
    ParamMap m;
    if (!object.is_object()) return m;
    for (const auto& [k, v] : object.items()) {
        if (auto p = json_to_param(v)) {
            m[k] = *p;
        } else if (bad_keys) {
            bad_keys->push_back(k);
        }
    }
    return m;
}

json to_json(const WaveformDescriptor& d) {
    json params = json::array();
    for (const auto& p : d.parameters) {
        json jp;
        jp["name"] = p.name;
        jp["kind"] = std::string(to_string(p.kind));
        switch (p.kind) {
            case ParamKind::Integer:
                jp["range"] = json::array({static_cast<std::int64_t>(p.min), static_cast<std::int64_t>(p.max)});
                break;
            case ParamKind::Float: jp["range"] = json::array({p.min, p.max}); break;
            case ParamKind::Enumerated: jp["range"] = p.options; break;
        }
        jp["units"] = p.units;
        jp["default"] = to_json(p.default_value);
        params.push_back(std::move(jp));
    }
    json j;
    j["schema_version"] = d.schema_version;
    j["waveform_name"] = d.waveform_name;
    j["category"] = std::string(to_string(d.category));
    j["execution_mode"] = std::string(to_string(d.execution_mode));
    j["parameters"] = std::move(params);
    return j;
}

std::string serialize(const WaveformDescriptor& d) { return to_json(d).dump(2); }

FormSpec form_spec(const WaveformDescriptor& d) {
    FormSpec f;
    f.waveform_name = d.waveform_name;
    for (const auto& p : d.parameters) {
        Widget w;
        w.name = p.name;
        w.label = label_of(p.name);
        w.kind = p.kind == ParamKind::Integer  ? WidgetKind::IntegerInput
                 : p.kind == ParamKind::Float ? WidgetKind::FloatInput
                                              : WidgetKind::Dropdown;
        w.min = p.min;
        w.max = p.max;
        w.options = p.options;
        w.units = p.units;
        w.default_value = p.default_value;
        f.widgets.push_back(std::move(w));
    }
    return f;
}

json to_json(const FormSpec& f) {
    json widgets = json::array();
    for (const auto& w : f.widgets) {
        json jw;
        jw["name"] = w.name;
        jw["label"] = w.label;
        jw["widget"] = std::string(to_string(w.kind));
        if (w.kind == WidgetKind::Dropdown) {
            jw["options"] = w.options;
        } else if (w.kind == WidgetKind::IntegerInput) {
            jw["min"] = static_cast<std::int64_t>(w.min);
            jw["max"] = static_cast<std::int64_t>(w.max);
        } else {
            jw["min"] = w.min;
            jw["max"] = w.max;
        }
        jw["units"] = w.units;
        jw["default"] = to_json(w.default_value);
        widgets.push_back(std::move(jw));
    }
    return json{{"waveform_name", f.waveform_name}, {"widgets", std::move(widgets)}};
}

std::string binding_hint(const json& document) {
    if (document.is_object()) {
        if (auto it = document.find("binding"); it != document.end() && it->is_string()) return it->get<std::string>();
        if (auto it = document.find("waveform_name"); it != document.end() && it->is_string()) {
            return it->get<std::string>();
        }
    }
    return {};
}

Registry::Registry(const Registry& other) {
    std::shared_lock lock(other.mutex_);
    entries_ = other.entries_;
}

Registry& Registry::operator=(const Registry& other) {
    if (this != &other) {
        std::map<std::string, std::shared_ptr<const RegistryEntry>> copy;
        {
            std::shared_lock lock(other.mutex_);
            copy = other.entries_;
        }
        std::unique_lock lock(mutex_);
        entries_ = std::move(copy);
    }
    return *this;
}

Registry Registry::with_builtins() {
    Registry r;
    for (const auto& file : resources::builtin_descriptors()) {
        const json doc = json::parse(file.text);
        auto v = validate_descriptor(doc);
        if (!v.ok()) throw ValidationError(v.report);
        r.register_waveform(*v.value, binding_hint(doc));
        std::unique_lock lock(r.mutex_);
        auto e = std::make_shared<RegistryEntry>(*r.entries_.at(v.value->waveform_name));
        e->builtin = true;
        r.entries_[e->id.value] = std::move(e);
    }
    return r;
}

RegistryId Registry::register_waveform(const WaveformDescriptor& descriptor, const std::string& binding) {
    // Descriptors built in code have not been through the document checks.
    auto v = validate_descriptor(to_json(descriptor));
    if (!v.ok()) throw ValidationError(v.report);

    const Binding* impl = find_binding(binding);
    if (!impl) fail(ErrorCode::CompatibilityError, "no waveform implementation named \"" + binding + "\"");
    if (impl->category != descriptor.category) {
        fail(ErrorCode::CompatibilityError,
             "descriptor declares " + std::string(to_string(descriptor.category)) + " but implementation \"" + binding +
                 "\" runs on the " + std::string(to_string(impl->category)) + " base chain");
    }
    if (!impl->supports(descriptor.execution_mode)) {
        fail(ErrorCode::CompatibilityError, "implementation \"" + binding + "\" does not support execution mode " +
                                                std::string(to_string(descriptor.execution_mode)));
    }

    auto entry = std::make_shared<RegistryEntry>();
    entry->id = RegistryId{descriptor.waveform_name};
    entry->descriptor = *v.value;
    entry->binding = binding;

    std::unique_lock lock(mutex_);
    if (entries_.count(descriptor.waveform_name)) {
        fail(ErrorCode::DuplicateError, "waveform \"" + descriptor.waveform_name + "\" is already registered");
    }
    entries_.emplace(descriptor.waveform_name, std::move(entry));
    return RegistryId{descriptor.waveform_name};
}

std::vector<RegistryEntry> Registry::list() const {
    std::shared_lock lock(mutex_);
    std::vector<RegistryEntry> out;
    out.reserve(entries_.size());
    for (const auto& [_, e] : entries_) out.push_back(*e);
    return out;
}

std::shared_ptr<const RegistryEntry> Registry::entry(const RegistryId& id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id.value);
    if (it == entries_.end()) fail(ErrorCode::UnknownWaveform, "unknown waveform \"" + id.value + "\"");
    return it->second;
}

std::optional<RegistryEntry> Registry::find(const RegistryId& id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id.value);
    if (it == entries_.end()) return std::nullopt;
    return *it->second;
}

bool Registry::contains(const RegistryId& id) const {
    std::shared_lock lock(mutex_);
    return entries_.count(id.value) != 0;
}

Validated<ParamMap> Registry::validate_params(const RegistryId& id, const ParamMap& values) const {
    const auto e = entry(id);
    Collector out;
    ParamMap normalized;
    for (const auto& [name, value] : values) {
        const ParameterDef* def = e->descriptor.find_parameter(name);
        if (!def) {
            out.add(ViolationCode::UnknownParameter, name, "\"" + name + "\" is not a parameter of " + id.value);
            continue;
        }
        if (auto v = check_value(*def, value, name, out, ViolationCode::RangeViolation)) normalized[name] = *v;
    }
    for (const auto& def : e->descriptor.parameters) {
        if (!normalized.count(def.name) && !values.count(def.name)) normalized[def.name] = def.default_value;
    }
    if (!out.report.ok()) return {std::nullopt, std::move(out.report)};
    return {std::move(normalized), {}};
}

Validated<ParamMap> Registry::validate_params(const RegistryId& id, const json& values) const {
    if (!values.is_null() && !values.is_object()) {
        ValidationReport r;
        r.violations.push_back({ViolationCode::BadType, "", "parameters must be a JSON object"});
        return {std::nullopt, std::move(r)};
    }
    std::vector<std::string> bad;
    const ParamMap m = params_from_json(values, &bad);
    auto result = validate_params(id, m);
    for (const auto& k : bad) {
        result.report.violations.push_back({ViolationCode::BadType, k, k + " must be a number or string"});
        result.value.reset();
    }
    return result;
}

FormSpec Registry::form_spec(const RegistryId& id) const { return stormbench::form_spec(entry(id)->descriptor); }

std::unique_ptr<WaveformGenerator> Registry::instantiate(const RegistryId& id, const ParamMap& params,
                                                         double sample_rate, std::uint64_t seed) const {
    const auto e = entry(id);
    const Binding* impl = find_binding(e->binding);
    if (!impl) fail(ErrorCode::CompatibilityError, "binding \"" + e->binding + "\" disappeared");
    GeneratorContext ctx;
    ctx.sample_rate = sample_rate;
    ctx.seed = seed;
    ctx.mode = e->descriptor.execution_mode;
    return impl->factory(params, ctx);
}

}  // namespace stormbench
