#include "stormbench/devices.hpp"

#include <fstream>
#include <set>

#include "stormbench/error.hpp"

namespace stormbench {

using nlohmann::json;

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::Unassigned: return "unassigned";
        case Role::Transmitter: return "transmitter";
        case Role::Monitor: return "monitor";
    }
    return "?";
}

Role parse_role(std::string_view name) {
    if (name == "unassigned") return Role::Unassigned;
    if (name == "transmitter") return Role::Transmitter;
    if (name == "monitor") return Role::Monitor;
    fail(ErrorCode::ConfigError, "unknown role \"" + std::string(name) + "\"");
}

namespace {

template <class T>
T field_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::ConfigError, std::string("bad value for ") + key);
    }
}

}  // namespace

SimulationConfig parse_simulation_config(const json& doc) {
    if (!doc.is_object()) fail(ErrorCode::ConfigError, "simulation config must be a JSON object");
    SimulationConfig cfg;
    cfg.sample_rate = field_or(doc, "sample_rate", cfg.sample_rate);
    cfg.buffer_size = field_or(doc, "buffer_size", cfg.buffer_size);
    cfg.seed = field_or(doc, "seed", cfg.seed);
    if (!(cfg.sample_rate > 0)) fail(ErrorCode::ConfigError, "sample_rate must be positive");
    if (cfg.buffer_size == 0) fail(ErrorCode::ConfigError, "buffer_size must be positive");

    std::set<std::string> ids;
    for (const auto& d : field_or(doc, "devices", json::array())) {
        VirtualDevice dev;
        dev.device_id = field_or<std::string>(d, "id", "");
        if (dev.device_id.empty()) fail(ErrorCode::ConfigError, "device without an id");
        if (!ids.insert(dev.device_id).second) fail(ErrorCode::ConfigError, "duplicate device id " + dev.device_id);
        dev.model = field_or<std::string>(d, "model", "");
        auto& caps = dev.capabilities;
        caps.min_frequency = field_or(d, "min_frequency", caps.min_frequency);
        caps.max_frequency = field_or(d, "max_frequency", caps.max_frequency);
        caps.max_sample_rate = field_or(d, "max_sample_rate", caps.max_sample_rate);
        caps.interface = field_or<std::string>(d, "interface", "");
        if (!(caps.min_frequency > 0 && caps.min_frequency <= caps.max_frequency)) {
            fail(ErrorCode::ConfigError, "device " + dev.device_id + " has an invalid frequency range");
        }
        if (!(caps.max_sample_rate > 0)) {
            fail(ErrorCode::ConfigError, "device " + dev.device_id + " has a non-positive max_sample_rate");
        }
        cfg.devices.push_back(std::move(dev));
    }
    return cfg;
}

SimulationConfig load_simulation_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, path + ": " + e.what());
    }
    return parse_simulation_config(doc);
}

json to_json(const VirtualDevice& d) {
    return json{{"id", d.device_id},
                {"model", d.model},
                {"interface", d.capabilities.interface},
                {"min_frequency", d.capabilities.min_frequency},
                {"max_frequency", d.capabilities.max_frequency},
                {"max_sample_rate", d.capabilities.max_sample_rate},
                {"role", std::string(to_string(d.role))}};
}

json to_json(const SimulationConfig& c) {
    json devices = json::array();
    for (const auto& d : c.devices) {
        json j = to_json(d);
        j.erase("role");
        devices.push_back(std::move(j));
    }
    return json{{"sample_rate", c.sample_rate},
                {"buffer_size", c.buffer_size},
                {"seed", c.seed},
                {"devices", std::move(devices)}};
}

SimulationConfig default_simulation_config() {
    SimulationConfig c;
    c.devices.push_back({"usrp-n210-0", "N210", {70e6, 6e9, 25e6, "ethernet"}, Role::Unassigned});
    c.devices.push_back({"usrp-b210-0", "B210", {70e6, 6e9, 56e6, "usb"}, Role::Unassigned});
    return c;
}

}  // namespace stormbench
