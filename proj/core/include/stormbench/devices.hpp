#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace stormbench {

enum class Role { Unassigned, Transmitter, Monitor };

std::string_view to_string(Role r) noexcept;
// Throws ConfigError for anything but "unassigned", "transmitter", "monitor".
Role parse_role(std::string_view name);

struct DeviceCapabilities {
    double min_frequency = 70e6;  // Hz
    double max_frequency = 6e9;
    double max_sample_rate = 56e6;
    std::string interface;  // "ethernet", "usb"

    bool operator==(const DeviceCapabilities&) const = default;
};

struct VirtualDevice {
    std::string device_id;
    std::string model;
    DeviceCapabilities capabilities;
    Role role = Role::Unassigned;

    bool operator==(const VirtualDevice&) const = default;
};

// Contents of the simulation config file.
struct SimulationConfig {
    std::vector<VirtualDevice> devices;
    double sample_rate = 1e6;
    std::size_t buffer_size = 4096;  // samples per emitted buffer
    std::uint64_t seed = 1;
};

// Throws ConfigError on a malformed document (missing ids, duplicate ids,
// inverted frequency range, non-positive rates).
SimulationConfig parse_simulation_config(const nlohmann::json& document);
SimulationConfig load_simulation_config(const std::string& path);
nlohmann::json to_json(const SimulationConfig& config);

nlohmann::json to_json(const VirtualDevice& device);

// Two-device bench: an Ethernet-attached N210-class radio and a USB-attached
// B210-class radio.
SimulationConfig default_simulation_config();

}  // namespace stormbench
