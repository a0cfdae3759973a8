#pragma once

#include <string_view>
#include <vector>

namespace stormbench::resources {

struct EmbeddedFile {
    std::string_view name;  // file stem
    std::string_view text;
};

// Contents of waveforms/*.json and scenes/*.json at build time.
const std::vector<EmbeddedFile>& builtin_descriptors();
const std::vector<EmbeddedFile>& scene_presets();

}  // namespace stormbench::resources
