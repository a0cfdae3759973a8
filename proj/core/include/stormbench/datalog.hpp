#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stormbench/iq_buffer.hpp"
#include "stormbench/metrics.hpp"

namespace stormbench {

// Sidecar of one I/Q capture. The .iq file holds interleaved float32
// little-endian I/Q pairs, 8 bytes per sample.
struct CaptureDescriptor {
    std::string name;
    std::string file;       // relative to the run directory
    std::string meta_file;  // relative to the run directory
    double sample_rate = 0.0;
    std::int64_t start_timestamp = 0;
    std::uint64_t sample_count = 0;
    bool truncated = false;  // hit the max-capture-bytes cap

    bool operator==(const CaptureDescriptor&) const = default;
};

nlohmann::json to_json(const CaptureDescriptor& c);
CaptureDescriptor capture_from_json(const nlohmann::json& j);

struct ExperimentManifest {
    std::string run_id;
    std::string created;  // ISO 8601 UTC
    nlohmann::json config = nlohmann::json::object();  // registry snapshot, scene, schedule, seeds
    std::vector<nlohmann::json> events;
    std::vector<CaptureDescriptor> captures;
    std::vector<std::string> metrics_files;
    bool sealed = false;

    bool operator==(const ExperimentManifest&) const = default;
};

nlohmann::json to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const nlohmann::json& j);
// Canonical text form; serialize(parse(serialize(m))) == serialize(m).
std::string serialize(const ExperimentManifest& m);
ExperimentManifest parse_manifest(const std::string& text);

struct DatalogOptions {
    std::filesystem::path root = "runs";
    std::uint64_t max_capture_bytes = 1ull << 30;  // per capture file
    std::function<std::chrono::system_clock::time_point()> clock = [] { return std::chrono::system_clock::now(); };
};

// Run directory chosen by STORMBENCH_RUN_DIR when set, else `fallback`.
std::filesystem::path resolve_run_root(const std::filesystem::path& fallback);

class RunHandle;

// Streams one capture to disk. Obtained from RunHandle::begin_capture.
class CaptureWriter {
public:
    ~CaptureWriter();
    CaptureWriter(const CaptureWriter&) = delete;
    CaptureWriter& operator=(const CaptureWriter&) = delete;

    // Appends samples; beyond the byte cap the capture is truncated. A
    // failed write is logged to the run's events and rethrown as IoError.
    void write(std::span<const Sample> samples);
    void write(const IqBuffer& buffer) { write(buffer.samples()); }
    // Writes the sidecar and registers the capture with the run.
    CaptureDescriptor finish();

private:
    friend class RunHandle;
    CaptureWriter(RunHandle& run, CaptureDescriptor desc, std::uint64_t max_bytes);

    RunHandle* run_;
    CaptureDescriptor desc_;
    std::uint64_t max_bytes_;
    std::ofstream out_;
    bool finished_ = false;
};

// One experiment run. Single owner; events are appended to events.jsonl as
// they arrive, so a crashed run still leaves its log.
class RunHandle {
public:
    RunHandle(const RunHandle&) = delete;
    RunHandle& operator=(const RunHandle&) = delete;

    const std::string& run_id() const noexcept { return manifest_.run_id; }
    const std::filesystem::path& directory() const noexcept { return dir_; }
    bool closed() const noexcept { return manifest_.sealed; }
    const ExperimentManifest& manifest() const noexcept { return manifest_; }

    // Adds "seq" to the event. Events carrying "sample_index" must not go
    // back in stream time (RangeError). IllegalState once closed.
    void append_event(nlohmann::json event);
    void append_metrics(const MetricsRecord& record);

    std::unique_ptr<CaptureWriter> begin_capture(const std::string& name, double sample_rate,
                                                 std::int64_t start_timestamp);
    CaptureDescriptor capture_iq(const std::string& name, const IqBuffer& buffer);

    // Writes the artifact index, seals the manifest and returns it.
    ExperimentManifest close();

private:
    friend class CaptureWriter;
    friend std::unique_ptr<RunHandle> open_run(const DatalogOptions& options, const nlohmann::json& config,
                                               std::string run_id);
    RunHandle() = default;
    void require_open() const;
    void write_manifest() const;

    DatalogOptions options_;
    std::filesystem::path dir_;
    ExperimentManifest manifest_;
    std::ofstream events_;
    std::ofstream metrics_;
    std::optional<std::int64_t> last_sample_index_;
};

// Creates runs/<run_id>/ and an unsealed manifest. An empty run_id picks a
// time-based unique one. Throws IoError when the directory exists or cannot
// be created.
std::unique_ptr<RunHandle> open_run(const DatalogOptions& options, const nlohmann::json& config,
                                    std::string run_id = "");

// Reads a run directory. For an unsealed run the events come from
// events.jsonl.
ExperimentManifest load_run(const std::filesystem::path& run_dir);
std::vector<MetricsRecord> load_metrics(const std::filesystem::path& run_dir);
std::vector<std::string> list_runs(const std::filesystem::path& root);

std::vector<Sample> read_capture(const std::filesystem::path& iq_file);
CaptureDescriptor read_capture_meta(const std::filesystem::path& meta_file);

}  // namespace stormbench
