#include "stormbench/datalog.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "stormbench/error.hpp"

namespace stormbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count() % 1000;
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
    return os.str();
}

std::string compact_stamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y%m%dT%H%M%S");
    return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json parse_json(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, where + ": " + e.what());
    }
}

bool valid_run_id(const std::string& id) {
    if (id.empty() || id == "." || id == "..") return false;
    for (char c : id) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
    }
    return true;
}

}  // namespace

json to_json(const CaptureDescriptor& c) {
    return json{{"name", c.name},
                {"file", c.file},
                {"meta_file", c.meta_file},
                {"sample_rate", c.sample_rate},
                {"start_timestamp", c.start_timestamp},
                {"sample_count", c.sample_count},
                {"format", "cf32_le"},
                {"truncated", c.truncated}};
}

CaptureDescriptor capture_from_json(const json& j) {
    CaptureDescriptor c;
    c.name = j.at("name").get<std::string>();
    c.file = j.at("file").get<std::string>();
    c.meta_file = j.value("meta_file", std::string());
    c.sample_rate = j.at("sample_rate").get<double>();
    c.start_timestamp = j.at("start_timestamp").get<std::int64_t>();
    c.sample_count = j.at("sample_count").get<std::uint64_t>();
    c.truncated = j.value("truncated", false);
    return c;
}

json to_json(const ExperimentManifest& m) {
    json captures = json::array();
    for (const auto& c : m.captures) captures.push_back(to_json(c));
    return json{{"run_id", m.run_id},
                {"created", m.created},
                {"config", m.config},
                {"events", m.events},
                {"artifacts", {{"captures", std::move(captures)}, {"metrics", m.metrics_files}}},
                {"sealed", m.sealed}};
}

ExperimentManifest manifest_from_json(const json& j) {
    ExperimentManifest m;
    try {
        m.run_id = j.at("run_id").get<std::string>();
        m.created = j.at("created").get<std::string>();
        m.config = j.value("config", json::object());
        m.events = j.value("events", std::vector<json>{});
        const json artifacts = j.value("artifacts", json::object());
        for (const auto& c : artifacts.value("captures", json::array())) m.captures.push_back(capture_from_json(c));
        m.metrics_files = artifacts.value("metrics", std::vector<std::string>{});
        m.sealed = j.value("sealed", false);
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, std::string("bad manifest: ") + e.what());
    }
    return m;
}

std::string serialize(const ExperimentManifest& m) { return to_json(m).dump(2) + "\n"; }

ExperimentManifest parse_manifest(const std::string& text) { return manifest_from_json(parse_json(text, "manifest")); }

fs::path resolve_run_root(const fs::path& fallback) {
    if (const char* env = std::getenv("STORMBENCH_RUN_DIR"); env && *env) return fs::path(env);
    return fallback;
}

CaptureWriter::CaptureWriter(RunHandle& run, CaptureDescriptor desc, std::uint64_t max_bytes)
    : run_(&run), desc_(std::move(desc)), max_bytes_(max_bytes) {
    out_.open(run_->dir_ / desc_.file, std::ios::binary | std::ios::trunc);
    if (!out_) {
        run_->append_event(json{{"type", "error"}, {"detail", {{"message", "cannot create capture " + desc_.file}}}});
        fail(ErrorCode::IoError, "cannot create capture " + desc_.file);
    }
}

CaptureWriter::~CaptureWriter() = default;

void CaptureWriter::write(std::span<const Sample> samples) {
    if (finished_) fail(ErrorCode::IllegalState, "capture already finished");
    const std::uint64_t room = (max_bytes_ - std::min(max_bytes_, desc_.sample_count * 8)) / 8;
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(room, samples.size()));
    if (n < samples.size()) desc_.truncated = true;
    std::vector<char> raw(n * 8);
    for (std::size_t i = 0; i < n; ++i) {
        const float iq[2] = {static_cast<float>(samples[i].real()), static_cast<float>(samples[i].imag())};
        // Little-endian host assumed (x86-64, aarch64).
        std::memcpy(raw.data() + i * 8, iq, 8);
    }
    out_.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out_) {
        run_->append_event(json{{"type", "error"}, {"detail", {{"message", "write failed for capture " + desc_.file}}}});
        fail(ErrorCode::IoError, "write failed for capture " + desc_.file);
    }
    desc_.sample_count += n;
}

CaptureDescriptor CaptureWriter::finish() {
    if (finished_) return desc_;
    out_.flush();
    out_.close();
    finished_ = true;
    write_text(run_->dir_ / desc_.meta_file, to_json(desc_).dump(2) + "\n");
    run_->manifest_.captures.push_back(desc_);
    return desc_;
}

void RunHandle::require_open() const {
    if (manifest_.sealed) fail(ErrorCode::IllegalState, "run " + manifest_.run_id + " is closed");
}

void RunHandle::write_manifest() const { write_text(dir_ / "manifest.json", serialize(manifest_)); }

void RunHandle::append_event(json event) {
    require_open();
    if (!event.is_object()) fail(ErrorCode::ConfigError, "event must be a JSON object");
    if (event.contains("sample_index") && event["sample_index"].is_number_integer()) {
        const auto idx = event["sample_index"].get<std::int64_t>();
        if (last_sample_index_ && idx < *last_sample_index_) {
            fail(ErrorCode::RangeError, "event goes back in stream time");
        }
        last_sample_index_ = idx;
    }
    event["seq"] = manifest_.events.size();
    events_ << event.dump() << '\n';
    events_.flush();
    manifest_.events.push_back(std::move(event));
}

void RunHandle::append_metrics(const MetricsRecord& record) {
    require_open();
    if (!metrics_.is_open()) {
        metrics_.open(dir_ / "metrics.jsonl", std::ios::binary | std::ios::app);
        manifest_.metrics_files.push_back("metrics.jsonl");
    }
    metrics_ << to_json(record).dump() << '\n';
    metrics_.flush();
    if (!metrics_) fail(ErrorCode::IoError, "cannot append to metrics.jsonl");
}

std::unique_ptr<CaptureWriter> RunHandle::begin_capture(const std::string& name, double sample_rate,
                                                        std::int64_t start_timestamp) {
    require_open();
    if (!valid_run_id(name)) fail(ErrorCode::ConfigError, "capture names use letters, digits, '-', '_' and '.'");
    if (!(sample_rate > 0)) fail(ErrorCode::ConfigError, "capture sample_rate must be positive");
    for (const auto& c : manifest_.captures) {
        if (c.name == name) fail(ErrorCode::DuplicateError, "capture " + name + " already exists");
    }
    CaptureDescriptor d;
    d.name = name;
    d.file = "captures/" + name + ".iq";
    d.meta_file = "captures/" + name + ".meta.json";
    d.sample_rate = sample_rate;
    d.start_timestamp = start_timestamp;
    return std::unique_ptr<CaptureWriter>(new CaptureWriter(*this, std::move(d), options_.max_capture_bytes));
}

CaptureDescriptor RunHandle::capture_iq(const std::string& name, const IqBuffer& buffer) {
    auto w = begin_capture(name, buffer.sample_rate(), buffer.start_timestamp());
    w->write(buffer);
    return w->finish();
}

ExperimentManifest RunHandle::close() {
    require_open();
    for (const auto& c : manifest_.captures) {
        if (!fs::exists(dir_ / c.file) || !fs::exists(dir_ / c.meta_file)) {
            fail(ErrorCode::IoError, "capture " + c.file + " is missing at close");
        }
    }
    if (!manifest_.metrics_files.empty() && !fs::exists(dir_ / "metrics.jsonl")) {
        fail(ErrorCode::IoError, "metrics.jsonl is missing at close");
    }
    events_.close();
    metrics_.close();
    manifest_.sealed = true;
    write_manifest();
    return manifest_;
}

std::unique_ptr<RunHandle> open_run(const DatalogOptions& options, const json& config, std::string run_id) {
    static std::atomic<std::uint64_t> counter{0};
    const auto now = options.clock();
    if (run_id.empty()) {
        run_id = "run-" + compact_stamp(now) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
    }
    if (!valid_run_id(run_id)) fail(ErrorCode::ConfigError, "run ids use letters, digits, '-', '_' and '.'");

    std::unique_ptr<RunHandle> h(new RunHandle());
    h->options_ = options;
    h->dir_ = options.root / run_id;
    std::error_code ec;
    fs::create_directories(options.root, ec);
    if (!fs::create_directory(h->dir_, ec)) {
        fail(ErrorCode::IoError, "cannot create run directory " + h->dir_.string() +
                                     (ec ? ": " + ec.message() : std::string(" (already exists)")));
    }
    fs::create_directory(h->dir_ / "captures", ec);
    h->manifest_.run_id = run_id;
    h->manifest_.created = iso8601(now);
    h->manifest_.config = config;
    h->events_.open(h->dir_ / "events.jsonl", std::ios::binary | std::ios::trunc);
    if (!h->events_) fail(ErrorCode::IoError, "cannot create events.jsonl in " + h->dir_.string());
    h->write_manifest();
    return h;
}

ExperimentManifest load_run(const fs::path& dir) {
    auto m = parse_manifest(read_text(dir / "manifest.json"));
    if (!m.sealed) {
        m.events.clear();
        std::ifstream in(dir / "events.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) m.events.push_back(parse_json(line, "events.jsonl"));
        }
    }
    return m;
}

std::vector<MetricsRecord> load_metrics(const fs::path& dir) {
    std::vector<MetricsRecord> out;
    std::ifstream in(dir / "metrics.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(metrics_record_from_json(parse_json(line, "metrics.jsonl")));
    }
    return out;
}

std::vector<std::string> list_runs(const fs::path& root) {
    std::vector<std::string> ids;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(root, ec)) {
        if (e.is_directory() && fs::exists(e.path() / "manifest.json")) ids.push_back(e.path().filename().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<Sample> read_capture(const fs::path& iq_file) {
    const std::string raw = read_text(iq_file);
    if (raw.size() % 8 != 0) fail(ErrorCode::IoError, iq_file.string() + " is not a whole number of samples");
    std::vector<Sample> out(raw.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        float iq[2];
        std::memcpy(iq, raw.data() + i * 8, 8);
        out[i] = Sample(iq[0], iq[1]);
    }
    return out;
}

CaptureDescriptor read_capture_meta(const fs::path& meta_file) {
    try {
        return capture_from_json(parse_json(read_text(meta_file), meta_file.string()));
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, meta_file.string() + ": " + e.what());
    }
}

}  // namespace stormbench
