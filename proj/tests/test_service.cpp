#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "httplib.h"
#include "stormbench/resources.hpp"
#include "stormbench/service.hpp"
#include "support.hpp"

using namespace stormbench;
using nlohmann::json;

namespace {

struct Reply {
    int status = 0;
    json body;
};

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override { launch(false); }
    void TearDown() override { service.reset(); }

    void launch(bool with_scene) {
        service.reset();
        ServiceConfig c;
        c.port = 0;
        c.run_dir = dir.path();
        c.simulation.sample_rate = 1e6;
        c.monitor.frame_rate = 10;
        c.loop.realtime = true;
        c.loop.speed = 1.0;
        c.power_interval = 0.05;
        if (with_scene) c.scene = load_scene("scenario1");
        service = std::make_unique<ControlService>(c);
        service->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", service->port());
        client->set_read_timeout(10, 0);
    }

    Reply get(const std::string& path) {
        auto r = client->Get(path);
        EXPECT_TRUE(r) << path;
        if (!r) return {};
        return {r->status, json::parse(r->body)};
    }

    Reply post(const std::string& path, const json& body = json::object()) {
        auto r = client->Post(path, body.dump(), "application/json");
        EXPECT_TRUE(r) << path;
        if (!r) return {};
        return {r->status, json::parse(r->body)};
    }

    void assign_defaults() {
        ASSERT_EQ(post("/v1/devices/usrp-n210-0/role", {{"role", "transmitter"}}).status, 200);
        ASSERT_EQ(post("/v1/devices/usrp-b210-0/role", {{"role", "monitor"}}).status, 200);
    }

    // Reads the SSE stream until `limit` messages arrive; returns them parsed.
    std::vector<json> stream(const std::string& query, int* status = nullptr) {
        std::string text;
        httplib::Client c("127.0.0.1", service->port());
        c.set_read_timeout(20, 0);
        auto r = c.Get("/v1/stream?" + query, [&](const char* data, std::size_t n) {
            text.append(data, n);
            return true;
        });
        if (status) *status = r ? r->status : 0;
        std::vector<json> out;
        std::size_t pos = 0;
        while ((pos = text.find("data: ", pos)) != std::string::npos) {
            const auto end = text.find('\n', pos);
            out.push_back(json::parse(text.substr(pos + 6, end - pos - 6)));
            pos = end;
        }
        return out;
    }

    oracle::TempDir dir{"service"};
    std::unique_ptr<ControlService> service;
    std::unique_ptr<httplib::Client> client;
};

json am_copy(const std::string& name) {
    for (const auto& f : resources::builtin_descriptors()) {
        if (f.name == "am") {
            auto j = json::parse(f.text);
            j["waveform_name"] = name;
            j["binding"] = "am";
            return j;
        }
    }
    return {};
}

}  // namespace

TEST_F(ServiceTest, ListsDevices) {
    const auto r = get("/v1/devices");
    EXPECT_EQ(r.status, 200);
    ASSERT_EQ(r.body["devices"].size(), 2u);
    EXPECT_EQ(r.body["devices"][0]["id"], "usrp-n210-0");
    EXPECT_EQ(r.body["devices"][1]["id"], "usrp-b210-0");
}

TEST_F(ServiceTest, RoleAssignmentErrors) {
    EXPECT_EQ(post("/v1/devices/nope/role", {{"role", "monitor"}}).status, 404);
    EXPECT_EQ(post("/v1/devices/usrp-n210-0/role", json::object()).status, 400);
    EXPECT_EQ(post("/v1/devices/usrp-n210-0/role", {{"role", "transmitter"}}).status, 200);
    const auto clash = post("/v1/devices/usrp-b210-0/role", {{"role", "transmitter"}});
    EXPECT_EQ(clash.status, 409);
    EXPECT_EQ(clash.body["error"], "RoleConflict");
    auto r = client->Post("/v1/devices/usrp-b210-0/role", "{not json", "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400);
}

TEST_F(ServiceTest, WaveformCatalogAndForms) {
    const auto list = get("/v1/waveforms");
    EXPECT_EQ(list.status, 200);
    EXPECT_GE(list.body["waveforms"].size(), 8u);
    const auto form = get("/v1/waveforms/baseline/form");
    EXPECT_EQ(form.status, 200);
    EXPECT_FALSE(form.body.empty());
    EXPECT_EQ(get("/v1/waveforms/nope/form").status, 404);
}

TEST_F(ServiceTest, RegisterWaveform) {
    const auto ok = post("/v1/waveforms", am_copy("am-lab"));
    EXPECT_EQ(ok.status, 201);
    EXPECT_EQ(ok.body["id"], "am-lab");
    EXPECT_EQ(post("/v1/waveforms", am_copy("am-lab")).status, 409);

    auto bad = am_copy("am-bad");
    bad["category"] = "mystery";
    const auto rejected = post("/v1/waveforms", bad);
    EXPECT_EQ(rejected.status, 422);
    EXPECT_EQ(rejected.body["error"], "ValidationFailed");
    EXPECT_TRUE(rejected.body.contains("report"));

    auto unbound = am_copy("am-unbound");
    unbound["binding"] = "no-such-generator";
    EXPECT_EQ(post("/v1/waveforms", unbound).status, 409);

    bool listed = false;
    const auto after = get("/v1/waveforms");
    for (const auto& w : after.body["waveforms"]) listed |= w.dump().find("am-lab") != std::string::npos;
    EXPECT_TRUE(listed);
}

TEST_F(ServiceTest, SessionLifecycle) {
    EXPECT_EQ(post("/v1/session/start", {{"waveform", "baseline"}}).status, 409);  // no transmitter
    assign_defaults();
    EXPECT_EQ(post("/v1/session/pause").status, 409);
    EXPECT_EQ(post("/v1/session/start", {{"waveform", "nope"}}).status, 404);
    EXPECT_EQ(post("/v1/session/start", {{"waveform", "baseline"}, {"params", {{"gain", 26}}}}).status, 422);
    const auto started = post("/v1/session/start", {{"waveform", "baseline"}, {"params", {{"gain", 15}}}});
    EXPECT_EQ(started.status, 200);
    EXPECT_EQ(started.body["state"], "Running");
    EXPECT_EQ(post("/v1/devices/usrp-b210-0/role", {{"role", "unassigned"}}).status, 409);

    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    const auto sw = post("/v1/session/switch", {{"waveform", "ofdm"}});
    EXPECT_EQ(sw.status, 200);
    EXPECT_EQ(sw.body["switch"]["to"], "ofdm");
    EXPECT_EQ(sw.body["switch"]["next_start"].get<std::int64_t>(), sw.body["switch"]["previous_end"].get<std::int64_t>() + 1);

    EXPECT_EQ(post("/v1/session/pause").body["state"], "Paused");
    EXPECT_EQ(post("/v1/session/switch", {{"waveform", "baseline"}}).status, 409);
    EXPECT_EQ(post("/v1/session/resume").body["state"], "Running");
    EXPECT_EQ(post("/v1/session/stop").body["state"], "Stopped");
    EXPECT_EQ(post("/v1/session/stop").status, 409);
}

TEST_F(ServiceTest, ScheduleRunsToCompletion) {
    assign_defaults();
    const json plan{{"entries", json::array({{{"waveform", "baseline"}, {"on_duration", 0.2}, {"off_duration", 0.1}, {"repeat", 2}}})}};
    const auto r = post("/v1/schedule", plan);
    ASSERT_EQ(r.status, 200);
    EXPECT_NEAR(r.body["duration"].get<double>(), 0.6, 1e-12);
    EXPECT_EQ(post("/v1/schedule", plan).status, 409);
    EXPECT_EQ(post("/v1/session/switch", {{"waveform", "ofdm"}}).status, 409);
    EXPECT_EQ(post("/v1/schedule", {{"entries", json::array({{{"on_duration", 1}}})}}).status, 400);

    // Completion stops the session, after which a new start is accepted.
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    int status = 409;
    while (status != 200 && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        status = post("/v1/session/start", {{"waveform", "baseline"}}).status;
    }
    EXPECT_EQ(status, 200);
}

TEST_F(ServiceTest, PowerStatus) {
    const auto r = get("/v1/power");
    EXPECT_EQ(r.status, 200);
    EXPECT_NEAR(r.body["estimated_runtime"].get<double>(), 7200.0, 1.0);
    EXPECT_EQ(r.body["battery_fraction"], 1.0);
}

TEST_F(ServiceTest, ExhaustedBatteryStopsTheSession) {
    assign_defaults();
    ASSERT_EQ(post("/v1/session/start", {{"waveform", "baseline"}}).status, 200);
    service->power().set_fraction(0.0);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    int status = 200;
    while (status != 409 && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        status = post("/v1/session/pause").status;
    }
    EXPECT_EQ(status, 409);
    const auto run = get("/v1/runs/" + service->run_id());
    bool exhausted = false;
    for (const auto& e : run.body["events"]) exhausted |= e["type"] == "power_exhausted";
    EXPECT_TRUE(exhausted);
}

TEST_F(ServiceTest, RunsAreListedAndLogged) {
    assign_defaults();
    const auto runs = get("/v1/runs");
    EXPECT_EQ(runs.status, 200);
    EXPECT_EQ(runs.body["current"], service->run_id());
    EXPECT_EQ(runs.body["runs"].size(), 1u);
    EXPECT_EQ(get("/v1/runs/missing").status, 404);
    EXPECT_EQ(get("/v1/runs/..").status, 404);

    const auto run = get("/v1/runs/" + service->run_id());
    ASSERT_EQ(run.status, 200);
    std::size_t api = 0;
    for (const auto& e : run.body["events"]) api += e["type"] == "api";
    EXPECT_EQ(api, 2u);

    // Stopping seals the run; stopping again is harmless.
    const auto id = service->run_id();
    service->stop();
    service->stop();
    EXPECT_TRUE(load_run(dir.path() / id).sealed);
}

TEST_F(ServiceTest, StreamNeedsAMonitor) {
    int status = 0;
    stream("limit=1", &status);
    EXPECT_EQ(status, 409);
    stream("rate=abc", &status);
    EXPECT_EQ(status, 400);
}

TEST_F(ServiceTest, StreamCarriesSnapshotSpectrumAndEvents) {
    assign_defaults();
    ASSERT_EQ(post("/v1/session/start", {{"waveform", "ofdm"}}).status, 200);
    const auto msgs = stream("rate=5&limit=8");
    ASSERT_EQ(msgs.size(), 8u);
    EXPECT_EQ(msgs[0]["type"], "hello");
    EXPECT_EQ(msgs[0]["data"]["state"], "Running");
    EXPECT_EQ(msgs[0]["data"]["active_waveform"], "ofdm");
    std::size_t spectra = 0, power = 0;
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        EXPECT_EQ(msgs[i]["seq"], i);
        if (msgs[i]["type"] == "spectrum") {
            ++spectra;
            EXPECT_TRUE(msgs[i]["data"].contains("bins_b64"));
            EXPECT_EQ(msgs[i]["data"]["n_bins"], 1024);
        }
        if (msgs[i]["type"] == "power") ++power;
    }
    EXPECT_GE(spectra, 1u);
    EXPECT_GE(power, 1u);
}

TEST(ServiceScene, LiveLinkPublishesMetrics) {
    oracle::TempDir dir("service-scene");
    ServiceConfig c;
    c.port = 0;
    c.run_dir = dir.path();
    c.scene = load_scene("scenario1");
    c.loop.speed = 1.0;
    ControlService svc(c);
    svc.start();
    httplib::Client client("127.0.0.1", svc.port());
    client.Post("/v1/devices/usrp-n210-0/role", R"({"role":"transmitter"})", "application/json");
    client.Post("/v1/devices/usrp-b210-0/role", R"({"role":"monitor"})", "application/json");
    client.Post("/v1/session/start", R"({"waveform":"ofdm","params":{"gain":20}})", "application/json");
    std::this_thread::sleep_for(std::chrono::milliseconds(2600));
    const auto id = svc.run_id();
    svc.stop();
    const auto recs = load_metrics(dir.path() / id);
    ASSERT_GE(recs.size(), 1u);
    EXPECT_TRUE(recs.front().interference_on);
    EXPECT_EQ(recs.front().context["live"], true);
}

TEST(ServiceConfigFile, ParsesShippedConfig) {
    const auto c = load_service_config(std::filesystem::path(STORMBENCH_SOURCE_DIR) / "config" / "service.json");
    EXPECT_EQ(c.port, 8080);
    ASSERT_TRUE(c.scene.has_value());
    EXPECT_EQ(c.scene->label, "scenario1");
    EXPECT_EQ(c.monitor.frame_rate, 10.0);
    EXPECT_THROW(service_config_from_json(json{{"port", 70000}}), Error);
    EXPECT_THROW(service_config_from_json(json::array()), Error);
}
