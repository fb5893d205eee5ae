#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mecsim/apps.hpp"
#include "mecsim/world.hpp"

namespace mecsim {

// Scenario document: a single JSON file describing cells, hosts and their
// services (with optional background load), UEs, onboarded app descriptors
// and the workload. See README for the full schema.
struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::string mode = "sim";  // "sim" | "realtime"
    double pace = 1.0;
    double duration_s = 10.0;
    double mobility_update_period_s = 0.1;
    std::size_t l2_capacity = 1024;
    SystemConfig system;

    struct Cell {
        int id = 0;
        Position position;
    };
    std::vector<Cell> cells;

    struct Background {
        std::string mode;  // "generator" | "explicit"
        double lambda_f = 0.0;
        double lambda_b = 0.0;
        std::size_t count = 0;
        double each_lambda = 0.0;
    };

    struct Service {
        std::string name;  // "LocationService" | "RNIS"
        double service_time_mean_s = 0.01;
        std::string distribution = "exponential";  // | "constant"
        std::optional<std::size_t> queue_capacity;
        std::optional<Background> background;
    };

    struct Host {
        int id = 0;
        ResourceVector capacity;
        SchedulingMode scheduling = SchedulingMode::segregation;
        double platform_latency_s = 0.0;
        std::vector<double> dummy_loads;
        std::vector<Service> services;
    };
    std::vector<Host> hosts;

    struct Ue {
        std::string id;
        Position position;
        MobilityModel mobility = StationaryMobility{};
        TransportProfile transport;
    };
    std::vector<Ue> ues;

    std::vector<json> descriptors;

    struct DeviceApp {
        std::string ue;
        std::string app;
        double start_s = 0.0;
        std::optional<double> stop_s;
    };
    std::vector<DeviceApp> device_apps;

    struct UeApp {
        std::string type;  // "warningAlertDriver"
        std::string ue;
        std::string app = "WarningAlert";
        double start_s = 0.0;
        Position zone_center;
        double zone_radius = 0.0;
    };
    std::vector<UeApp> ue_apps;

    std::vector<std::string> response_streams{"fg_response_time"};

    static ScenarioConfig from_json(const json& doc);
    static ScenarioConfig load_file(const std::string& path);

    // All violated invariants, empty when the scenario is runnable.
    std::vector<std::string> validate() const;
};

struct RunManifest {
    std::uint64_t seed = 0;
    std::string mode;
    double pace = 1.0;
    double duration_s = 0.0;
    double wall_time_s = 0.0;
    std::uint64_t event_count = 0;
    std::uint64_t overruns = 0;
    double max_lag_s = 0.0;
    std::size_t app_contexts = 0;
    std::vector<std::string> warnings;
    json services = json::array();

    json to_json() const;
};

// A built, runnable scenario.
struct ScenarioRun {
    ScenarioConfig config;
    std::unique_ptr<World> world;
    std::vector<std::unique_ptr<WarningAlertUeDriver>> drivers;
    std::vector<std::string> warnings;
    RunManifest manifest;
};

// Throws SimError(validation_error) listing every violated invariant.
std::unique_ptr<ScenarioRun> build_scenario(const ScenarioConfig& config);

// Drives the engine to the configured duration (simulated or paced
// real-time) and fills the manifest. Wall time covers the event loop only.
void execute_scenario(ScenarioRun& run);

// build + execute + write per-stream CSVs, CDF files and manifest.json.
void run_scenario_to_dir(const ScenarioConfig& config, const std::string& out_dir);

} // namespace mecsim
