#pragma once

#include <functional>
#include <map>

#include "mecsim/mathstat.hpp"
#include "mecsim/scenario.hpp"

namespace mecsim {

// Background-load validation: foreground probes hit a Location Service
// loaded either by explicit request generators or by the analytic
// background model; the two must produce overlapping foreground
// response-time CDFs while the generator's cost stays flat in the
// background count.
struct BgValidationOptions {
    std::vector<std::size_t> counts{10, 50, 100, 200, 300};
    int repetitions = 15;
    std::uint64_t base_seed = 1;
    double duration_s = 180.0;
    double each_lambda = 0.024;  // per background app, 1/s
    int fg_apps = 3;
    double fg_period_s = 0.5;
    double service_mean_s = 0.05;  // mu = 20/s, stable up to 300 apps
};

struct BgValidationCount {
    std::size_t count = 0;
    double ks = 0.0;
    double generator_wall_mean_s = 0.0;
    double generator_wall_ci95_s = 0.0;
    double generator_wall_median_s = 0.0;
    double explicit_wall_mean_s = 0.0;
    double explicit_wall_ci95_s = 0.0;
    double explicit_wall_median_s = 0.0;
    std::vector<double> generator_responses;  // pooled over repetitions
    std::vector<double> explicit_responses;
};

// Shape gates are computed on per-count medians: a single scheduler
// preemption would otherwise dominate runs this short. Means with 95%
// intervals are reported alongside.
struct BgValidationReport {
    BgValidationOptions options;
    std::vector<BgValidationCount> per_count;
    double generator_wall_spread = 0.0;  // (max - min) / min over per-count medians
    bool explicit_wall_monotone = false;
    double wall_ratio_at_max_count = 0.0;

    json to_json() const;
};

ScenarioConfig bg_validation_scenario(std::size_t count, bool generator,
                                      const BgValidationOptions& opt, std::uint64_t seed);

BgValidationReport run_bg_validation(const BgValidationOptions& opt,
                                     std::function<void(const std::string&)> log = {});

void write_bg_validation_outputs(const BgValidationReport& report, const std::string& dir);

// Danger-zone use case: the ordered ten-step message sequence of the
// warning-alert app, asserted per vehicle.
struct DangerZoneReport {
    std::vector<std::string> expected_steps;
    std::map<std::string, std::vector<std::string>> observed;  // per UE
    bool sequence_ok = false;
    std::string violation;
    json timeline = json::array();

    json to_json() const;
};

ScenarioConfig danger_zone_scenario();
const std::vector<std::string>& danger_zone_expected_steps();
DangerZoneReport run_danger_zone(const ScenarioConfig& config);

} // namespace mecsim
