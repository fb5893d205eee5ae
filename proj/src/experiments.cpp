#include "mecsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace mecsim {

ScenarioConfig bg_validation_scenario(std::size_t count, bool generator,
                                      const BgValidationOptions& opt, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.mode = "sim";
    cfg.duration_s = opt.duration_s;

    cfg.cells.push_back(ScenarioConfig::Cell{0, Position{0, 0, 0}});

    ScenarioConfig::Host host;
    host.id = 0;
    host.capacity = ResourceVector{1e9, 1e9, 1e9};
    host.scheduling = SchedulingMode::segregation;
    ScenarioConfig::Service svc;
    svc.name = "LocationService";
    svc.service_time_mean_s = opt.service_mean_s;
    svc.distribution = "exponential";
    ScenarioConfig::Background bg;
    if (generator) {
        bg.mode = "generator";
        bg.lambda_f = static_cast<double>(opt.fg_apps) / opt.fg_period_s;
        bg.lambda_b = opt.each_lambda * static_cast<double>(count);
    } else {
        bg.mode = "explicit";
        bg.count = count;
        bg.each_lambda = opt.each_lambda;
    }
    svc.background = bg;
    host.services.push_back(svc);
    cfg.hosts.push_back(host);

    // Three mobile UEs hosting the foreground probes.
    for (int i = 0; i < opt.fg_apps; ++i) {
        ScenarioConfig::Ue ue;
        ue.id = "ue" + std::to_string(i);
        ue.position = Position{20.0 * i, 10.0, 0};
        ue.mobility = LinearMobility{1.0 + 0.5 * i, 0.5, 0};
        ue.transport.dl.kind = DelayDist::Kind::constant;
        ue.transport.dl.a = 0.010;
        ue.transport.ul = ue.transport.dl;
        cfg.ues.push_back(std::move(ue));
    }

    json probe{{"appId", "fg-probe"},
               {"appName", "FgProbe"},
               {"appProvider", "LocationRequester"},
               {"appServiceRequired", {"LocationService"}},
               {"virtualComputeDescriptor", {{"cpu", 1e6}, {"ram", 1024}, {"disk", 0}}},
               {"config", {{"periodS", opt.fg_period_s}}}};
    cfg.descriptors.push_back(std::move(probe));

    for (int i = 0; i < opt.fg_apps; ++i) {
        cfg.device_apps.push_back(
            ScenarioConfig::DeviceApp{"ue" + std::to_string(i), "FgProbe", 0.0, {}});
    }
    return cfg;
}

namespace {

struct ModeStats {
    std::vector<double> walls;
    std::vector<double> responses;
};

void run_once(std::size_t count, bool generator, int rep, const BgValidationOptions& opt,
              ModeStats& out) {
    const std::uint64_t seed = opt.base_seed + static_cast<std::uint64_t>(rep) * 7919 + count;
    auto run = build_scenario(bg_validation_scenario(count, generator, opt, seed));
    execute_scenario(*run);
    out.walls.push_back(run->manifest.wall_time_s);
    for (double v : run->world->stats.values("fg_response_time")) {
        out.responses.push_back(v);
    }
}

double ci95(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    return 1.96 * std::sqrt(variance_of(v) / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

BgValidationReport run_bg_validation(const BgValidationOptions& opt,
                                     std::function<void(const std::string&)> log) {
    BgValidationReport report;
    report.options = opt;

    // Warm-up run so allocator and page-cache effects stay out of the timing.
    {
        auto warm = build_scenario(
            bg_validation_scenario(opt.counts.front(), true, opt, opt.base_seed));
        execute_scenario(*warm);
    }

    // Repetitions are interleaved across counts and modes so that slow drift
    // in machine load spreads evenly over all cells.
    std::map<std::size_t, ModeStats> gen_stats, exp_stats;
    for (int rep = 0; rep < opt.repetitions; ++rep) {
        if (log) log("repetition " + std::to_string(rep + 1) + "/" +
                     std::to_string(opt.repetitions));
        for (std::size_t count : opt.counts) {
            run_once(count, true, rep, opt, gen_stats[count]);
            run_once(count, false, rep, opt, exp_stats[count]);
        }
    }

    for (std::size_t count : opt.counts) {
        ModeStats& gen = gen_stats[count];
        ModeStats& exp = exp_stats[count];
        BgValidationCount row;
        row.count = count;
        row.ks = ks_distance(gen.responses, exp.responses);
        row.generator_wall_mean_s = mean_of(gen.walls);
        row.generator_wall_ci95_s = ci95(gen.walls);
        row.generator_wall_median_s = median_of(gen.walls);
        row.explicit_wall_mean_s = mean_of(exp.walls);
        row.explicit_wall_ci95_s = ci95(exp.walls);
        row.explicit_wall_median_s = median_of(exp.walls);
        row.generator_responses = std::move(gen.responses);
        row.explicit_responses = std::move(exp.responses);
        if (log) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "count %zu: ks=%.4f gen=%.4fs exp=%.4fs", count,
                          row.ks, row.generator_wall_median_s, row.explicit_wall_median_s);
            log(buf);
        }
        report.per_count.push_back(std::move(row));
    }

    double gen_min = 1e300, gen_max = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < report.per_count.size(); ++i) {
        gen_min = std::min(gen_min, report.per_count[i].generator_wall_median_s);
        gen_max = std::max(gen_max, report.per_count[i].generator_wall_median_s);
        if (i > 0 && report.per_count[i].explicit_wall_median_s <=
                         report.per_count[i - 1].explicit_wall_median_s) {
            monotone = false;
        }
    }
    report.generator_wall_spread = gen_min > 0.0 ? (gen_max - gen_min) / gen_min : 0.0;
    report.explicit_wall_monotone = monotone;
    const BgValidationCount& last = report.per_count.back();
    report.wall_ratio_at_max_count =
        last.generator_wall_median_s > 0.0
            ? last.explicit_wall_median_s / last.generator_wall_median_s
            : 0.0;
    return report;
}

json BgValidationReport::to_json() const {
    json rows = json::array();
    for (const BgValidationCount& r : per_count) {
        rows.push_back(json{{"count", r.count},
                            {"ks", r.ks},
                            {"generatorWallMeanS", r.generator_wall_mean_s},
                            {"generatorWallCi95S", r.generator_wall_ci95_s},
                            {"generatorWallMedianS", r.generator_wall_median_s},
                            {"explicitWallMeanS", r.explicit_wall_mean_s},
                            {"explicitWallCi95S", r.explicit_wall_ci95_s},
                            {"explicitWallMedianS", r.explicit_wall_median_s},
                            {"generatorSamples", r.generator_responses.size()},
                            {"explicitSamples", r.explicit_responses.size()}});
    }
    return json{{"repetitions", options.repetitions},
                {"durationS", options.duration_s},
                {"eachLambda", options.each_lambda},
                {"fgApps", options.fg_apps},
                {"fgPeriodS", options.fg_period_s},
                {"serviceMeanS", options.service_mean_s},
                {"generatorWallSpread", generator_wall_spread},
                {"explicitWallMonotone", explicit_wall_monotone},
                {"wallRatioAtMaxCount", wall_ratio_at_max_count},
                {"perCount", rows}};
}

void write_bg_validation_outputs(const BgValidationReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir + "/report.json");
        f << report.to_json().dump(2) << "\n";
    }
    {
        std::FILE* f = std::fopen((dir + "/wall_times.csv").c_str(), "wb");
        std::fprintf(f, "count,mode,wall_mean_s,wall_ci95_s,wall_median_s\n");
        for (const BgValidationCount& r : report.per_count) {
            std::fprintf(f, "%zu,generator,%.9g,%.9g,%.9g\n", r.count,
                         r.generator_wall_mean_s, r.generator_wall_ci95_s,
                         r.generator_wall_median_s);
            std::fprintf(f, "%zu,explicit,%.9g,%.9g,%.9g\n", r.count,
                         r.explicit_wall_mean_s, r.explicit_wall_ci95_s,
                         r.explicit_wall_median_s);
        }
        std::fclose(f);
    }
    for (const BgValidationCount& r : report.per_count) {
        for (const bool generator : {true, false}) {
            std::vector<double> sorted =
                generator ? r.generator_responses : r.explicit_responses;
            std::sort(sorted.begin(), sorted.end());
            const std::string path = dir + "/cdf_" +
                                     (generator ? "generator_" : "explicit_") +
                                     std::to_string(r.count) + ".csv";
            std::FILE* f = std::fopen(path.c_str(), "wb");
            std::fprintf(f, "value,quantile\n");
            for (std::size_t i = 0; i < sorted.size(); ++i) {
                std::fprintf(f, "%.9g,%.9g\n", sorted[i],
                             static_cast<double>(i + 1) / static_cast<double>(sorted.size()));
            }
            std::fclose(f);
        }
    }
}

ScenarioConfig danger_zone_scenario() {
    ScenarioConfig cfg;
    cfg.seed = 1;
    cfg.mode = "sim";
    cfg.duration_s = 40.0;
    cfg.system.instantiation_delay_s = 0.3;
    cfg.system.termination_delay_s = 0.3;

    cfg.cells.push_back(ScenarioConfig::Cell{0, Position{100, 50, 0}});

    ScenarioConfig::Host host;
    host.id = 0;
    host.capacity = ResourceVector{1e9, 1e9, 1e9};
    host.scheduling = SchedulingMode::segregation;
    ScenarioConfig::Service svc;
    svc.name = "LocationService";
    svc.service_time_mean_s = 0.010;
    svc.distribution = "exponential";
    host.services.push_back(svc);
    cfg.hosts.push_back(host);

    ScenarioConfig::Ue car;
    car.id = "car0";
    car.position = Position{0, 0, 0};
    car.mobility = LinearMobility{10, 0, 0};
    car.transport.dl.kind = DelayDist::Kind::constant;
    car.transport.dl.a = 0.010;
    car.transport.ul = car.transport.dl;
    cfg.ues.push_back(std::move(car));

    cfg.descriptors.push_back(
        json{{"appId", "warning-alert"},
             {"appName", "WarningAlert"},
             {"appProvider", "WarningAlert"},
             {"appServiceRequired", {"LocationService"}},
             {"virtualComputeDescriptor", {{"cpu", 5e6}, {"ram", 4096}, {"disk", 0}}}});

    ScenarioConfig::UeApp driver;
    driver.type = "warningAlertDriver";
    driver.ue = "car0";
    driver.app = "WarningAlert";
    driver.start_s = 1.0;
    driver.zone_center = Position{200, 0, 0};
    driver.zone_radius = 50.0;
    cfg.ue_apps.push_back(driver);
    return cfg;
}

const std::vector<std::string>& danger_zone_expected_steps() {
    static const std::vector<std::string> steps{
        "START",          "ACK",           "SUBSCRIBE entering", "NOTIFY entering",
        "UE_INFORMED entering", "MODIFY leaving", "NOTIFY leaving",
        "UE_INFORMED leaving",  "STOP",          "ACK"};
    return steps;
}

DangerZoneReport run_danger_zone(const ScenarioConfig& config) {
    DangerZoneReport report;
    report.expected_steps = danger_zone_expected_steps();

    auto run = build_scenario(config);
    execute_scenario(*run);

    for (const Timeline::Entry& e : run->world->timeline.entries()) {
        report.timeline.push_back(
            json{{"t", e.t.seconds()}, {"step", e.step}, {"subject", e.subject}});
    }

    report.sequence_ok = !config.ue_apps.empty();
    for (const auto& driver : config.ue_apps) {
        const std::vector<std::string> steps =
            run->world->timeline.steps_for(driver.ue);
        report.observed[driver.ue] = steps;
        for (std::size_t i = 0; i < std::max(steps.size(), report.expected_steps.size());
             ++i) {
            const std::string got = i < steps.size() ? steps[i] : "(missing)";
            const std::string want =
                i < report.expected_steps.size() ? report.expected_steps[i] : "(extra)";
            if (got != want) {
                report.sequence_ok = false;
                if (report.violation.empty()) {
                    report.violation = driver.ue + ": step " + std::to_string(i + 1) +
                                       ": got " + got + ", expected " + want;
                }
                break;
            }
        }
    }
    return report;
}

json DangerZoneReport::to_json() const {
    json obs = json::object();
    for (const auto& [ue, steps] : observed) obs[ue] = steps;
    return json{{"expectedSteps", expected_steps},
                {"observed", obs},
                {"sequenceOk", sequence_ok},
                {"violation", violation},
                {"timeline", timeline}};
}

} // namespace mecsim
