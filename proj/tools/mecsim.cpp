#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "mecsim/experiments.hpp"
#include "mecsim/gateway.hpp"
#include "mecsim/scenario.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSequence = 3;

int cmd_validate(const std::string& path) {
    try {
        const mecsim::ScenarioConfig cfg = mecsim::ScenarioConfig::load_file(path);
        const std::vector<std::string> errors = cfg.validate();
        if (errors.empty()) {
            std::printf("ok: %s\n", path.c_str());
            return 0;
        }
        for (const std::string& e : errors) std::fprintf(stderr, "error: %s\n", e.c_str());
        return kExitValidation;
    } catch (const mecsim::SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
}

struct RunOptions {
    std::string scenario;
    std::string out_dir = "results";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<double> pace;
    bool gateway = false;
    int http_port = 8080;
    int udp_port = 9900;
    std::string device_ue;
};

int cmd_run(const RunOptions& opt) {
    mecsim::ScenarioConfig cfg;
    try {
        cfg = mecsim::ScenarioConfig::load_file(opt.scenario);
    } catch (const mecsim::SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.mode) cfg.mode = *opt.mode;
    if (opt.pace) cfg.pace = *opt.pace;

    try {
        if (!opt.gateway) {
            mecsim::run_scenario_to_dir(cfg, opt.out_dir);
        } else {
            if (cfg.mode != "realtime") {
                std::fprintf(stderr, "error: --gateway requires --mode realtime\n");
                return kExitValidation;
            }
            auto run = mecsim::build_scenario(cfg);
            mecsim::Gateway::Config gw_cfg;
            gw_cfg.http_port = opt.http_port;
            gw_cfg.udp_port = opt.udp_port;
            gw_cfg.device_ue = opt.device_ue;
            mecsim::Gateway gateway(*run->world, gw_cfg);
            gateway.start();
            std::printf("gateway: http %s  udp %s:%d\n", gateway.base_url().c_str(),
                        "127.0.0.1", gateway.udp_port());
            std::fflush(stdout);
            mecsim::execute_scenario(*run);
            gateway.stop();
            std::filesystem::create_directories(opt.out_dir);
            run->world->stats.write_csv_dir(opt.out_dir);
            std::ofstream manifest(opt.out_dir + "/manifest.json");
            manifest << run->manifest.to_json().dump(2) << "\n";
        }
    } catch (const mecsim::SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == mecsim::ErrorCode::validation_error ? kExitValidation
                                                               : kExitRuntime;
    }
    std::printf("results: %s\n", opt.out_dir.c_str());
    return 0;
}

int cmd_bg_validation(const std::vector<std::size_t>& counts, int reps, double duration,
                      const std::string& out_dir, std::uint64_t seed) {
    mecsim::BgValidationOptions opt;
    if (!counts.empty()) opt.counts = counts;
    opt.repetitions = reps;
    opt.duration_s = duration;
    opt.base_seed = seed;
    const mecsim::BgValidationReport report =
        mecsim::run_bg_validation(opt, [](const std::string& line) {
            std::fprintf(stderr, "bg-validation: %s\n", line.c_str());
        });
    mecsim::write_bg_validation_outputs(report, out_dir);

    bool ok = true;
    for (const auto& row : report.per_count) {
        std::printf("count %3zu  ks %.4f  generator %.4fs  explicit %.4fs\n", row.count,
                    row.ks, row.generator_wall_median_s, row.explicit_wall_median_s);
        ok = ok && row.ks <= 0.05;
    }
    std::printf("generator wall spread %.1f%%  explicit monotone %s  ratio@max %.1fx\n",
                report.generator_wall_spread * 100.0,
                report.explicit_wall_monotone ? "yes" : "no",
                report.wall_ratio_at_max_count);
    std::printf("report: %s\n", out_dir.c_str());
    return ok ? 0 : kExitRuntime;
}

int cmd_danger_zone(const std::string& scenario_file, std::uint64_t seed,
                    const std::string& out_dir) {
    mecsim::ScenarioConfig cfg;
    try {
        cfg = scenario_file.empty() ? mecsim::danger_zone_scenario()
                                    : mecsim::ScenarioConfig::load_file(scenario_file);
    } catch (const mecsim::SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    cfg.seed = seed;
    const mecsim::DangerZoneReport report = mecsim::run_danger_zone(cfg);

    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/danger_zone.json");
    f << report.to_json().dump(2) << "\n";

    for (const auto& entry : report.timeline) {
        std::printf("%10.4fs  %-22s %s\n", entry.at("t").get<double>(),
                    entry.at("step").get<std::string>().c_str(),
                    entry.at("subject").get<std::string>().c_str());
    }
    if (!report.sequence_ok) {
        std::fprintf(stderr, "sequence violation: %s\n", report.violation.c_str());
        return kExitSequence;
    }
    std::printf("sequence: ok (%zu steps)\n", mecsim::danger_zone_expected_steps().size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MEC system simulator and real-time emulation cradle"};
    app.require_subcommand(1);

    // run
    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "run a scenario file");
    run->add_option("scenario", run_opt.scenario, "scenario JSON file")->required();
    std::uint64_t seed_arg = 0;
    std::string mode_arg;
    double pace_arg = 0.0;
    CLI::Option* seed_opt = run->add_option("--seed", seed_arg, "override the seed");
    CLI::Option* mode_opt =
        run->add_option("--mode", mode_arg, "sim|realtime")->check(CLI::IsMember({"sim", "realtime"}));
    CLI::Option* pace_opt = run->add_option("--pace", pace_arg, "real-time pace factor");
    run->add_option("--out", run_opt.out_dir, "results directory");
    run->add_flag("--gateway", run_opt.gateway, "expose HTTP/UDP gateway (realtime only)");
    run->add_option("--http-port", run_opt.http_port, "gateway HTTP port");
    run->add_option("--udp-port", run_opt.udp_port, "gateway UDP port");
    run->add_option("--device-ue", run_opt.device_ue,
                    "simulated UE bound to external device apps");

    // validate
    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "validate a scenario file");
    validate->add_option("scenario", validate_path, "scenario JSON file")->required();

    // experiment
    CLI::App* experiment = app.add_subcommand("experiment", "built-in experiments");
    experiment->require_subcommand(1);

    std::vector<std::size_t> counts;
    int reps = 15;
    double duration = 180.0;
    std::string bg_out = "results/bg-validation";
    std::uint64_t bg_seed = 1;
    CLI::App* bg = experiment->add_subcommand("bg-validation",
                                              "explicit vs. generator background load");
    bg->add_option("--counts", counts, "background app counts");
    bg->add_option("--reps", reps, "repetitions per count");
    bg->add_option("--duration", duration, "simulated seconds per run");
    bg->add_option("--out", bg_out, "output directory");
    bg->add_option("--seed", bg_seed, "base seed");

    std::string dz_scenario;
    std::uint64_t dz_seed = 1;
    std::string dz_out = "results/danger-zone";
    CLI::App* dz = experiment->add_subcommand("danger-zone",
                                              "warning-alert use case timeline");
    dz->add_option("--scenario", dz_scenario, "override the bundled scenario");
    dz->add_option("--seed", dz_seed, "seed");
    dz->add_option("--out", dz_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) run_opt.seed = seed_arg;
    if (*mode_opt) run_opt.mode = mode_arg;
    if (*pace_opt) run_opt.pace = pace_arg;

    if (run->parsed()) return cmd_run(run_opt);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (bg->parsed()) return cmd_bg_validation(counts, reps, duration, bg_out, bg_seed);
    if (dz->parsed()) return cmd_danger_zone(dz_scenario, dz_seed, dz_out);
    return 0;
}
