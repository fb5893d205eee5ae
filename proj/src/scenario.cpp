#include "mecsim/scenario.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

namespace mecsim {

namespace {

Position position_from(const json& doc) {
    return Position{doc.value("x", 0.0), doc.value("y", 0.0), doc.value("z", 0.0)};
}

DelayDist delay_dist_from(const json& doc) {
    DelayDist d;
    const std::string dist = doc.value("dist", "constant");
    if (dist == "constant") {
        d.kind = DelayDist::Kind::constant;
        d.a = doc.value("value", 0.0);
    } else if (dist == "uniform") {
        d.kind = DelayDist::Kind::uniform;
        d.a = doc.value("lo", 0.0);
        d.b = doc.value("hi", 0.0);
    } else if (dist == "exponential") {
        d.kind = DelayDist::Kind::exponential;
        d.a = doc.value("mean", 0.0);
    } else if (dist == "empirical") {
        d.kind = DelayDist::Kind::empirical;
        for (const auto& v : doc.value("samples", json::array())) {
            d.samples.push_back(v.get<double>());
        }
    } else {
        throw make_error(ErrorCode::parse_error, "unknown delay dist " + dist);
    }
    return d;
}

MobilityModel mobility_from(const json& doc) {
    const std::string model = doc.value("model", "stationary");
    if (model == "stationary") return StationaryMobility{};
    if (model == "linear") {
        const json v = doc.value("velocity", json::object());
        return LinearMobility{v.value("x", 0.0), v.value("y", 0.0), v.value("z", 0.0)};
    }
    if (model == "waypoints") {
        WaypointMobility m;
        m.speed = doc.value("speed", 0.0);
        for (const auto& p : doc.value("points", json::array())) {
            m.waypoints.push_back(position_from(p));
        }
        return m;
    }
    if (model == "trace") {
        const std::string file = doc.value("file", "");
        auto traces = Ran::load_trace_file(file);
        const std::string ue = doc.value("ue", "");
        auto it = ue.empty() ? traces.begin() : traces.find(ue);
        if (it == traces.end()) {
            throw make_error(ErrorCode::parse_error, "trace " + file + " lacks ue " + ue);
        }
        return it->second;
    }
    throw make_error(ErrorCode::parse_error, "unknown mobility model " + model);
}

} // namespace

ScenarioConfig ScenarioConfig::from_json(const json& doc) {
    ScenarioConfig cfg;
    try {
        cfg.seed = doc.value("seed", static_cast<std::uint64_t>(1));
        cfg.mode = doc.value("mode", "sim");
        cfg.pace = doc.value("pace", 1.0);
        cfg.duration_s = doc.value("durationS", 10.0);
        cfg.mobility_update_period_s = doc.value("mobilityUpdatePeriodS", 0.1);
        cfg.l2_capacity = doc.value("l2Capacity", static_cast<std::size_t>(1024));
        if (doc.contains("system")) {
            const json& s = doc.at("system");
            cfg.system.instantiation_delay_s = s.value("instantiationDelayS", 0.0);
            cfg.system.termination_delay_s = s.value("terminationDelayS", 0.0);
            cfg.system.strict_service_placement = s.value("strictServicePlacement", true);
        }
        for (const auto& c : doc.value("cells", json::array())) {
            cfg.cells.push_back(Cell{c.value("id", 0),
                                     position_from(c.value("position", json::object()))});
        }
        for (const auto& h : doc.value("hosts", json::array())) {
            Host host;
            host.id = h.value("id", 0);
            host.capacity = ResourceVector{h.value("cpuRate", 0.0), h.value("ram", 0.0),
                                           h.value("disk", 0.0)};
            const std::string sched = h.value("scheduling", "segregation");
            if (sched == "segregation") {
                host.scheduling = SchedulingMode::segregation;
            } else if (sched == "fair-sharing") {
                host.scheduling = SchedulingMode::fair_sharing;
            } else {
                throw make_error(ErrorCode::parse_error, "unknown scheduling " + sched);
            }
            host.platform_latency_s = h.value("platformLatencyS", 0.0);
            for (const auto& dl : h.value("dummyLoads", json::array())) {
                host.dummy_loads.push_back(dl.get<double>());
            }
            for (const auto& s : h.value("services", json::array())) {
                Service svc;
                svc.name = s.value("name", "");
                svc.service_time_mean_s = s.value("serviceTimeMeanS", 0.01);
                svc.distribution = s.value("serviceTimeDistribution", "exponential");
                if (s.contains("queueCapacity") && !s.at("queueCapacity").is_null()) {
                    svc.queue_capacity = s.at("queueCapacity").get<std::size_t>();
                }
                if (s.contains("background") && !s.at("background").is_null()) {
                    const json& b = s.at("background");
                    Background bg;
                    bg.mode = b.value("mode", "generator");
                    bg.lambda_f = b.value("lambdaF", 0.0);
                    bg.lambda_b = b.value("lambdaB", 0.0);
                    bg.count = b.value("count", static_cast<std::size_t>(0));
                    bg.each_lambda = b.value("eachLambda", 0.0);
                    svc.background = bg;
                }
                host.services.push_back(std::move(svc));
            }
            cfg.hosts.push_back(std::move(host));
        }
        for (const auto& u : doc.value("ues", json::array())) {
            Ue ue;
            ue.id = u.value("id", "");
            ue.position = position_from(u.value("position", json::object()));
            if (u.contains("mobility")) ue.mobility = mobility_from(u.at("mobility"));
            if (u.contains("transport")) {
                const json& t = u.at("transport");
                if (t.contains("dlDelay")) ue.transport.dl = delay_dist_from(t.at("dlDelay"));
                if (t.contains("ulDelay")) ue.transport.ul = delay_dist_from(t.at("ulDelay"));
                ue.transport.loss_prob = t.value("lossProb", 0.0);
            }
            cfg.ues.push_back(std::move(ue));
        }
        for (const auto& d : doc.value("appDescriptors", json::array())) {
            if (d.contains("file")) {
                const std::string path = d.at("file").get<std::string>();
                std::ifstream in(path);
                if (!in) throw make_error(ErrorCode::parse_error, "descriptor file " + path);
                cfg.descriptors.push_back(json::parse(in));
            } else {
                cfg.descriptors.push_back(d);
            }
        }
        for (const auto& a : doc.value("deviceApps", json::array())) {
            DeviceApp da;
            da.ue = a.value("ue", "");
            da.app = a.value("app", "");
            da.start_s = a.value("startS", 0.0);
            if (a.contains("stopS") && !a.at("stopS").is_null()) {
                da.stop_s = a.at("stopS").get<double>();
            }
            cfg.device_apps.push_back(std::move(da));
        }
        for (const auto& a : doc.value("ueApps", json::array())) {
            UeApp ua;
            ua.type = a.value("type", "warningAlertDriver");
            ua.ue = a.value("ue", "");
            ua.app = a.value("app", "WarningAlert");
            ua.start_s = a.value("startS", 0.0);
            ua.zone_center = position_from(a.value("zoneCenter", json::object()));
            ua.zone_radius = a.value("zoneRadius", 0.0);
            cfg.ue_apps.push_back(std::move(ua));
        }
        if (doc.contains("stats")) {
            cfg.response_streams.clear();
            for (const auto& s : doc.at("stats").value("responseStreams", json::array())) {
                cfg.response_streams.push_back(s.get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw make_error(ErrorCode::parse_error, e.what());
    }
    return cfg;
}

ScenarioConfig ScenarioConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw make_error(ErrorCode::parse_error, "cannot open " + path);
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw make_error(ErrorCode::parse_error, path + ": " + e.what());
    }
    return from_json(doc);
}

std::vector<std::string> ScenarioConfig::validate() const {
    std::vector<std::string> errors;
    auto err = [&errors](const std::string& m) { errors.push_back(m); };

    if (duration_s <= 0.0) err("durationS must be > 0");
    if (pace <= 0.0) err("pace must be > 0");
    if (mode != "sim" && mode != "realtime") err("mode must be sim|realtime");
    if (mobility_update_period_s <= 0.0) err("mobilityUpdatePeriodS must be > 0");

    std::set<int> cell_ids, host_ids;
    for (const Cell& c : cells) {
        if (!cell_ids.insert(c.id).second) err("duplicate cell id " + std::to_string(c.id));
    }
    std::set<std::string> ue_ids;
    for (const Ue& u : ues) {
        if (u.id.empty()) err("ue with empty id");
        if (!ue_ids.insert(u.id).second) err("duplicate ue id " + u.id);
        if (u.transport.loss_prob < 0.0 || u.transport.loss_prob > 1.0) {
            err("ue " + u.id + ": lossProb outside [0,1]");
        }
    }
    for (const Host& h : hosts) {
        if (!host_ids.insert(h.id).second) err("duplicate host id " + std::to_string(h.id));
        for (const Service& s : h.services) {
            if (s.name != "LocationService" && s.name != "RNIS") {
                err("host " + std::to_string(h.id) + ": unknown service " + s.name);
            }
            if (s.service_time_mean_s <= 0.0) {
                err("service " + s.name + ": serviceTimeMeanS must be > 0");
            }
            if (s.distribution != "exponential" && s.distribution != "constant") {
                err("service " + s.name + ": unknown distribution " + s.distribution);
            }
            if (s.background) {
                const double mu = 1.0 / s.service_time_mean_s;
                if (s.background->mode == "generator") {
                    if (s.distribution != "exponential") {
                        err("service " + s.name + ": generator needs exponential service");
                    }
                    if (s.background->lambda_f + s.background->lambda_b >= mu) {
                        err("service " + s.name + ": unstable (lambda_f+lambda_b >= mu)");
                    }
                } else if (s.background->mode == "explicit") {
                    const double lambda =
                        s.background->each_lambda * static_cast<double>(s.background->count);
                    if (lambda >= mu) {
                        err("service " + s.name + ": unstable (explicit load >= mu)");
                    }
                } else {
                    err("service " + s.name + ": background mode must be generator|explicit");
                }
            }
        }
    }
    std::set<std::string> app_names;
    for (const json& d : descriptors) {
        try {
            const AppDescriptor desc = AppDescriptor::from_json(d);
            if (!app_names.insert(desc.app_name).second) {
                err("duplicate descriptor appName " + desc.app_name);
            }
        } catch (const SimError& e) {
            err(e.what());
        }
    }
    for (const DeviceApp& a : device_apps) {
        if (!ue_ids.count(a.ue)) err("deviceApps: unknown ue " + a.ue);
        if (!app_names.count(a.app)) err("deviceApps: unknown app " + a.app);
        if (a.stop_s && *a.stop_s <= a.start_s) err("deviceApps: stopS before startS");
    }
    for (const UeApp& a : ue_apps) {
        if (a.type != "warningAlertDriver") err("ueApps: unknown type " + a.type);
        if (!ue_ids.count(a.ue)) err("ueApps: unknown ue " + a.ue);
        if (!app_names.count(a.app)) err("ueApps: unknown app " + a.app);
        if (a.zone_radius <= 0.0) err("ueApps: zoneRadius must be > 0");
    }
    return errors;
}

std::unique_ptr<ScenarioRun> build_scenario(const ScenarioConfig& config) {
    const std::vector<std::string> errors = config.validate();
    if (!errors.empty()) {
        std::string joined;
        for (const std::string& e : errors) joined += (joined.empty() ? "" : "; ") + e;
        throw make_error(ErrorCode::validation_error, joined);
    }

    auto run = std::make_unique<ScenarioRun>();
    run->config = config;
    run->world = std::make_unique<World>(config.seed, config.system, config.l2_capacity);
    World& w = *run->world;

    register_builtin_app_factories(w.system());

    for (const auto& c : config.cells) w.ran.add_cell(c.id, c.position);
    for (const auto& u : config.ues) w.ran.add_ue(u.id, u.position, u.mobility, u.transport);

    for (const auto& h : config.hosts) {
        w.add_host(h.id, h.capacity, h.scheduling, h.platform_latency_s);
        for (double load : h.dummy_loads) {
            if (!w.host_node(h.id)->compute->install_dummy_load(load)) {
                run->warnings.push_back("dummy load rejected on host " + std::to_string(h.id));
            }
        }
        for (const auto& s : h.services) {
            ServiceTimeModel model;
            model.mean_s = s.service_time_mean_s;
            model.dist = s.distribution == "constant" ? ServiceTimeModel::Dist::constant
                                                      : ServiceTimeModel::Dist::exponential;
            MecService* svc = nullptr;
            if (s.name == "LocationService") {
                svc = &w.add_location_service(h.id, model, s.queue_capacity);
            } else {
                svc = &w.add_rnis_service(h.id, model, s.queue_capacity);
            }
            json svc_manifest{{"name", s.name},
                              {"hostId", h.id},
                              {"mu", 1.0 / s.service_time_mean_s},
                              {"serviceTimeMeanS", s.service_time_mean_s},
                              {"backgroundMode", "none"}};
            if (s.background && s.background->mode == "generator") {
                svc->queue().enable_background_generator(s.background->lambda_f,
                                                         s.background->lambda_b);
                svc_manifest["backgroundMode"] = "generator";
                svc_manifest["lambdaF"] = s.background->lambda_f;
                svc_manifest["lambdaB"] = s.background->lambda_b;
                svc_manifest["rho"] = svc->queue().background()->rho();
                for (const std::string& warning : svc->queue().warnings()) {
                    run->warnings.push_back(warning);
                }
            } else if (s.background && s.background->mode == "explicit") {
                svc->spawn_background_requesters(s.background->count,
                                                 s.background->each_lambda);
                svc_manifest["backgroundMode"] = "explicit";
                svc_manifest["backgroundCount"] = s.background->count;
                svc_manifest["eachLambda"] = s.background->each_lambda;
            }
            run->manifest.services.push_back(std::move(svc_manifest));
        }
    }

    for (const json& d : config.descriptors) {
        w.system().onboard(AppDescriptor::from_json(d));
    }

    for (const auto& a : config.device_apps) {
        World* wp = &w;
        w.engine.schedule_at(seconds(a.start_s), [wp, ue = a.ue, app = a.app]() {
            wp->system().ue_device_app_request(ue, "START " + app, [](std::string) {});
        });
        if (a.stop_s) {
            w.engine.schedule_at(seconds(*a.stop_s), [wp, ue = a.ue, app = a.app]() {
                wp->system().ue_device_app_request(ue, "STOP " + app, [](std::string) {});
            });
        }
    }

    for (const auto& a : config.ue_apps) {
        WarningAlertUeDriver::Config cfg;
        cfg.ue_id = a.ue;
        cfg.app_name = a.app;
        cfg.zone_center = a.zone_center;
        cfg.zone_radius = a.zone_radius;
        cfg.start_at_s = a.start_s;
        run->drivers.push_back(std::make_unique<WarningAlertUeDriver>(w, cfg));
    }

    for (const std::string& stream : config.response_streams) {
        w.stats.mark_response_stream(stream);
    }

    w.ran.start_updates(config.mobility_update_period_s);
    return run;
}

void execute_scenario(ScenarioRun& run) {
    World& w = *run.world;
    RunManifest& m = run.manifest;
    m.seed = run.config.seed;
    m.mode = run.config.mode;
    m.pace = run.config.pace;
    m.duration_s = run.config.duration_s;

    const auto start = std::chrono::steady_clock::now();
    if (run.config.mode == "realtime") {
        const RealtimeReport report =
            w.engine.run_realtime(seconds(run.config.duration_s), run.config.pace);
        m.event_count = report.dispatched;
        m.overruns = report.overruns;
        m.max_lag_s = report.max_lag_s;
    } else {
        m.event_count = w.engine.run_until(seconds(run.config.duration_s));
    }
    m.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.app_contexts = w.system().all_contexts().size();
    m.warnings = run.warnings;
}

json RunManifest::to_json() const {
    return json{{"seed", seed},
                {"mode", mode},
                {"pace", pace},
                {"durationS", duration_s},
                {"wallTimeS", wall_time_s},
                {"eventCount", event_count},
                {"overruns", overruns},
                {"maxLagS", max_lag_s},
                {"appContexts", app_contexts},
                {"warnings", warnings},
                {"services", services}};
}

void run_scenario_to_dir(const ScenarioConfig& config, const std::string& out_dir) {
    auto run = build_scenario(config);
    execute_scenario(*run);
    std::filesystem::create_directories(out_dir);
    run->world->stats.write_csv_dir(out_dir);
    std::ofstream manifest(out_dir + "/manifest.json");
    manifest << run->manifest.to_json().dump(2) << "\n";
}

} // namespace mecsim
