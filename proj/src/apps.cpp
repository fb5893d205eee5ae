#include "mecsim/apps.hpp"

#include <sstream>

namespace mecsim {

void LocationRequesterApp::on_start() {
    const json& cfg = env_.ctx->descriptor->config;
    period_s_ = cfg.value("periodS", 0.5);
    service_name_ = cfg.value("service", "LocationService");
    stream_ = cfg.value("stream", "fg_response_time");
    service_ = env_.discover_one(service_name_);
    if (!service_) return;
    // Random initial phase so concurrent requesters do not fire in lockstep.
    const double phase =
        env_.engine->rng("app-phase:" + env_.ctx->context_id).uniform(0.0, period_s_);
    env_.engine->schedule_in(phase, guarded([this]() { send_request(); }));
}

void LocationRequesterApp::send_request() {
    if (stopped_) return;
    const SimTime sent = env_.engine->now();
    json doc{{"op", "get_users"}, {"ueIds", json::array({env_.ctx->owner})}};
    env_.service_request(
        *service_, std::move(doc), "GET users",
        guarded([this, sent](json) {
            if (stopped_) return;
            StatLabels labels{env_.ctx->app_name, std::to_string(env_.ctx->host_id),
                              service_name_, env_.ctx->owner};
            env_.stats->record(stream_, env_.engine->now(),
                               (env_.engine->now() - sent).seconds(), std::move(labels));
        }));
    env_.engine->schedule_in(period_s_, guarded([this]() { send_request(); }));
}

void WarningAlertApp::on_ue_message(const std::string& from_ue, const std::string& payload) {
    std::istringstream ss(payload);
    std::string verb;
    double x = 0, y = 0, z = 0, radius = 0;
    if (!(ss >> verb >> x >> y >> z >> radius) || verb != "MONITOR") return;

    ue_id_ = from_ue;
    location_ = env_.discover_one("LocationService");
    if (!location_) return;
    json sub{{"op", "subscribe_area"},
             {"ueId", ue_id_},
             {"center", {{"x", x}, {"y", y}, {"z", z}}},
             {"radius", radius},
             {"direction", "entering"},
             {"callbackUri", "app://" + env_.ctx->context_id}};
    env_.service_request(*location_, std::move(sub), "POST subscription",
                         guarded([this](json resp) {
                             if (resp.contains("error")) return;
                             sub_id_ = resp.at("subscriptionId").get<std::uint64_t>();
                             env_.timeline->record(env_.engine->now(), "SUBSCRIBE entering",
                                                   ue_id_);
                         }));
}

void WarningAlertApp::on_notification(const json& doc) {
    const std::string event = doc.value("event", "");
    if (event == "entering") {
        env_.timeline->record(env_.engine->now(), "NOTIFY entering", ue_id_);
        env_.send_to_ue(ue_id_, "WARNING entered zone", guarded([this]() {
            // Warning is at the UE; now watch for the exit.
            json mod{{"op", "modify_subscription"},
                     {"subscriptionId", sub_id_},
                     {"direction", "leaving"}};
            env_.service_request(*location_, std::move(mod), "PUT subscription",
                                 guarded([this](json resp) {
                                     if (resp.contains("error")) return;
                                     env_.timeline->record(env_.engine->now(),
                                                           "MODIFY leaving", ue_id_);
                                 }));
        }));
    } else if (event == "leaving") {
        env_.timeline->record(env_.engine->now(), "NOTIFY leaving", ue_id_);
        env_.send_to_ue(ue_id_, "WARNING exited zone");
    }
}

void EchoApp::on_ue_message(const std::string& from_ue, const std::string& payload) {
    const double instructions =
        env_.ctx->descriptor->config.value("computeInstructions", 0.0);
    if (instructions > 0.0) {
        env_.compute(instructions, guarded([this, from_ue, payload]() {
            env_.send_to_ue(from_ue, payload);
        }));
    } else {
        env_.send_to_ue(from_ue, payload);
    }
}

void register_builtin_app_factories(MecSystem& system) {
    system.register_app_factory("LocationRequester", [](AppEnv env) {
        return std::make_unique<LocationRequesterApp>(std::move(env));
    });
    system.register_app_factory("WarningAlert", [](AppEnv env) {
        return std::make_unique<WarningAlertApp>(std::move(env));
    });
    system.register_app_factory("Echo", [](AppEnv env) {
        return std::make_unique<EchoApp>(std::move(env));
    });
}

WarningAlertUeDriver::WarningAlertUeDriver(World& world, Config cfg)
    : world_(world), cfg_(std::move(cfg)) {
    world_.engine.schedule_in(cfg_.start_at_s, [this]() { start(); });
}

void WarningAlertUeDriver::start() {
    MecSystem& system = world_.system();
    system.register_ue_app(cfg_.ue_id, [w = std::weak_ptr<void>(alive_),
                                        this](const std::string& payload) {
        if (!w.expired()) on_ue_message(payload);
    });
    world_.timeline.record(world_.engine.now(), "START", cfg_.ue_id);
    system.ue_device_app_request(
        cfg_.ue_id, "START " + cfg_.app_name,
        [w = std::weak_ptr<void>(alive_), this](std::string reply) {
            if (w.expired()) return;
            if (reply.rfind("ACK ", 0) != 0) return;
            world_.timeline.record(world_.engine.now(), "ACK", cfg_.ue_id);
            const std::string ep = reply.substr(4);
            const auto colon = ep.find(':');
            app_endpoint_ = Endpoint{ep.substr(0, colon),
                                     static_cast<std::uint16_t>(
                                         std::stoi(ep.substr(colon + 1)))};
            std::ostringstream monitor;
            monitor << "MONITOR " << cfg_.zone_center.x << " " << cfg_.zone_center.y << " "
                    << cfg_.zone_center.z << " " << cfg_.zone_radius;
            world_.system().ue_send_to_app(cfg_.ue_id, app_endpoint_, monitor.str());
        });
}

void WarningAlertUeDriver::on_ue_message(const std::string& payload) {
    if (payload.rfind("WARNING entered", 0) == 0) {
        world_.timeline.record(world_.engine.now(), "UE_INFORMED entering", cfg_.ue_id);
    } else if (payload.rfind("WARNING exited", 0) == 0) {
        world_.timeline.record(world_.engine.now(), "UE_INFORMED leaving", cfg_.ue_id);
        world_.timeline.record(world_.engine.now(), "STOP", cfg_.ue_id);
        world_.system().ue_device_app_request(
            cfg_.ue_id, "STOP " + cfg_.app_name,
            [w = std::weak_ptr<void>(alive_), this](std::string reply) {
                if (w.expired()) return;
                if (reply == "ACK") {
                    world_.timeline.record(world_.engine.now(), "ACK", cfg_.ue_id);
                    finished_ = true;
                }
            });
    }
}

} // namespace mecsim
