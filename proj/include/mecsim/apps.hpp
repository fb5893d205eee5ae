#pragma once

#include "mecsim/world.hpp"

namespace mecsim {

// Periodic service requester: the foreground measurement stub. Issues one
// position query per period against its own UE and records the response
// time. Config keys: periodS, service, stream.
class LocationRequesterApp : public InternalMecApp {
public:
    using InternalMecApp::InternalMecApp;

    void on_start() override;
    void on_stop() override { stopped_ = true; }

private:
    void send_request();

    double period_s_ = 0.5;
    std::string service_name_ = "LocationService";
    std::string stream_ = "fg_response_time";
    const ServiceDescriptor* service_ = nullptr;
    bool stopped_ = false;
};

// Danger-zone reference app. The UE app sends "MONITOR <x> <y> <z> <radius>";
// the app subscribes for the entering event, warns the UE on each
// notification and, once the warning has reached the UE, flips the
// subscription to the leaving direction.
class WarningAlertApp : public InternalMecApp {
public:
    using InternalMecApp::InternalMecApp;

    void on_ue_message(const std::string& from_ue, const std::string& payload) override;
    void on_notification(const json& doc) override;

private:
    const ServiceDescriptor* location_ = nullptr;
    std::string ue_id_;
    std::uint64_t sub_id_ = 0;
};

// Echoes UE messages back, optionally after a compute(N) phase
// (config key computeInstructions).
class EchoApp : public InternalMecApp {
public:
    using InternalMecApp::InternalMecApp;

    void on_ue_message(const std::string& from_ue, const std::string& payload) override;
};

void register_builtin_app_factories(MecSystem& system);

// Simulated UE app for the danger-zone use case: starts the MEC app through
// the device-app protocol, asks it to monitor the zone, and stops it after
// the leaving warning. Milestones are recorded on the world timeline with
// the UE id as subject.
class WarningAlertUeDriver {
public:
    struct Config {
        std::string ue_id;
        std::string app_name = "WarningAlert";
        Position zone_center;
        double zone_radius = 0.0;
        double start_at_s = 0.0;
    };

    WarningAlertUeDriver(World& world, Config cfg);

    bool finished() const { return finished_; }

private:
    void start();
    void on_ue_message(const std::string& payload);

    World& world_;
    Config cfg_;
    Endpoint app_endpoint_;
    bool finished_ = false;
    std::shared_ptr<void> alive_ = std::make_shared<int>(0);
};

} // namespace mecsim
