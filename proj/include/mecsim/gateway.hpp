#pragma once

#include <memory>
#include <string>

#include "mecsim/world.hpp"

namespace mecsim {

// Real-time bridge between the simulation and external programs:
//
//  - HTTP (Mx2, Mp1, RNIS, Location) under /v1; requests become ingress
//    events and their responses are held until the corresponding simulated
//    response event fires, so external clients observe simulated queueing.
//  - The UDP device-app protocol (START/STOP/ACK/NACK), bound to a
//    configured simulated UE so round trips include its transport delay.
//  - HTTP POST delivery of subscription notifications to callback URIs,
//    with a 3-retry / 1 s backoff budget before the subscription is
//    disabled.
//  - Per-context UDP relays that carry traffic between an external UE app
//    and an external MEC app through the simulated RAN.
//
// All state mutation happens on the engine loop; gateway threads only move
// bytes and park on futures.
class Gateway {
public:
    struct Config {
        std::string bind_ip = "127.0.0.1";
        int http_port = 0;  // 0: pick a free port
        int udp_port = 0;
        std::string device_ue;  // simulated UE identity for external device apps
        double overrun_503_threshold_s = 0.5;
        double http_timeout_s = 30.0;
    };

    Gateway(World& world, Config config);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    // Spawns the server threads. The engine must be driven in real-time
    // mode by the caller; requests arriving outside real-time mode are
    // refused with a mode error.
    void start();
    void stop();

    int http_port() const;
    int udp_port() const;
    std::string base_url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace mecsim
