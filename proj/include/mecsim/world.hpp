#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mecsim/lifecycle.hpp"

namespace mecsim {

// Fully assembled runtime for one simulation: engine, RAN, registry, hosts
// with their platform services, and the MEC system level. Scenarios and
// tests build a World, populate it, then drive the engine.
class World {
public:
    explicit World(std::uint64_t seed, SystemConfig system_config = {},
                   std::size_t l2_capacity = 1024);

    Engine engine;
    Ran ran;
    StatsCollector stats;
    Timeline timeline;
    ServiceRegistry registry;

    MecSystem& system() { return *system_; }

    MecHostNode& add_host(int host_id, ResourceVector capacity, SchedulingMode mode,
                          double platform_latency_s = 0.0);

    LocationService& add_location_service(int host_id, ServiceTimeModel model,
                                          std::optional<std::size_t> capacity = std::nullopt);
    RnisService& add_rnis_service(int host_id, ServiceTimeModel model,
                                  std::optional<std::size_t> capacity = std::nullopt);

    MecHostNode* host_node(int host_id) { return system_->host_node(host_id); }

    // Resolves app://<context_id> callback URIs onto internal app delivery;
    // other schemes fall through to the externally installed resolver (the
    // gateway adds http:// delivery).
    LocationService::NotificationSink resolve_internal_sink(const std::string& uri);

private:
    Endpoint service_endpoint(int host_id);
    void attach_service(int host_id, std::unique_ptr<MecService> svc);

    std::vector<std::unique_ptr<MecHostNode>> hosts_;
    std::unique_ptr<MecSystem> system_;
    int service_counter_ = 0;
};

} // namespace mecsim
