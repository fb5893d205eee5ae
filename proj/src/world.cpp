#include "mecsim/world.hpp"

namespace mecsim {

World::World(std::uint64_t seed, SystemConfig system_config, std::size_t l2_capacity)
    : engine(seed), ran(engine, l2_capacity),
      system_(std::make_unique<MecSystem>(engine, ran, registry, stats, timeline,
                                          system_config)) {}

MecHostNode& World::add_host(int host_id, ResourceVector capacity, SchedulingMode mode,
                             double platform_latency_s) {
    auto node = std::make_unique<MecHostNode>();
    node->compute = std::make_unique<ComputeHost>(engine, host_id, capacity, mode);
    node->platform_latency_s = platform_latency_s;
    hosts_.push_back(std::move(node));
    system_->add_host(hosts_.back().get());
    return *hosts_.back();
}

Endpoint World::service_endpoint(int host_id) {
    return Endpoint{"10.0." + std::to_string(5 + host_id) + ".2",
                    static_cast<std::uint16_t>(8000 + service_counter_++)};
}

void World::attach_service(int host_id, std::unique_ptr<MecService> svc) {
    MecHostNode* node = system_->host_node(host_id);
    if (!node) throw make_error(ErrorCode::validation_error,
                                "unknown host " + std::to_string(host_id));
    registry.register_service(svc->descriptor(), svc.get());
    node->compute->add_available_service(svc->descriptor().name);
    node->services.push_back(std::move(svc));
}

LocationService& World::add_location_service(int host_id, ServiceTimeModel model,
                                             std::optional<std::size_t> capacity) {
    ServiceDescriptor desc{"LocationService", host_id, service_endpoint(host_id)};
    auto svc = std::make_unique<LocationService>(engine, ran, desc, std::move(model),
                                                 capacity);
    LocationService* loc = svc.get();
    loc->set_sink_resolver([this](std::uint64_t, const std::string& uri) {
        return resolve_internal_sink(uri);
    });
    // Subscriptions are checked against every mobility update.
    ran.on_mobility_update([loc]() { loc->evaluate_subscriptions(); });
    attach_service(host_id, std::move(svc));
    return *loc;
}

RnisService& World::add_rnis_service(int host_id, ServiceTimeModel model,
                                     std::optional<std::size_t> capacity) {
    ServiceDescriptor desc{"RNIS", host_id, service_endpoint(host_id)};
    auto svc = std::make_unique<RnisService>(engine, ran, desc, std::move(model), capacity);
    RnisService* rnis = svc.get();
    attach_service(host_id, std::move(svc));
    return *rnis;
}

LocationService::NotificationSink World::resolve_internal_sink(const std::string& uri) {
    const std::string prefix = "app://";
    if (uri.rfind(prefix, 0) != 0) return nullptr;
    const std::string ctx_id = uri.substr(prefix.size());
    MecSystem* system = system_.get();
    return [system, ctx_id](const json& doc) {
        AppContext* ctx = system->context(ctx_id);
        if (ctx && ctx->instance) ctx->instance->on_notification(doc);
    };
}

} // namespace mecsim
