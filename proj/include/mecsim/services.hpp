#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mecsim/ran.hpp"
#include "mecsim/service_queue.hpp"

namespace mecsim {

using json = nlohmann::json;

struct Endpoint {
    std::string ip;
    std::uint16_t port = 0;

    std::string str() const { return ip + ":" + std::to_string(port); }
};

struct ServiceDescriptor {
    std::string name;
    int host_id = 0;
    Endpoint endpoint;
    std::string version = "v1";

    json to_json() const;
};

class MecService;

// System-wide catalogue of MEC services. Discovery returns local entries
// first, then remote ones by ascending host id.
class ServiceRegistry {
public:
    void register_service(const ServiceDescriptor& desc, MecService* service);
    void unregister_host(int host_id);

    std::vector<const ServiceDescriptor*> discover(const std::string& name,
                                                   int requesting_host = -1) const;
    std::vector<const ServiceDescriptor*> all() const;
    MecService* resolve(const std::string& name, int host_id) const;

private:
    struct Entry {
        ServiceDescriptor desc;
        MecService* service = nullptr;
    };
    // keyed by (name, host_id)
    std::map<std::pair<std::string, int>, Entry> entries_;
};

// Base scaffold for a MEC service: a request/notification queue plus a
// handler that runs when a job completes service. Concrete services
// implement handle().
class MecService {
public:
    MecService(Engine& engine, ServiceDescriptor desc, ServiceTimeModel model,
               std::optional<std::size_t> capacity = std::nullopt);
    virtual ~MecService() = default;

    const ServiceDescriptor& descriptor() const { return desc_; }
    ServiceQueue& queue() { return queue_; }

    // Submits a request through the queue; cb receives the response document
    // at the simulated completion instant. Errors surface as
    // {"error": <code>, "detail": <text>} response documents.
    void request(json doc, const std::string& kind, bool foreground,
                 std::function<void(json)> cb);

    // Brute-force background population: `count` Poisson sources issuing
    // genuine requests against this service, each fully served (documents
    // built, handled, serialized and re-parsed as a real consumer would).
    void spawn_background_requesters(std::size_t count, double each_lambda);

protected:
    virtual json handle(const json& request) = 0;
    virtual json background_request_doc() const { return json::object(); }

    // Enqueues a notification job; deliver runs when it completes service.
    void push_notification(json payload, std::function<void(const json&)> deliver);

    Engine& engine_;

private:
    ServiceDescriptor desc_;
    ServiceQueue queue_;
};

// Radio Network Information Service: Layer-2 measures over the RAN's
// per-cell sample history.
class RnisService : public MecService {
public:
    RnisService(Engine& engine, Ran& ran, ServiceDescriptor desc, ServiceTimeModel model,
                std::optional<std::size_t> capacity = std::nullopt)
        : MecService(engine, std::move(desc), std::move(model), capacity), ran_(ran) {}

protected:
    json handle(const json& request) override;
    json background_request_doc() const override {
        return json{{"cellIds", ran_.cell_ids()}};
    }

private:
    Ran& ran_;
};

enum class ZoneDirection { entering, leaving };

struct AreaSubscription {
    std::uint64_t sub_id = 0;
    std::string ue_id;
    Position center;
    double radius = 0.0;
    ZoneDirection direction = ZoneDirection::entering;
    std::string callback_uri;
    bool last_inside = false;
    bool active = true;
};

// Location Service: UE position queries and circle-area subscriptions.
// Requests ride the service queue; subscription evaluation happens at every
// mobility update and is free, but notification delivery occupies the
// server (through the notification queue, which takes precedence).
class LocationService : public MecService {
public:
    using NotificationSink = std::function<void(const json&)>;
    // Maps a callback URI onto a delivery function; installed by the wiring
    // layer (internal app dispatch or HTTP callback delivery).
    using SinkResolver =
        std::function<NotificationSink(std::uint64_t sub_id, const std::string& callback_uri)>;

    LocationService(Engine& engine, Ran& ran, ServiceDescriptor desc, ServiceTimeModel model,
                    std::optional<std::size_t> capacity = std::nullopt)
        : MecService(engine, std::move(desc), std::move(model), capacity), ran_(ran) {}

    void set_sink_resolver(SinkResolver resolver) { sink_resolver_ = std::move(resolver); }

    // Direct (non-queued) operations, also reachable through handle().
    std::uint64_t subscribe(AreaSubscription sub);
    void modify_subscription(std::uint64_t sub_id, std::optional<Position> center,
                             std::optional<double> radius,
                             std::optional<ZoneDirection> direction);
    void delete_subscription(std::uint64_t sub_id);
    // Keeps the record but stops evaluating it (callback retry budget spent).
    void disable_subscription(std::uint64_t sub_id);
    const AreaSubscription* subscription(std::uint64_t sub_id) const;
    std::size_t active_subscriptions() const;

    // Runs at every mobility update: fires one notification per subscription
    // whose inside/outside state transitions in the subscribed direction.
    void evaluate_subscriptions();

    json user_list(const json& request) const;

protected:
    json handle(const json& request) override;
    json background_request_doc() const override { return json{{"op", "get_users"}}; }

private:
    bool inside_zone(const AreaSubscription& sub) const;

    Ran& ran_;
    std::map<std::uint64_t, AreaSubscription> subs_;
    std::map<std::uint64_t, NotificationSink> sinks_;
    std::uint64_t next_sub_id_ = 1;
    SinkResolver sink_resolver_;
};

ZoneDirection zone_direction_from_string(const std::string& s);
const char* to_string(ZoneDirection d);

} // namespace mecsim
