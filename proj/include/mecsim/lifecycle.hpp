#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mecsim/compute.hpp"
#include "mecsim/services.hpp"
#include "mecsim/stats.hpp"

namespace mecsim {

// Onboarding record. The JSON form uses the appId / appName / appProvider /
// appServiceRequired / virtualComputeDescriptor / emulatedMecApplication
// field names; emulatedMecApplication marks the app as external, in which
// case appProvider stays empty and no instantiation happens in the
// simulator.
struct AppDescriptor {
    std::string app_id;
    std::string app_name;
    std::string app_provider;  // internal module name, empty for external apps
    std::vector<std::string> services_required;
    ResourceVector virtual_compute;
    std::optional<Endpoint> emulated_endpoint;
    bool joinable = false;  // artifact extension, default off
    json config = json::object();

    bool is_external() const { return emulated_endpoint.has_value(); }

    static AppDescriptor from_json(const json& doc);
    json to_json() const;
};

enum class ContextState { requested, instantiating, running, terminating, terminated };
const char* to_string(ContextState s);

class InternalMecApp;

struct AppContext {
    std::string context_id;
    std::string app_name;
    const AppDescriptor* descriptor = nullptr;
    ContextState state = ContextState::requested;
    int host_id = -1;  // -1 until placed (external apps are never placed)
    Endpoint app_endpoint;
    std::string owner;  // device-app identity that created the context
    std::unique_ptr<InternalMecApp> instance;
    std::vector<ContextState> state_history{ContextState::requested};

    void transition(ContextState next) {
        state = next;
        state_history.push_back(next);
    }
};

// One MEC host: compute pool plus the platform services running on it.
struct MecHostNode {
    std::unique_ptr<ComputeHost> compute;
    std::vector<std::unique_ptr<MecService>> services;
    double platform_latency_s = 0.0;  // app <-> platform hop, one way
};

class MecSystem;

// Wiring handed to an internal MEC app instance.
struct AppEnv {
    Engine* engine = nullptr;
    Ran* ran = nullptr;
    ServiceRegistry* registry = nullptr;
    MecSystem* system = nullptr;
    ComputeHost* host = nullptr;
    AppContext* ctx = nullptr;
    StatsCollector* stats = nullptr;
    Timeline* timeline = nullptr;

    const ServiceDescriptor* discover_one(const std::string& service_name) const;
    void service_request(const ServiceDescriptor& desc, json doc, const std::string& kind,
                         std::function<void(json)> cb, bool foreground = true) const;
    SimTime compute(double instructions, std::function<void()> done = {}) const;
    // delivered fires once the payload reaches the UE app (never on loss).
    bool send_to_ue(const std::string& ue_id, std::string payload,
                    std::function<void()> delivered = {}) const;
};

// Base class for MEC apps compiled into the simulator: the developer only
// implements the reception callbacks; sockets and events are managed here.
class InternalMecApp {
public:
    explicit InternalMecApp(AppEnv env) : env_(std::move(env)) {}
    virtual ~InternalMecApp() = default;

    virtual void on_start() {}
    virtual void on_stop() {}
    virtual void on_ue_message(const std::string& /*from_ue*/, const std::string& /*payload*/) {}
    virtual void on_notification(const json& /*doc*/) {}

    const AppEnv& env() const { return env_; }

protected:
    // Wraps a callback so it is silently dropped when the instance has been
    // torn down by the time the event fires.
    template <typename F>
    auto guarded(F fn) {
        return [w = std::weak_ptr<void>(alive_), fn = std::move(fn)](auto&&... args) {
            if (!w.expired()) fn(std::forward<decltype(args)>(args)...);
        };
    }

    AppEnv env_;

private:
    std::shared_ptr<void> alive_ = std::make_shared<int>(0);
};

using AppFactory = std::function<std::unique_ptr<InternalMecApp>(AppEnv)>;

struct SystemConfig {
    double instantiation_delay_s = 0.0;
    double termination_delay_s = 0.0;
    // strict: required services must be available on the chosen host itself;
    // relaxed: discoverable anywhere in the system.
    bool strict_service_placement = true;
};

// MEC system level: orchestrator, UALCMP and app contexts. Orchestrator and
// UALCMP interactions are direct in-process calls; their latency is folded
// into the configured instantiation/termination delays.
class MecSystem {
public:
    MecSystem(Engine& engine, Ran& ran, ServiceRegistry& registry, StatsCollector& stats,
              Timeline& timeline, SystemConfig config);

    void add_host(MecHostNode* node);
    MecHostNode* host_node(int host_id);
    const std::vector<MecHostNode*>& hosts() const { return hosts_; }

    void register_app_factory(const std::string& provider, AppFactory factory);

    void onboard(AppDescriptor desc);
    const AppDescriptor* descriptor_by_name(const std::string& app_name) const;

    using CreateResult = std::function<void(AppContext* ctx, const std::string& error)>;
    void create_app_context(const std::string& owner, const std::string& app_name,
                            CreateResult done);
    void delete_app_context(const std::string& context_id,
                            std::function<void(bool ok, const std::string& error)> done);
    AppContext* join_existing(const std::string& owner, const std::string& app_name);

    // Default policy: hosts feasible for the descriptor (admission and, in
    // strict mode, locally available required services), lowest cpu
    // utilization first, lowest host id on ties.
    int choose_best_mec_host(const AppDescriptor& desc) const;
    void set_placement_policy(std::function<int(const AppDescriptor&)> policy) {
        placement_policy_ = std::move(policy);
    }

    // Plain-text device-app protocol: "START <app>" / "STOP <app>" ->
    // "ACK [<ip>:<port>]" / "NACK <reason>". The reply callback fires when
    // the operation completes (instantiation takes simulated time).
    void device_app_handle(const std::string& owner, const std::string& datagram,
                           std::function<void(std::string reply)> reply);

    AppContext* context(const std::string& context_id);
    AppContext* context_by_endpoint(const Endpoint& ep);
    std::vector<AppContext*> all_contexts();

    // UE-side data plane. UE apps are plain handlers keyed by ue id;
    // traffic to/from them crosses the RAN with the UE's transport profile.
    void register_ue_app(const std::string& ue_id,
                         std::function<void(const std::string& payload)> on_message);
    bool ue_send_to_app(const std::string& ue_id, const Endpoint& app_endpoint,
                        std::string payload);
    bool app_send_to_ue(const std::string& ue_id, std::string payload,
                        std::function<void()> delivered = {});
    // Device-app round trip from a simulated UE, transport delay included
    // both ways.
    void ue_device_app_request(const std::string& ue_id, const std::string& datagram,
                               std::function<void(std::string reply)> on_reply);

    const SystemConfig& config() const { return config_; }
    StatsCollector& stats() { return stats_; }
    Timeline& timeline() { return timeline_; }
    Engine& engine() { return engine_; }
    Ran& ran() { return ran_; }
    ServiceRegistry& registry() { return registry_; }

private:
    Endpoint allocate_endpoint(int host_id);
    AppEnv make_env(AppContext* ctx, ComputeHost* host);

    Engine& engine_;
    Ran& ran_;
    ServiceRegistry& registry_;
    StatsCollector& stats_;
    Timeline& timeline_;
    SystemConfig config_;
    std::vector<MecHostNode*> hosts_;
    std::map<std::string, AppDescriptor> descriptors_;  // by app_name
    std::map<std::string, std::unique_ptr<AppContext>> contexts_;
    std::map<std::string, AppFactory> factories_;
    std::map<std::string, std::function<void(const std::string&)>> ue_apps_;
    std::function<int(const AppDescriptor&)> placement_policy_;
    int context_counter_ = 0;
    int endpoint_counter_ = 0;
};

} // namespace mecsim
