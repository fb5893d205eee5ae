#include "mecsim/lifecycle.hpp"

#include <algorithm>
#include <sstream>

namespace mecsim {

const char* to_string(ContextState s) {
    switch (s) {
        case ContextState::requested: return "requested";
        case ContextState::instantiating: return "instantiating";
        case ContextState::running: return "running";
        case ContextState::terminating: return "terminating";
        case ContextState::terminated: return "terminated";
    }
    return "?";
}

AppDescriptor AppDescriptor::from_json(const json& doc) {
    AppDescriptor d;
    for (const char* field : {"appId", "appName", "virtualComputeDescriptor"}) {
        if (!doc.contains(field)) {
            throw make_error(ErrorCode::malformed_descriptor,
                             std::string("missing field ") + field);
        }
    }
    d.app_id = doc.at("appId").get<std::string>();
    d.app_name = doc.at("appName").get<std::string>();
    d.app_provider = doc.value("appProvider", "");
    if (doc.contains("appServiceRequired")) {
        for (const auto& s : doc.at("appServiceRequired")) {
            d.services_required.push_back(s.get<std::string>());
        }
    }
    const json& vc = doc.at("virtualComputeDescriptor");
    d.virtual_compute.cpu_rate = vc.value("cpu", 0.0);
    d.virtual_compute.ram = vc.value("ram", 0.0);
    d.virtual_compute.disk = vc.value("disk", 0.0);
    if (doc.contains("emulatedMecApplication")) {
        const json& em = doc.at("emulatedMecApplication");
        if (!em.contains("ipAddress") || !em.contains("port")) {
            throw make_error(ErrorCode::malformed_descriptor,
                             "emulatedMecApplication needs ipAddress and port");
        }
        d.emulated_endpoint = Endpoint{em.at("ipAddress").get<std::string>(),
                                       em.at("port").get<std::uint16_t>()};
    }
    d.joinable = doc.value("joinable", false);
    d.config = doc.value("config", json::object());

    // An app is external exactly when emulatedMecApplication is present.
    if (d.is_external() && !d.app_provider.empty()) {
        throw make_error(ErrorCode::malformed_descriptor,
                         d.app_id + ": external app must not set appProvider");
    }
    if (!d.is_external() && d.app_provider.empty()) {
        throw make_error(ErrorCode::malformed_descriptor,
                         d.app_id + ": internal app needs appProvider");
    }
    return d;
}

json AppDescriptor::to_json() const {
    json doc{{"appId", app_id},
             {"appName", app_name},
             {"appProvider", app_provider},
             {"appServiceRequired", services_required},
             {"virtualComputeDescriptor",
              {{"cpu", virtual_compute.cpu_rate},
               {"ram", virtual_compute.ram},
               {"disk", virtual_compute.disk}}}};
    if (emulated_endpoint) {
        doc["emulatedMecApplication"] = {{"ipAddress", emulated_endpoint->ip},
                                         {"port", emulated_endpoint->port}};
    }
    if (joinable) doc["joinable"] = true;
    if (!config.empty()) doc["config"] = config;
    return doc;
}

MecSystem::MecSystem(Engine& engine, Ran& ran, ServiceRegistry& registry,
                     StatsCollector& stats, Timeline& timeline, SystemConfig config)
    : engine_(engine), ran_(ran), registry_(registry), stats_(stats), timeline_(timeline),
      config_(config) {}

void MecSystem::add_host(MecHostNode* node) { hosts_.push_back(node); }

MecHostNode* MecSystem::host_node(int host_id) {
    for (MecHostNode* node : hosts_) {
        if (node->compute->id() == host_id) return node;
    }
    return nullptr;
}

void MecSystem::register_app_factory(const std::string& provider, AppFactory factory) {
    factories_[provider] = std::move(factory);
}

void MecSystem::onboard(AppDescriptor desc) {
    for (const auto& [name, existing] : descriptors_) {
        if (existing.app_id == desc.app_id) {
            throw make_error(ErrorCode::duplicate_app_id, desc.app_id);
        }
    }
    if (descriptors_.count(desc.app_name)) {
        throw make_error(ErrorCode::duplicate_app_id,
                         "appName " + desc.app_name + " already onboarded");
    }
    descriptors_.emplace(desc.app_name, std::move(desc));
}

const AppDescriptor* MecSystem::descriptor_by_name(const std::string& app_name) const {
    auto it = descriptors_.find(app_name);
    return it == descriptors_.end() ? nullptr : &it->second;
}

int MecSystem::choose_best_mec_host(const AppDescriptor& desc) const {
    if (placement_policy_) return placement_policy_(desc);

    const MecHostNode* best = nullptr;
    double best_util = 0.0;
    for (const MecHostNode* node : hosts_) {
        if (!node->compute->can_admit(desc.virtual_compute)) continue;
        bool services_ok = true;
        for (const std::string& svc : desc.services_required) {
            if (config_.strict_service_placement) {
                services_ok = node->compute->available_services().count(svc) > 0;
            } else {
                services_ok = !registry_.discover(svc).empty();
            }
            if (!services_ok) break;
        }
        if (!services_ok) continue;
        const double util = node->compute->cpu_utilization();
        if (!best || util < best_util ||
            (util == best_util && node->compute->id() < best->compute->id())) {
            best = node;
            best_util = util;
        }
    }
    if (!best) {
        throw make_error(ErrorCode::placement_failed, "no feasible host for " + desc.app_name);
    }
    return best->compute->id();
}

Endpoint MecSystem::allocate_endpoint(int host_id) {
    const int n = endpoint_counter_++;
    return Endpoint{"10.0." + std::to_string(5 + host_id) + "." + std::to_string(2 + n),
                    static_cast<std::uint16_t>(4000 + n)};
}

AppEnv MecSystem::make_env(AppContext* ctx, ComputeHost* host) {
    AppEnv env;
    env.engine = &engine_;
    env.ran = &ran_;
    env.registry = &registry_;
    env.system = this;
    env.host = host;
    env.ctx = ctx;
    env.stats = &stats_;
    env.timeline = &timeline_;
    return env;
}

void MecSystem::create_app_context(const std::string& owner, const std::string& app_name,
                                   CreateResult done) {
    const AppDescriptor* desc = descriptor_by_name(app_name);
    if (!desc) {
        done(nullptr, "unknown-app");
        return;
    }

    auto ctx_ptr = std::make_unique<AppContext>();
    AppContext* ctx = ctx_ptr.get();
    ctx->context_id = "ctx-" + std::to_string(context_counter_++);
    ctx->app_name = app_name;
    ctx->descriptor = desc;
    ctx->owner = owner;

    if (desc->is_external()) {
        // The orchestrator returns the emulated endpoint instead of
        // instantiating anything; no admission is performed.
        ctx->app_endpoint = *desc->emulated_endpoint;
        ctx->transition(ContextState::instantiating);
        contexts_[ctx->context_id] = std::move(ctx_ptr);
        engine_.schedule_in(config_.instantiation_delay_s, [ctx, done]() {
            ctx->transition(ContextState::running);
            done(ctx, {});
        });
        return;
    }

    int host_id = -1;
    try {
        host_id = choose_best_mec_host(*desc);
    } catch (const SimError& e) {
        done(nullptr, error_code_name(e.code()));
        return;
    }
    MecHostNode* node = host_node(host_id);
    const AdmissionResult admission =
        node->compute->admit(ctx->context_id, desc->virtual_compute);
    if (!admission.accepted) {
        done(nullptr, "placement-failed");
        return;
    }
    ctx->host_id = host_id;
    ctx->transition(ContextState::instantiating);
    contexts_[ctx->context_id] = std::move(ctx_ptr);

    engine_.schedule_in(config_.instantiation_delay_s, [this, ctx, node, done]() {
        ctx->app_endpoint = allocate_endpoint(ctx->host_id);
        auto fit = factories_.find(ctx->descriptor->app_provider);
        if (fit == factories_.end()) {
            node->compute->release(ctx->context_id);
            ctx->transition(ContextState::terminated);
            done(nullptr, "unknown-app");
            return;
        }
        ctx->instance = fit->second(make_env(ctx, node->compute.get()));
        ctx->transition(ContextState::running);
        ctx->instance->on_start();
        done(ctx, {});
    });
}

void MecSystem::delete_app_context(const std::string& context_id,
                                   std::function<void(bool, const std::string&)> done) {
    AppContext* ctx = context(context_id);
    if (!ctx || ctx->state != ContextState::running) {
        done(false, "unknown-context");
        return;
    }
    ctx->transition(ContextState::terminating);
    engine_.schedule_in(config_.termination_delay_s, [this, ctx, done]() {
        if (ctx->instance) {
            ctx->instance->on_stop();
            ctx->instance.reset();
            host_node(ctx->host_id)->compute->release(ctx->context_id);
        }
        ctx->transition(ContextState::terminated);
        done(true, {});
    });
}

AppContext* MecSystem::join_existing(const std::string& owner, const std::string& app_name) {
    (void)owner;
    for (auto& [id, ctx] : contexts_) {
        if (ctx->app_name == app_name && ctx->state == ContextState::running &&
            ctx->descriptor->joinable) {
            return ctx.get();
        }
    }
    throw make_error(ErrorCode::no_running_instance, app_name);
}

void MecSystem::device_app_handle(const std::string& owner, const std::string& datagram,
                                  std::function<void(std::string)> reply) {
    std::istringstream ss(datagram);
    std::string verb, name, extra;
    ss >> verb >> name;
    if (ss >> extra || name.empty() || (verb != "START" && verb != "STOP")) {
        reply("NACK unknown-command");
        return;
    }

    if (verb == "START") {
        const AppDescriptor* desc = descriptor_by_name(name);
        if (desc && desc->joinable) {
            try {
                AppContext* existing = join_existing(owner, name);
                reply("ACK " + existing->app_endpoint.str());
                return;
            } catch (const SimError&) {
                // no instance yet, fall through to instantiation
            }
        }
        create_app_context(owner, name, [reply](AppContext* ctx, const std::string& err) {
            if (ctx) {
                reply("ACK " + ctx->app_endpoint.str());
            } else {
                reply("NACK " + err);
            }
        });
        return;
    }

    // STOP: terminate the caller's running context for that app.
    for (auto& [id, ctx] : contexts_) {
        if (ctx->app_name == name && ctx->owner == owner &&
            ctx->state == ContextState::running) {
            delete_app_context(id, [reply](bool ok, const std::string& err) {
                reply(ok ? "ACK" : "NACK " + err);
            });
            return;
        }
    }
    reply("NACK no-context");
}

AppContext* MecSystem::context(const std::string& context_id) {
    auto it = contexts_.find(context_id);
    return it == contexts_.end() ? nullptr : it->second.get();
}

AppContext* MecSystem::context_by_endpoint(const Endpoint& ep) {
    for (auto& [id, ctx] : contexts_) {
        if (ctx->app_endpoint.ip == ep.ip && ctx->app_endpoint.port == ep.port) {
            return ctx.get();
        }
    }
    return nullptr;
}

std::vector<AppContext*> MecSystem::all_contexts() {
    std::vector<AppContext*> out;
    for (auto& [id, ctx] : contexts_) out.push_back(ctx.get());
    return out;
}

void MecSystem::register_ue_app(const std::string& ue_id,
                                std::function<void(const std::string&)> on_message) {
    ue_apps_[ue_id] = std::move(on_message);
}

bool MecSystem::ue_send_to_app(const std::string& ue_id, const Endpoint& app_endpoint,
                               std::string payload) {
    AppContext* ctx = context_by_endpoint(app_endpoint);
    if (!ctx || ctx->state != ContextState::running || !ctx->instance) return false;
    return ran_.send(ue_id, Direction::uplink, payload.size(),
                     [ctx, ue_id, payload = std::move(payload)]() {
                         if (ctx->instance) ctx->instance->on_ue_message(ue_id, payload);
                     });
}

bool MecSystem::app_send_to_ue(const std::string& ue_id, std::string payload,
                               std::function<void()> delivered) {
    auto it = ue_apps_.find(ue_id);
    if (it == ue_apps_.end()) return false;
    return ran_.send(ue_id, Direction::downlink, payload.size(),
                     [this, ue_id, payload = std::move(payload),
                      delivered = std::move(delivered)]() {
                         auto jt = ue_apps_.find(ue_id);
                         if (jt != ue_apps_.end()) jt->second(payload);
                         if (delivered) delivered();
                     });
}

void MecSystem::ue_device_app_request(const std::string& ue_id, const std::string& datagram,
                                      std::function<void(std::string)> on_reply) {
    ran_.send(ue_id, Direction::uplink, datagram.size(),
              [this, ue_id, datagram, on_reply = std::move(on_reply)]() {
                  device_app_handle(ue_id, datagram, [this, ue_id,
                                                      on_reply](std::string reply) {
                      ran_.send(ue_id, Direction::downlink, reply.size(),
                                [reply, on_reply]() { on_reply(reply); });
                  });
              });
}

const ServiceDescriptor* AppEnv::discover_one(const std::string& service_name) const {
    auto matches = registry->discover(service_name, ctx ? ctx->host_id : -1);
    return matches.empty() ? nullptr : matches.front();
}

void AppEnv::service_request(const ServiceDescriptor& desc, json doc, const std::string& kind,
                             std::function<void(json)> cb, bool foreground) const {
    MecService* svc = registry->resolve(desc.name, desc.host_id);
    if (!svc) {
        if (cb) cb(json{{"error", "unknown-service"}, {"detail", desc.name}});
        return;
    }
    MecHostNode* node = system->host_node(desc.host_id);
    const double hop = node ? node->platform_latency_s : 0.0;
    auto respond = [engine = engine, hop, cb = std::move(cb)](json resp) {
        if (!cb) return;
        if (hop > 0.0) {
            engine->schedule_in(hop, [cb, resp = std::move(resp)]() { cb(resp); });
        } else {
            cb(std::move(resp));
        }
    };
    if (hop > 0.0) {
        engine->schedule_in(hop, [svc, doc = std::move(doc), kind, foreground, respond]() {
            svc->request(doc, kind, foreground, respond);
        });
    } else {
        svc->request(std::move(doc), kind, foreground, respond);
    }
}

SimTime AppEnv::compute(double instructions, std::function<void()> done) const {
    return host->compute(ctx->context_id, instructions, std::move(done));
}

bool AppEnv::send_to_ue(const std::string& ue_id, std::string payload,
                        std::function<void()> delivered) const {
    return system->app_send_to_ue(ue_id, std::move(payload), std::move(delivered));
}

} // namespace mecsim
