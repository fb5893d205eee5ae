#include "mecsim/services.hpp"

#include <algorithm>

namespace mecsim {

json ServiceDescriptor::to_json() const {
    return json{{"name", name},
                {"hostId", host_id},
                {"endpoint", {{"ipAddress", endpoint.ip}, {"port", endpoint.port}}},
                {"version", version}};
}

void ServiceRegistry::register_service(const ServiceDescriptor& desc, MecService* service) {
    const auto key = std::make_pair(desc.name, desc.host_id);
    if (entries_.count(key)) {
        throw make_error(ErrorCode::duplicate_registration,
                         desc.name + " on host " + std::to_string(desc.host_id));
    }
    entries_[key] = Entry{desc, service};
}

void ServiceRegistry::unregister_host(int host_id) {
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->first.second == host_id) {
            it = entries_.erase(it);
        } else {
            ++it;
        }
    }
}

std::vector<const ServiceDescriptor*> ServiceRegistry::discover(const std::string& name,
                                                                int requesting_host) const {
    std::vector<const ServiceDescriptor*> out;
    for (const auto& [key, entry] : entries_) {
        if (key.first == name) out.push_back(&entry.desc);
    }
    std::stable_sort(out.begin(), out.end(),
                     [requesting_host](const ServiceDescriptor* a, const ServiceDescriptor* b) {
                         const bool la = a->host_id == requesting_host;
                         const bool lb = b->host_id == requesting_host;
                         if (la != lb) return la;
                         return a->host_id < b->host_id;
                     });
    return out;
}

std::vector<const ServiceDescriptor*> ServiceRegistry::all() const {
    std::vector<const ServiceDescriptor*> out;
    for (const auto& [key, entry] : entries_) out.push_back(&entry.desc);
    return out;
}

MecService* ServiceRegistry::resolve(const std::string& name, int host_id) const {
    auto it = entries_.find({name, host_id});
    return it == entries_.end() ? nullptr : it->second.service;
}

MecService::MecService(Engine& engine, ServiceDescriptor desc, ServiceTimeModel model,
                       std::optional<std::size_t> capacity)
    : engine_(engine), desc_(std::move(desc)),
      queue_(engine, desc_.name + "@" + std::to_string(desc_.host_id), std::move(model),
             capacity) {}

void MecService::request(json doc, const std::string& kind, bool foreground,
                         std::function<void(json)> cb) {
    ServiceJob job;
    job.kind = kind;
    job.is_foreground = foreground;
    job.on_complete = [this, doc = std::move(doc), cb = std::move(cb)](SimTime) {
        json response;
        try {
            response = handle(doc);
        } catch (const SimError& e) {
            response = json{{"error", error_code_name(e.code())}, {"detail", e.what()}};
        } catch (const std::exception& e) {
            // malformed documents from external clients must not kill the loop
            response = json{{"error", "parse-error"}, {"detail", e.what()}};
        }
        if (cb) cb(std::move(response));
    };
    queue_.submit(std::move(job));
}

void MecService::spawn_background_requesters(std::size_t count, double each_lambda) {
    queue_.explicit_background_population(count, each_lambda, [this](std::size_t) {
        ServiceJob job;
        job.kind = "background";
        // Full document fidelity: the requester serializes its query, the
        // server decodes it, and the response goes back the same way.
        job.on_complete = [this, wire_request = background_request_doc().dump()](SimTime) {
            json response;
            try {
                response = handle(json::parse(wire_request));
            } catch (const SimError& e) {
                response = json{{"error", error_code_name(e.code())}, {"detail", e.what()}};
            }
            const json decoded = json::parse(response.dump());
            (void)decoded;
        };
        return job;
    });
}

void MecService::push_notification(json payload, std::function<void(const json&)> deliver) {
    ServiceJob job;
    job.is_notification = true;
    job.kind = "notification";
    job.on_complete = [payload = std::move(payload),
                       deliver = std::move(deliver)](SimTime) {
        if (deliver) deliver(payload);
    };
    queue_.submit(std::move(job));
}

namespace {

Aggregator aggregator_from_json(const json& doc) {
    Aggregator agg;
    if (!doc.is_object()) return agg;
    const std::string kind = doc.value("kind", "average");
    if (kind == "average") {
        agg.kind = Aggregator::Kind::average;
    } else if (kind == "moving-average") {
        agg.kind = Aggregator::Kind::moving_average;
        agg.window_s = doc.value("window_s", 1.0);
    } else if (kind == "last-sample") {
        agg.kind = Aggregator::Kind::last_sample;
    } else {
        throw make_error(ErrorCode::validation_error, "unknown aggregator " + kind);
    }
    return agg;
}

const char* kAllMeasures[] = {"dl_delay",      "ul_delay",       "dl_throughput",
                              "ul_throughput", "active_ue_dl",   "active_ue_ul",
                              "data_volume_dl", "data_volume_ul"};

} // namespace

json RnisService::handle(const json& request) {
    const Aggregator agg = aggregator_from_json(request.value("aggregator", json::object()));
    std::vector<std::string> measures;
    if (request.contains("measures")) {
        for (const auto& m : request.at("measures")) measures.push_back(m.get<std::string>());
    } else {
        for (const char* m : kAllMeasures) measures.emplace_back(m);
    }

    json items = json::array();
    auto emit = [&](int cell_id, const std::optional<std::string>& ue_id) {
        json entry;
        entry["cellId"] = cell_id;
        if (ue_id) entry["ueId"] = *ue_id;
        json values = json::object();
        for (const std::string& m : measures) {
            try {
                values[m] = ran_.query_l2(cell_id, ue_id, m, agg);
            } catch (const SimError& e) {
                if (e.code() != ErrorCode::empty_history) throw;
                values[m] = nullptr;  // no samples for this measure scope
            }
        }
        entry["measures"] = std::move(values);
        items.push_back(std::move(entry));
    };

    bool scoped = false;
    if (request.contains("cellIds")) {
        scoped = true;
        for (const auto& c : request.at("cellIds")) {
            const int cell_id = c.get<int>();
            if (!ran_.has_cell(cell_id)) {
                throw make_error(ErrorCode::unknown_scope, "cell " + std::to_string(cell_id));
            }
            emit(cell_id, std::nullopt);
        }
    }
    if (request.contains("ueIds")) {
        scoped = true;
        for (const auto& u : request.at("ueIds")) {
            const std::string ue = u.get<std::string>();
            if (!ran_.has_ue(ue)) throw make_error(ErrorCode::unknown_scope, "ue " + ue);
            const auto cell = ran_.serving_cell(ue);
            if (!cell) throw make_error(ErrorCode::ue_not_associated, ue);
            emit(*cell, ue);
        }
    }
    if (!scoped) throw make_error(ErrorCode::unknown_scope, "empty layer2_meas scope");
    return json{{"layer2Measures", std::move(items)}};
}

ZoneDirection zone_direction_from_string(const std::string& s) {
    if (s == "entering") return ZoneDirection::entering;
    if (s == "leaving") return ZoneDirection::leaving;
    throw make_error(ErrorCode::validation_error, "direction must be entering|leaving");
}

const char* to_string(ZoneDirection d) {
    return d == ZoneDirection::entering ? "entering" : "leaving";
}

bool LocationService::inside_zone(const AreaSubscription& sub) const {
    // Closed disc: the boundary counts as inside.
    return distance(ran_.position(sub.ue_id), sub.center) <= sub.radius;
}

std::uint64_t LocationService::subscribe(AreaSubscription sub) {
    if (!(sub.radius > 0.0)) {
        throw make_error(ErrorCode::invalid_radius, std::to_string(sub.radius));
    }
    if (!ran_.has_ue(sub.ue_id)) throw make_error(ErrorCode::unknown_ue, sub.ue_id);
    sub.sub_id = next_sub_id_++;
    sub.last_inside = inside_zone(sub);
    sub.active = true;
    if (sink_resolver_) {
        sinks_[sub.sub_id] = sink_resolver_(sub.sub_id, sub.callback_uri);
    }
    subs_[sub.sub_id] = std::move(sub);
    return next_sub_id_ - 1;
}

void LocationService::modify_subscription(std::uint64_t sub_id, std::optional<Position> center,
                                          std::optional<double> radius,
                                          std::optional<ZoneDirection> direction) {
    auto it = subs_.find(sub_id);
    if (it == subs_.end()) {
        throw make_error(ErrorCode::unknown_subscription, std::to_string(sub_id));
    }
    AreaSubscription& sub = it->second;
    if (radius && !(*radius > 0.0)) {
        throw make_error(ErrorCode::invalid_radius, std::to_string(*radius));
    }
    if (center) sub.center = *center;
    if (radius) sub.radius = *radius;
    if (direction) sub.direction = *direction;
    sub.last_inside = inside_zone(sub);
}

void LocationService::delete_subscription(std::uint64_t sub_id) {
    if (!subs_.erase(sub_id)) {
        throw make_error(ErrorCode::unknown_subscription, std::to_string(sub_id));
    }
    sinks_.erase(sub_id);
}

void LocationService::disable_subscription(std::uint64_t sub_id) {
    auto it = subs_.find(sub_id);
    if (it != subs_.end()) it->second.active = false;
}

const AreaSubscription* LocationService::subscription(std::uint64_t sub_id) const {
    auto it = subs_.find(sub_id);
    return it == subs_.end() ? nullptr : &it->second;
}

std::size_t LocationService::active_subscriptions() const { return subs_.size(); }

void LocationService::evaluate_subscriptions() {
    // Ascending sub_id; one notification per matching transition.
    for (auto& [id, sub] : subs_) {
        if (!sub.active) continue;
        const bool inside = inside_zone(sub);
        if (inside != sub.last_inside) {
            const ZoneDirection transition =
                inside ? ZoneDirection::entering : ZoneDirection::leaving;
            if (transition == sub.direction) {
                const Position pos = ran_.position(sub.ue_id);
                json payload{{"subscriptionId", id},
                             {"ueId", sub.ue_id},
                             {"event", to_string(transition)},
                             {"position", {{"x", pos.x}, {"y", pos.y}, {"z", pos.z}}},
                             {"timestamp", engine_.now().seconds()}};
                auto sink_it = sinks_.find(id);
                push_notification(std::move(payload),
                                  sink_it != sinks_.end() ? sink_it->second : nullptr);
            }
        }
        sub.last_inside = inside;
    }
}

json LocationService::user_list(const json& request) const {
    json users = json::array();
    json cells = json::array();
    auto emit_ue = [&](const std::string& ue) {
        const Position pos = ran_.position(ue);
        json entry{{"ueId", ue},
                   {"position", {{"x", pos.x}, {"y", pos.y}, {"z", pos.z}}},
                   {"timestamp", engine_.now().seconds()}};
        if (auto cell = ran_.serving_cell(ue)) entry["cellId"] = *cell;
        users.push_back(std::move(entry));
    };

    bool scoped = false;
    if (request.contains("ueIds")) {
        scoped = true;
        for (const auto& u : request.at("ueIds")) {
            const std::string ue = u.get<std::string>();
            if (!ran_.has_ue(ue)) throw make_error(ErrorCode::unknown_ue, ue);
            emit_ue(ue);
        }
    }
    if (request.contains("cellIds")) {
        scoped = true;
        for (const auto& c : request.at("cellIds")) {
            const int cell_id = c.get<int>();
            if (!ran_.has_cell(cell_id)) {
                throw make_error(ErrorCode::unknown_cell, std::to_string(cell_id));
            }
            const Position cp = ran_.cell_position(cell_id);
            cells.push_back(json{{"cellId", cell_id},
                                 {"position", {{"x", cp.x}, {"y", cp.y}, {"z", cp.z}}}});
            for (const std::string& ue : ran_.ues_in_cell(cell_id)) emit_ue(ue);
        }
    }
    if (!scoped) {
        for (const std::string& ue : ran_.ue_ids()) emit_ue(ue);
    }
    json out{{"userList", std::move(users)}};
    if (!cells.empty()) out["cellInfo"] = std::move(cells);
    return out;
}

json LocationService::handle(const json& request) {
    const std::string op = request.value("op", "get_users");
    if (op == "get_users") return user_list(request);
    if (op == "subscribe_area") {
        AreaSubscription sub;
        sub.ue_id = request.at("ueId").get<std::string>();
        const json& c = request.at("center");
        sub.center = Position{c.at("x").get<double>(), c.at("y").get<double>(),
                              c.at("z").get<double>()};
        sub.radius = request.at("radius").get<double>();
        sub.direction = zone_direction_from_string(request.at("direction").get<std::string>());
        sub.callback_uri = request.value("callbackUri", "");
        const std::uint64_t id = subscribe(std::move(sub));
        return json{{"subscriptionId", id}};
    }
    if (op == "modify_subscription") {
        std::optional<Position> center;
        std::optional<double> radius;
        std::optional<ZoneDirection> direction;
        if (request.contains("center")) {
            const json& c = request.at("center");
            center = Position{c.at("x").get<double>(), c.at("y").get<double>(),
                              c.at("z").get<double>()};
        }
        if (request.contains("radius")) radius = request.at("radius").get<double>();
        if (request.contains("direction")) {
            direction = zone_direction_from_string(request.at("direction").get<std::string>());
        }
        const std::uint64_t id = request.at("subscriptionId").get<std::uint64_t>();
        modify_subscription(id, center, radius, direction);
        return json{{"subscriptionId", id}, {"modified", true}};
    }
    if (op == "delete_subscription") {
        const std::uint64_t id = request.at("subscriptionId").get<std::uint64_t>();
        delete_subscription(id);
        return json{{"subscriptionId", id}, {"deleted", true}};
    }
    throw make_error(ErrorCode::validation_error, "unknown location op " + op);
}

} // namespace mecsim
