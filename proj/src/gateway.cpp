#include "mecsim/gateway.hpp"

#include "httplib.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <thread>

namespace mecsim {

namespace {

int map_error_status(const std::string& code) {
    if (code == "unknown-app" || code == "unknown-context" || code == "unknown-subscription" ||
        code == "unknown-ue" || code == "unknown-cell" || code == "unknown-scope" ||
        code == "no-running-instance" || code == "unknown-service") {
        return 404;
    }
    if (code == "invalid-radius" || code == "parse-error" || code == "validation-error" ||
        code == "malformed-descriptor") {
        return 400;
    }
    if (code == "placement-failed") return 403;
    if (code == "queue-overflow" || code == "mode-error" || code == "overrun") return 503;
    return 500;
}

bool parse_http_url(const std::string& url, std::string& host, int& port, std::string& path) {
    const std::string prefix = "http://";
    if (url.rfind(prefix, 0) != 0) return false;
    const std::string rest = url.substr(prefix.size());
    const auto slash = rest.find('/');
    const std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    path = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = hostport.find(':');
    host = colon == std::string::npos ? hostport : hostport.substr(0, colon);
    port = colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1));
    return !host.empty();
}

std::string addr_to_string(const sockaddr_in& addr) {
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof buf);
    return std::string(buf) + ":" + std::to_string(ntohs(addr.sin_port));
}

bool endpoint_to_addr(const Endpoint& ep, sockaddr_in& out) {
    out = {};
    out.sin_family = AF_INET;
    out.sin_port = htons(ep.port);
    return inet_pton(AF_INET, ep.ip.c_str(), &out.sin_addr) == 1;
}

std::optional<Endpoint> parse_endpoint(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) return std::nullopt;
    try {
        return Endpoint{s.substr(0, colon),
                        static_cast<std::uint16_t>(std::stoi(s.substr(colon + 1)))};
    } catch (...) {
        return std::nullopt;
    }
}

} // namespace

struct Gateway::Impl {
    World& world;
    Config cfg;

    httplib::Server http;
    std::thread http_thread;
    int http_port = 0;

    int udp_fd = -1;
    int udp_port = 0;
    std::thread udp_thread;

    // Notification callback delivery.
    struct CallbackTask {
        std::string uri;
        json payload;
        LocationService* service = nullptr;
        std::uint64_t sub_id = 0;
    };
    std::mutex cb_mutex;
    std::condition_variable cb_cv;
    std::deque<CallbackTask> cb_queue;
    std::thread cb_thread;

    // UDP relays between external UE apps and external MEC apps.
    struct Relay {
        int fd = -1;
        int port = 0;
        std::string ue;
        std::string ctx_id;
        sockaddr_in app_addr{};   // the external MEC app endpoint
        sockaddr_in ue_addr{};    // learned from the first uplink datagram
        bool ue_known = false;    // relay-thread state
    };
    std::mutex relay_mutex;
    std::deque<Relay> relays;
    int wake_pipe[2] = {-1, -1};
    std::thread relay_thread;

    std::atomic<bool> running{false};

    Impl(World& w, Config c) : world(w), cfg(std::move(c)) {}

    using Respond = std::function<void(int, json)>;

    // Hands `work` to the event loop and parks until it responds.
    std::pair<int, json> with_sim(std::function<void(Respond)> work) {
        Engine& eng = world.engine;
        if (!eng.realtime_active()) {
            return {503, json{{"error", "mode-error"}, {"detail", "engine not in real-time mode"}}};
        }
        if (eng.current_lag_s() > cfg.overrun_503_threshold_s) {
            return {503, json{{"error", "overrun"}, {"detail", "event loop is behind wall clock"}}};
        }
        auto promise = std::make_shared<std::promise<std::pair<int, json>>>();
        auto future = promise->get_future();
        Respond respond = [promise](int status, json body) {
            promise->set_value({status, std::move(body)});
        };
        try {
            eng.post([work = std::move(work), respond]() mutable {
                try {
                    work(respond);
                } catch (const SimError& e) {
                    respond(map_error_status(error_code_name(e.code())),
                            json{{"error", error_code_name(e.code())}, {"detail", e.what()}});
                }
            });
        } catch (const SimError&) {
            return {503, json{{"error", "mode-error"}}};
        }
        const auto deadline = std::chrono::duration<double>(cfg.http_timeout_s);
        if (future.wait_for(deadline) != std::future_status::ready) {
            return {504, json{{"error", "timeout"}}};
        }
        return future.get();
    }

    void send_json(httplib::Response& res, const std::pair<int, json>& result) {
        res.status = result.first;
        res.set_content(result.second.is_null() ? "{}" : result.second.dump(),
                        "application/json");
    }

    LocationService* location_service() {
        auto found = world.registry.discover("LocationService");
        if (found.empty()) return nullptr;
        return dynamic_cast<LocationService*>(
            world.registry.resolve(found.front()->name, found.front()->host_id));
    }

    MecService* rnis_service() {
        auto found = world.registry.discover("RNIS");
        if (found.empty()) return nullptr;
        return world.registry.resolve(found.front()->name, found.front()->host_id);
    }

    // Forwards a document through the named service's queue and maps the
    // response envelope onto an HTTP status.
    std::pair<int, json> service_call(const char* which, json doc, const std::string& kind,
                                      int ok_status) {
        return with_sim([this, which, doc = std::move(doc), kind, ok_status](Respond respond) {
            MecService* svc = std::string(which) == "location"
                                  ? static_cast<MecService*>(location_service())
                                  : rnis_service();
            if (!svc) {
                respond(404, json{{"error", "unknown-service"}, {"detail", which}});
                return;
            }
            svc->request(std::move(doc), kind, true, [respond, ok_status](json r) {
                if (r.contains("error")) {
                    // read the code before r is moved into the response
                    const std::string code = r.at("error").get<std::string>();
                    respond(map_error_status(code), std::move(r));
                } else {
                    respond(ok_status, std::move(r));
                }
            });
        });
    }

    void setup_routes();
    void setup_callback_sinks();
    void run_udp();
    void run_relay();
    void run_callbacks();
    void handle_device_datagram(const std::string& text, sockaddr_in peer);
    int ensure_relay(const AppContext& ctx);
    void enqueue_callback(LocationService* svc, std::uint64_t sub_id, const std::string& uri,
                          const json& payload);
};

void Gateway::Impl::setup_routes() {
    http.Post("/v1/mx2/app_contexts", [this](const httplib::Request& req,
                                             httplib::Response& res) {
        json body = json::object();
        if (!req.body.empty()) {
            body = json::parse(req.body, nullptr, false);
            if (body.is_discarded()) {
                send_json(res, {400, json{{"error", "parse-error"}}});
                return;
            }
        }
        if (!body.contains("appName")) {
            send_json(res, {400, json{{"error", "malformed-descriptor"},
                                      {"detail", "appName required"}}});
            return;
        }
        const std::string app_name = body.at("appName").get<std::string>();
        const std::string owner =
            "mx2:" + body.value("deviceAppId", req.remote_addr + ":" +
                                                   std::to_string(req.remote_port));
        send_json(res, with_sim([this, owner, app_name](Respond respond) {
            world.system().create_app_context(
                owner, app_name, [respond](AppContext* ctx, const std::string& err) {
                    if (!ctx) {
                        respond(map_error_status(err), json{{"error", err}});
                        return;
                    }
                    respond(201, json{{"contextId", ctx->context_id},
                                      {"appName", ctx->app_name},
                                      {"state", to_string(ctx->state)},
                                      {"appEndpoint",
                                       {{"ipAddress", ctx->app_endpoint.ip},
                                        {"port", ctx->app_endpoint.port}}}});
                });
        }));
    });

    http.Delete(R"(/v1/mx2/app_contexts/([^/]+))", [this](const httplib::Request& req,
                                                          httplib::Response& res) {
        const std::string id = req.matches[1];
        send_json(res, with_sim([this, id](Respond respond) {
            world.system().delete_app_context(
                id, [respond](bool ok, const std::string& err) {
                    if (ok) {
                        respond(204, json::object());
                    } else {
                        respond(404, json{{"error", err}});
                    }
                });
        }));
    });

    http.Get("/v1/mp1/services", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, with_sim([this](Respond respond) {
            json items = json::array();
            for (const ServiceDescriptor* d : world.registry.all()) {
                // Externally every service is reachable through this gateway.
                items.push_back(json{{"name", d->name},
                                     {"hostId", d->host_id},
                                     {"version", d->version},
                                     {"endpoint",
                                      {{"ipAddress", cfg.bind_ip}, {"port", http_port}}}});
            }
            respond(200, json{{"services", std::move(items)}});
        }));
    });

    http.Get("/v1/rni/queries/layer2_meas", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
        json doc = json::object();
        json cells = json::array(), ues = json::array(), measures = json::array();
        for (std::size_t i = 0; i < req.get_param_value_count("cell_id"); ++i) {
            cells.push_back(std::stoi(req.get_param_value("cell_id", i)));
        }
        for (std::size_t i = 0; i < req.get_param_value_count("ue_id"); ++i) {
            ues.push_back(req.get_param_value("ue_id", i));
        }
        for (std::size_t i = 0; i < req.get_param_value_count("measure"); ++i) {
            measures.push_back(req.get_param_value("measure", i));
        }
        if (!cells.empty()) doc["cellIds"] = cells;
        if (!ues.empty()) doc["ueIds"] = ues;
        if (!measures.empty()) doc["measures"] = measures;
        if (req.has_param("aggregator")) {
            json agg{{"kind", req.get_param_value("aggregator")}};
            if (req.has_param("window_s")) {
                agg["window_s"] = std::stod(req.get_param_value("window_s"));
            }
            doc["aggregator"] = agg;
        }
        send_json(res, service_call("rnis", std::move(doc), "GET layer2_meas", 200));
    });

    http.Get("/v1/location/queries/users", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
        json doc{{"op", "get_users"}};
        json cells = json::array(), ues = json::array();
        for (std::size_t i = 0; i < req.get_param_value_count("cell_id"); ++i) {
            cells.push_back(std::stoi(req.get_param_value("cell_id", i)));
        }
        for (std::size_t i = 0; i < req.get_param_value_count("ue_id"); ++i) {
            ues.push_back(req.get_param_value("ue_id", i));
        }
        if (!cells.empty()) doc["cellIds"] = cells;
        if (!ues.empty()) doc["ueIds"] = ues;
        send_json(res, service_call("location", std::move(doc), "GET users", 200));
    });

    http.Post("/v1/location/subscriptions/area", [this](const httplib::Request& req,
                                                        httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            send_json(res, {400, json{{"error", "parse-error"}}});
            return;
        }
        body["op"] = "subscribe_area";
        auto result = service_call("location", std::move(body), "POST subscription", 201);
        if (result.first == 201) {
            res.set_header("Location",
                           "/v1/location/subscriptions/area/" +
                               std::to_string(
                                   result.second.value("subscriptionId", std::uint64_t{0})));
        }
        send_json(res, result);
    });

    http.Put(R"(/v1/location/subscriptions/area/(\d+))", [this](const httplib::Request& req,
                                                                httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            send_json(res, {400, json{{"error", "parse-error"}}});
            return;
        }
        body["op"] = "modify_subscription";
        body["subscriptionId"] = std::stoull(req.matches[1]);
        send_json(res, service_call("location", std::move(body), "PUT subscription", 200));
    });

    http.Delete(R"(/v1/location/subscriptions/area/(\d+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                    json body{{"op", "delete_subscription"},
                              {"subscriptionId", std::stoull(req.matches[1])}};
                    send_json(res, service_call("location", std::move(body),
                                                "DELETE subscription", 204));
                });
}

void Gateway::Impl::setup_callback_sinks() {
    for (const ServiceDescriptor* d : world.registry.all()) {
        if (d->name != "LocationService") continue;
        auto* loc = dynamic_cast<LocationService*>(world.registry.resolve(d->name, d->host_id));
        if (!loc) continue;
        auto install = [this, loc]() {
            loc->set_sink_resolver([this, loc](std::uint64_t sub_id, const std::string& uri)
                                       -> LocationService::NotificationSink {
                if (uri.rfind("http://", 0) == 0) {
                    return [this, loc, sub_id, uri](const json& payload) {
                        enqueue_callback(loc, sub_id, uri, payload);
                    };
                }
                return world.resolve_internal_sink(uri);
            });
        };
        // Services are owned by the event loop; when it is already running
        // the mutation has to go through the ingress channel. Ingress is
        // FIFO, so the resolver lands before any request this gateway serves.
        if (world.engine.realtime_active()) {
            world.engine.post(install);
        } else {
            install();
        }
    }
}

void Gateway::Impl::enqueue_callback(LocationService* svc, std::uint64_t sub_id,
                                     const std::string& uri, const json& payload) {
    {
        std::lock_guard<std::mutex> lock(cb_mutex);
        cb_queue.push_back(CallbackTask{uri, payload, svc, sub_id});
    }
    cb_cv.notify_one();
}

void Gateway::Impl::run_callbacks() {
    while (true) {
        CallbackTask task;
        {
            std::unique_lock<std::mutex> lock(cb_mutex);
            cb_cv.wait(lock, [this]() { return !cb_queue.empty() || !running.load(); });
            if (!running.load() && cb_queue.empty()) return;
            task = std::move(cb_queue.front());
            cb_queue.pop_front();
        }

        std::string host, path;
        int port = 0;
        bool delivered = false;
        if (parse_http_url(task.uri, host, port, path)) {
            for (int attempt = 0; attempt <= 3 && running.load(); ++attempt) {
                if (attempt > 0) std::this_thread::sleep_for(std::chrono::seconds(1));
                httplib::Client client(host, port);
                client.set_connection_timeout(2, 0);
                client.set_read_timeout(5, 0);
                auto res = client.Post(path, task.payload.dump(), "application/json");
                if (res && res->status >= 200 && res->status < 300) {
                    delivered = true;
                    break;
                }
            }
        }
        if (!delivered) {
            // Retry budget spent: disable the subscription on the loop thread.
            try {
                world.engine.post([svc = task.service, id = task.sub_id]() {
                    svc->disable_subscription(id);
                });
            } catch (const SimError&) {
                // engine already stopped; nothing to disable against
            }
        }
    }
}

void Gateway::Impl::handle_device_datagram(const std::string& text, sockaddr_in peer) {
    const std::string owner = "udp:" + addr_to_string(peer);
    auto deliver_reply = [this, peer](std::string reply) {
        // External MEC apps are reached through a relay that applies the
        // simulated transport delay; rewrite the ACK endpoint accordingly.
        if (reply.rfind("ACK ", 0) == 0) {
            if (auto ep = parse_endpoint(reply.substr(4))) {
                AppContext* ctx = world.system().context_by_endpoint(*ep);
                if (ctx && ctx->descriptor && ctx->descriptor->is_external()) {
                    const int relay_port = ensure_relay(*ctx);
                    if (relay_port > 0) {
                        reply = "ACK " + cfg.bind_ip + ":" + std::to_string(relay_port);
                    }
                }
            }
        }
        auto send = [this, peer, reply]() {
            ::sendto(udp_fd, reply.data(), reply.size(), 0,
                     reinterpret_cast<const sockaddr*>(&peer), sizeof peer);
        };
        if (!cfg.device_ue.empty() && world.ran.has_ue(cfg.device_ue)) {
            world.ran.send(cfg.device_ue, Direction::downlink, reply.size(), send);
        } else {
            send();
        }
    };

    auto handle = [this, owner, text, deliver_reply]() {
        world.system().device_app_handle(owner, text, deliver_reply);
    };
    if (!cfg.device_ue.empty() && world.ran.has_ue(cfg.device_ue)) {
        world.ran.send(cfg.device_ue, Direction::uplink, text.size(), handle);
    } else {
        handle();
    }
}

int Gateway::Impl::ensure_relay(const AppContext& ctx) {
    {
        std::lock_guard<std::mutex> lock(relay_mutex);
        for (const Relay& r : relays) {
            if (r.ctx_id == ctx.context_id) return r.port;
        }
    }
    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd < 0) return -1;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = 0;
    inet_pton(AF_INET, cfg.bind_ip.c_str(), &addr.sin_addr);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        return -1;
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);

    Relay relay;
    relay.fd = fd;
    relay.port = ntohs(addr.sin_port);
    relay.ue = cfg.device_ue;
    relay.ctx_id = ctx.context_id;
    if (!endpoint_to_addr(ctx.app_endpoint, relay.app_addr)) {
        ::close(fd);
        return -1;
    }
    {
        std::lock_guard<std::mutex> lock(relay_mutex);
        relays.push_back(relay);
    }
    const char wake = 'r';
    [[maybe_unused]] ssize_t n = ::write(wake_pipe[1], &wake, 1);
    return relay.port;
}

void Gateway::Impl::run_relay() {
    std::vector<pollfd> fds;
    char buf[65536];
    while (running.load()) {
        fds.clear();
        fds.push_back(pollfd{wake_pipe[0], POLLIN, 0});
        {
            std::lock_guard<std::mutex> lock(relay_mutex);
            for (const Relay& r : relays) fds.push_back(pollfd{r.fd, POLLIN, 0});
        }
        if (::poll(fds.data(), fds.size(), 200) <= 0) continue;
        if (fds[0].revents & POLLIN) {
            [[maybe_unused]] ssize_t n = ::read(wake_pipe[0], buf, sizeof buf);
        }
        for (std::size_t i = 1; i < fds.size(); ++i) {
            if (!(fds[i].revents & POLLIN)) continue;
            const std::size_t idx = i - 1;
            sockaddr_in from{};
            socklen_t from_len = sizeof from;
            const ssize_t n = ::recvfrom(fds[i].fd, buf, sizeof buf, 0,
                                         reinterpret_cast<sockaddr*>(&from), &from_len);
            if (n <= 0) continue;
            const std::string data(buf, static_cast<std::size_t>(n));

            Relay& relay = relays[idx];
            const bool from_app = from.sin_addr.s_addr == relay.app_addr.sin_addr.s_addr &&
                                  from.sin_port == relay.app_addr.sin_port;
            if (!from_app) {
                relay.ue_addr = from;
                relay.ue_known = true;
            }
            const sockaddr_in target = from_app ? relay.ue_addr : relay.app_addr;
            if (from_app && !relay.ue_known) continue;  // no UE peer yet
            const int fd = relay.fd;
            const std::string ue = relay.ue;
            const Direction dir = from_app ? Direction::downlink : Direction::uplink;
            try {
                world.engine.post([this, ue, dir, data, fd, target]() {
                    if (!world.ran.has_ue(ue)) return;
                    world.ran.send(ue, dir, data.size(), [fd, data, target]() {
                        ::sendto(fd, data.data(), data.size(), 0,
                                 reinterpret_cast<const sockaddr*>(&target), sizeof target);
                    });
                });
            } catch (const SimError&) {
                // not in real-time mode: relay traffic is dropped
            }
        }
    }
}

void Gateway::Impl::run_udp() {
    char buf[65536];
    while (running.load()) {
        pollfd pfd{udp_fd, POLLIN, 0};
        if (::poll(&pfd, 1, 200) <= 0) continue;
        sockaddr_in peer{};
        socklen_t peer_len = sizeof peer;
        const ssize_t n = ::recvfrom(udp_fd, buf, sizeof buf, 0,
                                     reinterpret_cast<sockaddr*>(&peer), &peer_len);
        if (n <= 0) continue;
        const std::string text(buf, static_cast<std::size_t>(n));
        try {
            world.engine.post([this, text, peer]() { handle_device_datagram(text, peer); });
        } catch (const SimError&) {
            const std::string nack = "NACK mode-error";
            ::sendto(udp_fd, nack.data(), nack.size(), 0,
                     reinterpret_cast<const sockaddr*>(&peer), sizeof peer);
        }
    }
}

Gateway::Gateway(World& world, Config config)
    : impl_(std::make_unique<Impl>(world, std::move(config))) {}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
    Impl& im = *impl_;
    if (im.running.exchange(true)) return;

    im.setup_routes();
    im.setup_callback_sinks();

    // HTTP
    if (im.cfg.http_port == 0) {
        im.http_port = im.http.bind_to_any_port(im.cfg.bind_ip);
    } else {
        im.http.bind_to_port(im.cfg.bind_ip, im.cfg.http_port);
        im.http_port = im.cfg.http_port;
    }
    im.http_thread = std::thread([&im]() { im.http.listen_after_bind(); });

    // relay + callback workers come up before any datagram can create a relay
    [[maybe_unused]] int rc = ::pipe(im.wake_pipe);
    im.relay_thread = std::thread([&im]() { im.run_relay(); });
    im.cb_thread = std::thread([&im]() { im.run_callbacks(); });

    // UDP device-app socket
    im.udp_fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(im.cfg.udp_port));
    inet_pton(AF_INET, im.cfg.bind_ip.c_str(), &addr.sin_addr);
    if (::bind(im.udp_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        throw make_error(ErrorCode::validation_error, "cannot bind gateway UDP port");
    }
    socklen_t len = sizeof addr;
    ::getsockname(im.udp_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    im.udp_port = ntohs(addr.sin_port);
    im.udp_thread = std::thread([&im]() { im.run_udp(); });
}

void Gateway::stop() {
    Impl& im = *impl_;
    if (!im.running.exchange(false)) return;
    im.http.stop();
    if (im.http_thread.joinable()) im.http_thread.join();
    if (im.udp_thread.joinable()) im.udp_thread.join();
    if (im.wake_pipe[1] >= 0) {
        const char wake = 'q';
        [[maybe_unused]] ssize_t n = ::write(im.wake_pipe[1], &wake, 1);
    }
    if (im.relay_thread.joinable()) im.relay_thread.join();
    im.cb_cv.notify_all();
    if (im.cb_thread.joinable()) im.cb_thread.join();
    if (im.udp_fd >= 0) ::close(im.udp_fd);
    for (const Impl::Relay& r : im.relays) ::close(r.fd);
    im.relays.clear();
    if (im.wake_pipe[0] >= 0) ::close(im.wake_pipe[0]);
    if (im.wake_pipe[1] >= 0) ::close(im.wake_pipe[1]);
    im.wake_pipe[0] = im.wake_pipe[1] = -1;
    im.udp_fd = -1;
}

int Gateway::http_port() const { return impl_->http_port; }
int Gateway::udp_port() const { return impl_->udp_port; }
std::string Gateway::base_url() const {
    return "http://" + impl_->cfg.bind_ip + ":" + std::to_string(impl_->http_port);
}

} // namespace mecsim
