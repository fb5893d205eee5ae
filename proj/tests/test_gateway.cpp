#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "httplib.h"

#include <arpa/inet.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <future>
#include <thread>

#include "mecsim/apps.hpp"
#include "mecsim/gateway.hpp"
#include "mecsim/mathstat.hpp"

using namespace mecsim;

namespace {

TransportProfile fast_transport() {
    TransportProfile p;
    p.dl = DelayDist{DelayDist::Kind::constant, 0.002};
    p.ul = DelayDist{DelayDist::Kind::constant, 0.002};
    return p;
}

struct RealtimeWorld {
    std::unique_ptr<World> world;
    std::thread engine_thread;

    explicit RealtimeWorld(double duration_s, double pace, double service_mean = 0.005) {
        world = std::make_unique<World>(7);
        world->add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
        register_builtin_app_factories(world->system());
        world->add_location_service(
            0, ServiceTimeModel{service_mean, ServiceTimeModel::Dist::exponential, nullptr});
        world->ran.add_cell(0, Position{0, 0, 0});
        world->ran.add_ue("u1", Position{5, 0, 0}, StationaryMobility{}, fast_transport());
        world->ran.start_updates(0.1);
        engine_thread = std::thread([this, duration_s, pace]() {
            world->engine.run_realtime(seconds(duration_s), pace);
        });
        while (!world->engine.realtime_active()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
    }

    ~RealtimeWorld() {
        world->engine.request_stop();
        if (engine_thread.joinable()) engine_thread.join();
    }
};

int open_udp_client(int timeout_ms) {
    const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
    timeval tv{};
    tv.tv_sec = timeout_ms / 1000;
    tv.tv_usec = (timeout_ms % 1000) * 1000;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    return fd;
}

std::string udp_roundtrip(int fd, const std::string& ip, int port, const std::string& msg) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    inet_pton(AF_INET, ip.c_str(), &addr.sin_addr);
    ::sendto(fd, msg.data(), msg.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    char buf[2048];
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    return n > 0 ? std::string(buf, static_cast<std::size_t>(n)) : std::string();
}

} // namespace

TEST_CASE("gateway refuses traffic when the engine is not in real-time mode") {
    World w(1);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    w.add_location_service(0, ServiceTimeModel{0.01, ServiceTimeModel::Dist::exponential,
                                               nullptr});
    Gateway gw(w, Gateway::Config{});
    gw.start();
    httplib::Client client("127.0.0.1", gw.http_port());
    auto res = client.Get("/v1/mp1/services");
    REQUIRE(res);
    CHECK(res->status == 503);
    CHECK(json::parse(res->body)["error"] == "mode-error");
    gw.stop();
}

TEST_CASE("service discovery and location queries over HTTP") {
    RealtimeWorld rt(20.0, 50.0);
    Gateway gw(*rt.world, Gateway::Config{});
    gw.start();
    httplib::Client client("127.0.0.1", gw.http_port());
    client.set_read_timeout(10, 0);

    auto services = client.Get("/v1/mp1/services");
    REQUIRE(services);
    REQUIRE(services->status == 200);
    const json list = json::parse(services->body);
    REQUIRE(list["services"].size() == 1);
    CHECK(list["services"][0]["name"] == "LocationService");
    CHECK(list["services"][0]["endpoint"]["port"] == gw.http_port());

    auto users = client.Get("/v1/location/queries/users?ue_id=u1");
    REQUIRE(users);
    REQUIRE(users->status == 200);
    const json doc = json::parse(users->body);
    REQUIRE(doc["userList"].size() == 1);
    CHECK(doc["userList"][0]["position"]["x"].get<double>() == doctest::Approx(5.0));

    auto missing = client.Get("/v1/location/queries/users?ue_id=ghost");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    gw.stop();
}

TEST_CASE("mx2 context lifecycle over HTTP") {
    RealtimeWorld rt(20.0, 50.0);
    AppDescriptor echo;
    echo.app_id = "echo";
    echo.app_name = "EchoApp";
    echo.app_provider = "Echo";
    echo.virtual_compute = ResourceVector{1e6, 0, 0};
    rt.world->system().onboard(echo);

    Gateway gw(*rt.world, Gateway::Config{});
    gw.start();
    httplib::Client client("127.0.0.1", gw.http_port());
    client.set_read_timeout(10, 0);

    auto created = client.Post("/v1/mx2/app_contexts",
                               json{{"appName", "EchoApp"}}.dump(), "application/json");
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const json ctx = json::parse(created->body);
    const std::string id = ctx["contextId"];
    CHECK(ctx["state"] == "running");
    CHECK(ctx["appEndpoint"]["ipAddress"].get<std::string>().rfind("10.0.", 0) == 0);

    auto unknown = client.Post("/v1/mx2/app_contexts",
                               json{{"appName", "NoSuchApp"}}.dump(), "application/json");
    REQUIRE(unknown);
    CHECK(unknown->status == 404);

    auto deleted = client.Delete("/v1/mx2/app_contexts/" + id);
    REQUIRE(deleted);
    CHECK(deleted->status == 204);
    auto again = client.Delete("/v1/mx2/app_contexts/" + id);
    REQUIRE(again);
    CHECK(again->status == 404);

    gw.stop();
}

TEST_CASE("area subscription notifies an HTTP callback when the UE crosses") {
    RealtimeWorld rt(30.0, 50.0, 0.002);
    // a second UE that walks into the zone
    rt.world->engine.post([&]() {
        rt.world->ran.add_ue("walker", Position{30, 0, 0}, LinearMobility{-20, 0, 0},
                             fast_transport());
    });

    // callback receiver
    httplib::Server receiver;
    std::mutex mtx;
    std::vector<json> callbacks;
    receiver.Post("/cb", [&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard<std::mutex> lock(mtx);
        callbacks.push_back(json::parse(req.body));
        res.set_content("{}", "application/json");
    });
    const int cb_port = receiver.bind_to_any_port("127.0.0.1");
    std::thread cb_thread([&]() { receiver.listen_after_bind(); });

    Gateway gw(*rt.world, Gateway::Config{});
    gw.start();
    httplib::Client client("127.0.0.1", gw.http_port());
    client.set_read_timeout(10, 0);

    const json sub{{"ueId", "walker"},
                   {"center", {{"x", 0}, {"y", 0}, {"z", 0}}},
                   {"radius", 5.0},
                   {"direction", "entering"},
                   {"callbackUri", "http://127.0.0.1:" + std::to_string(cb_port) + "/cb"}};
    auto created = client.Post("/v1/location/subscriptions/area", sub.dump(),
                               "application/json");
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const std::uint64_t sub_id = json::parse(created->body)["subscriptionId"];
    CHECK(sub_id >= 1);

    // walker reaches the zone in ~1.3 simulated seconds = tens of wall ms
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    for (;;) {
        {
            std::lock_guard<std::mutex> lock(mtx);
            if (!callbacks.empty()) break;
        }
        REQUIRE(std::chrono::steady_clock::now() < deadline);
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    {
        std::lock_guard<std::mutex> lock(mtx);
        CHECK(callbacks[0]["event"] == "entering");
        CHECK(callbacks[0]["ueId"] == "walker");
        CHECK(callbacks[0]["subscriptionId"].get<std::uint64_t>() == sub_id);
        CHECK(callbacks[0].contains("position"));
        CHECK(callbacks[0].contains("timestamp"));
    }

    auto modified = client.Put("/v1/location/subscriptions/area/" + std::to_string(sub_id),
                               json{{"direction", "leaving"}}.dump(), "application/json");
    REQUIRE(modified);
    CHECK(modified->status == 200);

    auto removed = client.Delete("/v1/location/subscriptions/area/" + std::to_string(sub_id));
    REQUIRE(removed);
    CHECK(removed->status == 204);

    gw.stop();
    receiver.stop();
    cb_thread.join();
}

TEST_CASE("device-app UDP round trip includes the bound UE's transport delay") {
    RealtimeWorld rt(20.0, 20.0);
    AppDescriptor echo;
    echo.app_id = "echo";
    echo.app_name = "EchoApp";
    echo.app_provider = "Echo";
    echo.virtual_compute = ResourceVector{1e6, 0, 0};
    rt.world->system().onboard(echo);

    Gateway::Config cfg;
    cfg.device_ue = "u1";
    Gateway gw(*rt.world, cfg);
    gw.start();

    const int fd = open_udp_client(8000);
    const std::string ack = udp_roundtrip(fd, "127.0.0.1", gw.udp_port(), "START EchoApp");
    CHECK(ack.rfind("ACK 10.0.", 0) == 0);

    const std::string nack = udp_roundtrip(fd, "127.0.0.1", gw.udp_port(), "FROB X");
    CHECK(nack == "NACK unknown-command");

    const std::string stopped = udp_roundtrip(fd, "127.0.0.1", gw.udp_port(), "STOP EchoApp");
    CHECK(stopped == "ACK");

    const std::string no_ctx = udp_roundtrip(fd, "127.0.0.1", gw.udp_port(), "STOP EchoApp");
    CHECK(no_ctx == "NACK no-context");
    ::close(fd);
    gw.stop();
}

TEST_CASE("unreachable callbacks are retried, then the subscription is disabled") {
    RealtimeWorld rt(400.0, 50.0, 0.002);
    rt.world->engine.post([&]() {
        rt.world->ran.add_ue("walker", Position{30, 0, 0}, LinearMobility{-20, 0, 0},
                             fast_transport());
    });
    Gateway gw(*rt.world, Gateway::Config{});
    gw.start();
    httplib::Client client("127.0.0.1", gw.http_port());
    client.set_read_timeout(10, 0);

    // nobody listens on this port: every delivery attempt fails fast
    const json sub{{"ueId", "walker"},
                   {"center", {{"x", 0}, {"y", 0}, {"z", 0}}},
                   {"radius", 5.0},
                   {"direction", "entering"},
                   {"callbackUri", "http://127.0.0.1:1/cb"}};
    auto created = client.Post("/v1/location/subscriptions/area", sub.dump(),
                               "application/json");
    REQUIRE(created);
    REQUIRE(created->status == 201);
    const std::uint64_t sub_id = json::parse(created->body)["subscriptionId"];

    LocationService* loc = nullptr;
    for (const ServiceDescriptor* d : rt.world->registry.all()) {
        if (d->name == "LocationService") {
            loc = dynamic_cast<LocationService*>(
                rt.world->registry.resolve(d->name, d->host_id));
        }
    }
    REQUIRE(loc);

    // budget: first attempt + 3 retries with 1 s backoff, then disable
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(15);
    bool disabled = false;
    while (!disabled && std::chrono::steady_clock::now() < deadline) {
        std::promise<bool> active;
        rt.world->engine.post([&]() {
            const AreaSubscription* s = loc->subscription(sub_id);
            active.set_value(s && s->active);
        });
        disabled = !active.get_future().get();
        if (!disabled) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    CHECK(disabled);
    gw.stop();
}

TEST_CASE("congested service dominates the uncongested one in wall latency") {
    auto measure = [](double lambda_b) {
        auto world = std::make_unique<World>(11);
        world->add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
        LocationService& loc = world->add_location_service(
            0, ServiceTimeModel{0.05, ServiceTimeModel::Dist::exponential, nullptr});
        loc.queue().enable_background_generator(0.1, lambda_b);
        world->ran.add_cell(0, Position{0, 0, 0});
        world->ran.add_ue("u1", Position{5, 0, 0}, StationaryMobility{}, fast_transport());
        world->ran.start_updates(0.1);
        std::thread engine_thread([&]() {
            world->engine.run_realtime(seconds(120.0), 50.0);
        });
        while (!world->engine.realtime_active()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        Gateway gw(*world, Gateway::Config{});
        gw.start();
        httplib::Client client("127.0.0.1", gw.http_port());
        client.set_read_timeout(20, 0);
        std::vector<double> latencies;
        for (int i = 0; i < 40; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            auto res = client.Get("/v1/location/queries/users?ue_id=u1");
            REQUIRE(res);
            REQUIRE(res->status == 200);
            latencies.push_back(std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0).count());
        }
        gw.stop();
        world->engine.request_stop();
        engine_thread.join();
        return latencies;
    };

    // mu = 20: rho 0.2 vs rho 0.8
    const std::vector<double> calm = measure(3.9);
    const std::vector<double> congested = measure(15.9);
    const double p = mann_whitney_p_greater(congested, calm);
    INFO("mann-whitney p ", p);
    CHECK(p < 0.01);
}
