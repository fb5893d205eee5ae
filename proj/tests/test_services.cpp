#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mecsim/apps.hpp"
#include "mecsim/world.hpp"

using namespace mecsim;

namespace {

TransportProfile fast_transport() {
    TransportProfile p;
    p.dl = DelayDist{DelayDist::Kind::constant, 0.001};
    p.ul = DelayDist{DelayDist::Kind::constant, 0.001};
    return p;
}

ServiceTimeModel constant_model(double mean) {
    return ServiceTimeModel{mean, ServiceTimeModel::Dist::constant, nullptr};
}

struct SinkLog {
    std::vector<json> delivered;
};

} // namespace

TEST_CASE("registry: register, discover, duplicates, host removal") {
    World w(1);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    w.add_host(1, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    w.add_location_service(0, constant_model(0.01));
    w.add_location_service(1, constant_model(0.01));

    SUBCASE("discovery from host 1 is local-first") {
        auto found = w.registry.discover("LocationService", 1);
        REQUIRE(found.size() == 2);
        CHECK(found[0]->host_id == 1);
        CHECK(found[1]->host_id == 0);
    }
    SUBCASE("remote-only services are still discoverable") {
        w.add_rnis_service(0, constant_model(0.01));
        auto found = w.registry.discover("RNIS", 1);
        REQUIRE(found.size() == 1);
        CHECK(found[0]->host_id == 0);
    }
    SUBCASE("unknown names give an empty list") {
        CHECK(w.registry.discover("NoSuchService").empty());
    }
    SUBCASE("duplicate registration throws") {
        ServiceDescriptor dup{"LocationService", 0, Endpoint{"10.9.9.9", 1}};
        CHECK_THROWS_AS(w.registry.register_service(dup, nullptr), SimError);
    }
    SUBCASE("host removal clears its entries") {
        w.registry.unregister_host(0);
        auto found = w.registry.discover("LocationService");
        REQUIRE(found.size() == 1);
        CHECK(found[0]->host_id == 1);
    }
}

TEST_CASE("RNIS reports aggregated layer-2 measures") {
    World w(1);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    RnisService& rnis = w.add_rnis_service(0, constant_model(0.010));
    w.ran.add_cell(3, Position{0, 0, 0});
    w.ran.add_ue("u1", Position{1, 0, 0}, StationaryMobility{}, fast_transport());

    for (double v : {2.0, 4.0, 6.0}) {
        L2Sample s;
        s.dl_delay_ms = v;
        s.active_ue_dl = 3.0;
        w.ran.record_l2(3, s);
    }

    json response;
    rnis.request(json{{"cellIds", {3}}, {"measures", {"dl_delay", "active_ue_dl"}}},
                 "GET layer2_meas", true, [&](json r) { response = std::move(r); });
    w.engine.run_until(seconds(1.0));

    REQUIRE(response.contains("layer2Measures"));
    const json& m = response["layer2Measures"][0]["measures"];
    CHECK(m["dl_delay"].get<double>() == doctest::Approx(4.0));
    CHECK(m["active_ue_dl"].get<double>() == doctest::Approx(3.0));

    SUBCASE("unknown scope is an error document") {
        json err;
        rnis.request(json{{"cellIds", {99}}}, "GET layer2_meas", true,
                     [&](json r) { err = std::move(r); });
        w.engine.run_until(seconds(2.0));
        CHECK(err["error"] == "unknown-scope");
    }
    SUBCASE("empty history yields null measure fields") {
        w.ran.add_cell(4, Position{100, 0, 0});
        json empty;
        rnis.request(json{{"cellIds", {4}}, {"measures", {"ul_delay"}}}, "GET layer2_meas",
                     true, [&](json r) { empty = std::move(r); });
        w.engine.run_until(seconds(3.0));
        CHECK(empty["layer2Measures"][0]["measures"]["ul_delay"].is_null());
    }
}

TEST_CASE("service congestion delays responses by the queued work") {
    World w(1);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    RnisService& rnis = w.add_rnis_service(0, constant_model(0.010));
    w.ran.add_cell(0, Position{0, 0, 0});

    // Five queued jobs ahead of the probe: response >= 60 ms after arrival.
    for (int i = 0; i < 5; ++i) {
        rnis.request(json{{"cellIds", {0}}}, "GET layer2_meas", false, nullptr);
    }
    double responded_at = -1.0;
    rnis.request(json{{"cellIds", {0}}}, "GET layer2_meas", true,
                 [&](json) { responded_at = w.engine.now().seconds(); });
    w.engine.run_until(seconds(1.0));
    CHECK(responded_at == doctest::Approx(0.060));
}

TEST_CASE("location queries return positions by UE and by cell") {
    World w(1);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    LocationService& loc = w.add_location_service(0, constant_model(0.005));
    w.ran.add_cell(0, Position{0, 0, 0});
    w.ran.add_cell(1, Position{1000, 0, 0});
    w.ran.add_ue("u1", Position{2, 0, 0}, StationaryMobility{}, fast_transport());
    w.ran.add_ue("u2", Position{5, 0, 0}, StationaryMobility{}, fast_transport());
    w.ran.add_ue("far", Position{990, 0, 0}, StationaryMobility{}, fast_transport());

    SUBCASE("single UE") {
        json r = loc.user_list(json{{"ueIds", {"u1"}}});
        REQUIRE(r["userList"].size() == 1);
        CHECK(r["userList"][0]["position"]["x"].get<double>() == doctest::Approx(2.0));
        CHECK(r["userList"][0]["cellId"].get<int>() == 0);
    }
    SUBCASE("by cell: exactly the attached UEs") {
        json r = loc.user_list(json{{"cellIds", {0}}});
        REQUIRE(r["userList"].size() == 2);
        CHECK(r["cellInfo"][0]["cellId"].get<int>() == 0);
    }
    SUBCASE("unknown UE") {
        CHECK_THROWS_AS(loc.user_list(json{{"ueIds", {"ghost"}}}), SimError);
    }
}

TEST_CASE("area subscriptions notify on matching transitions only") {
    World w(1);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    LocationService& loc = w.add_location_service(0, constant_model(0.001));
    w.ran.add_cell(0, Position{0, 0, 0});

    auto log = std::make_shared<SinkLog>();
    loc.set_sink_resolver([log](std::uint64_t, const std::string&) {
        return [log](const json& doc) { log->delivered.push_back(doc); };
    });

    SUBCASE("UE at distance 7 moving to 4 fires one entering notification") {
        w.ran.add_ue("u", Position{7, 0, 0}, LinearMobility{-1, 0, 0}, fast_transport());
        AreaSubscription sub;
        sub.ue_id = "u";
        sub.center = Position{0, 0, 0};
        sub.radius = 5.0;
        sub.direction = ZoneDirection::entering;
        loc.subscribe(sub);
        w.ran.start_updates(0.1);
        w.engine.run_until(seconds(3.0));  // moves 7 -> 4
        CHECK(log->delivered.size() == 1);
        CHECK(log->delivered[0]["event"] == "entering");
    }

    SUBCASE("already inside: entering fires only after leave and re-enter") {
        w.ran.add_ue("u", Position{1, 0, 0}, LinearMobility{1, 0, 0}, fast_transport());
        AreaSubscription sub;
        sub.ue_id = "u";
        sub.center = Position{0, 0, 0};
        sub.radius = 5.0;
        sub.direction = ZoneDirection::entering;
        loc.subscribe(sub);  // starts inside
        w.ran.start_updates(0.1);
        w.engine.run_until(seconds(10.0));  // exits at x=5, never returns
        CHECK(log->delivered.empty());
    }

    SUBCASE("leaving direction with a UE that never enters stays silent") {
        w.ran.add_ue("u", Position{50, 0, 0}, LinearMobility{0, 1, 0}, fast_transport());
        AreaSubscription sub;
        sub.ue_id = "u";
        sub.center = Position{0, 0, 0};
        sub.radius = 5.0;
        sub.direction = ZoneDirection::leaving;
        loc.subscribe(sub);
        w.ran.start_updates(0.1);
        w.engine.run_until(seconds(5.0));
        CHECK(log->delivered.empty());
    }

    SUBCASE("boundary: distance exactly the radius counts as inside") {
        w.ran.add_ue("u", Position{5, 0, 0}, StationaryMobility{}, fast_transport());
        AreaSubscription sub;
        sub.ue_id = "u";
        sub.center = Position{0, 0, 0};
        sub.radius = 5.0;
        sub.direction = ZoneDirection::entering;
        loc.subscribe(sub);
        CHECK(loc.subscription(1)->last_inside);
    }

    SUBCASE("two UEs crossing in one update notify in subscription order") {
        w.ran.add_ue("a", Position{7, 0, 0}, LinearMobility{-10, 0, 0}, fast_transport());
        w.ran.add_ue("b", Position{8, 0, 0}, LinearMobility{-10, 0, 0}, fast_transport());
        for (const char* ue : {"b", "a"}) {  // subscribe b first: lower sub id
            AreaSubscription sub;
            sub.ue_id = ue;
            sub.center = Position{0, 0, 0};
            sub.radius = 5.0;
            sub.direction = ZoneDirection::entering;
            loc.subscribe(sub);
        }
        w.ran.advance_mobility(0.5);  // both jump inside in one step
        loc.evaluate_subscriptions();
        w.engine.run_until(seconds(1.0));
        REQUIRE(log->delivered.size() == 2);
        CHECK(log->delivered[0]["ueId"] == "b");
        CHECK(log->delivered[1]["ueId"] == "a");
    }

    SUBCASE("tunneling through the zone between samples is missed by design") {
        w.ran.add_ue("u", Position{-100, 0.1, 0}, LinearMobility{2000, 0, 0},
                     fast_transport());
        AreaSubscription sub;
        sub.ue_id = "u";
        sub.center = Position{0, 0, 0};
        sub.radius = 5.0;
        sub.direction = ZoneDirection::entering;
        loc.subscribe(sub);
        w.ran.start_updates(0.1);  // 200 m per sample step
        w.engine.run_until(seconds(1.0));
        CHECK(log->delivered.empty());
    }
}

TEST_CASE("subscription modification") {
    World w(1);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    LocationService& loc = w.add_location_service(0, constant_model(0.001));
    w.ran.add_cell(0, Position{0, 0, 0});
    auto log = std::make_shared<SinkLog>();
    loc.set_sink_resolver([log](std::uint64_t, const std::string&) {
        return [log](const json& doc) { log->delivered.push_back(doc); };
    });

    w.ran.add_ue("u", Position{7, 0, 0}, LinearMobility{-1, 0, 0}, fast_transport());
    AreaSubscription sub;
    sub.ue_id = "u";
    sub.center = Position{0, 0, 0};
    sub.radius = 5.0;
    sub.direction = ZoneDirection::entering;
    const std::uint64_t id = loc.subscribe(sub);
    w.ran.start_updates(0.1);

    SUBCASE("entering then modified to leaving produces enter, then leave") {
        w.engine.run_until(seconds(3.0));  // inside now
        REQUIRE(log->delivered.size() == 1);
        loc.modify_subscription(id, std::nullopt, std::nullopt, ZoneDirection::leaving);
        // turn around and walk out
        w.engine.run_until(seconds(20.0));  // exits at x = -5 eventually
        REQUIRE(log->delivered.size() == 2);
        CHECK(log->delivered[1]["event"] == "leaving");
    }
    SUBCASE("modifying to identical parameters fires nothing spurious") {
        loc.modify_subscription(id, sub.center, sub.radius, sub.direction);
        w.engine.run_until(seconds(1.0));  // still outside
        CHECK(log->delivered.empty());
    }
    SUBCASE("unknown subscription id") {
        CHECK_THROWS_AS(loc.modify_subscription(999, std::nullopt, std::nullopt,
                                                ZoneDirection::leaving),
                        SimError);
    }
}

TEST_CASE("notification completeness against a replayed trajectory oracle") {
    World w(17);
    w.add_host(0, ResourceVector{1e9, 1e9, 1e9}, SchedulingMode::segregation);
    LocationService& loc = w.add_location_service(0, constant_model(0.0001));
    w.ran.add_cell(0, Position{0, 0, 0});
    auto log = std::make_shared<SinkLog>();
    loc.set_sink_resolver([log](std::uint64_t, const std::string&) {
        return [log](const json& doc) { log->delivered.push_back(doc); };
    });

    // Sinusoid-ish path wandering across the zone boundary.
    std::vector<Position> wps;
    RngStream path(3, "path");
    for (int i = 0; i < 30; ++i) {
        wps.push_back(Position{path.uniform(-12, 12), path.uniform(-12, 12), 0});
    }
    w.ran.add_ue("u", Position{20, 0, 0}, WaypointMobility{wps, 9.0}, fast_transport());

    AreaSubscription sub;
    sub.ue_id = "u";
    sub.center = Position{0, 0, 0};
    sub.radius = 8.0;
    sub.direction = ZoneDirection::entering;
    loc.subscribe(sub);

    // Oracle: replay the same sampled trajectory and count outside->inside
    // sign changes of (distance <= radius).
    int expected = 0;
    {
        World oracle(17);
        oracle.ran.add_cell(0, Position{0, 0, 0});
        oracle.ran.add_ue("u", Position{20, 0, 0}, WaypointMobility{wps, 9.0},
                          fast_transport());
        bool inside = false;  // starts at distance 20
        for (int step = 0; step < 300; ++step) {
            oracle.ran.advance_mobility(0.1);
            const bool now_inside =
                distance(oracle.ran.position("u"), Position{0, 0, 0}) <= 8.0;
            if (now_inside && !inside) ++expected;
            inside = now_inside;
        }
    }

    w.ran.start_updates(0.1);
    // run just past the 300th update so the last notification drains without
    // adding a 301st sample
    w.engine.run_until(seconds(30.05));
    CHECK(static_cast<int>(log->delivered.size()) == expected);
    CHECK(expected >= 2);  // the path indeed crosses multiple times
}
