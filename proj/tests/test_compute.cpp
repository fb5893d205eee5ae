#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <vector>

#include "mecsim/compute.hpp"

using namespace mecsim;

namespace {

ResourceVector cpu_only(double rate) { return ResourceVector{rate, 0.0, 0.0}; }

} // namespace

TEST_CASE("admission accepts exactly up to capacity") {
    Engine eng(1);
    ComputeHost host(eng, 0, ResourceVector{1000.0, 1 << 20, 1 << 20},
                     SchedulingMode::segregation);
    CHECK(host.admit("a", cpu_only(700.0)).accepted);

    SUBCASE("boundary fill is accepted") {
        CHECK(host.admit("b", cpu_only(300.0)).accepted);
        CHECK(host.allocated_cpu() == doctest::Approx(1000.0));
    }
    SUBCASE("one instruction per second too many is rejected") {
        const AdmissionResult r = host.admit("b", cpu_only(301.0));
        CHECK_FALSE(r.accepted);
        CHECK(r.rejected_component == "cpu");
    }
    SUBCASE("ram violation names the component") {
        const AdmissionResult r = host.admit("b", ResourceVector{10.0, 2 << 20, 0.0});
        CHECK_FALSE(r.accepted);
        CHECK(r.rejected_component == "ram");
        CHECK_FALSE(host.has_app("b"));  // never partially allocated
    }
}

TEST_CASE("segregation serves at the stipulated rate regardless of load") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(1e7), SchedulingMode::segregation);
    REQUIRE(host.admit("app", cpu_only(1e6)).accepted);
    REQUIRE(host.admit("noisy", cpu_only(5e6)).accepted);
    host.compute("noisy", 1e9);
    const SimTime done = host.compute("app", 1e6);
    CHECK(done.seconds() == doctest::Approx(1.0));
}

TEST_CASE("fair sharing redistributes spare capacity") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(100.0), SchedulingMode::fair_sharing);
    REQUIRE(host.admit("app1", cpu_only(20.0)).accepted);
    REQUIRE(host.admit("app2", cpu_only(30.0)).accepted);

    SUBCASE("active contender: r' = r * R / sum over active") {
        host.compute("app2", 1e6);  // app2 active
        // r'_1 = 20 * 100 / (20 + 30) = 40 -> 80 instructions take 2 s
        const SimTime done = host.compute("app1", 80.0);
        CHECK(done.seconds() == doctest::Approx(2.0));
    }
    SUBCASE("idle contender is not in the denominator") {
        CHECK(host.effective_rate("app1") == doctest::Approx(100.0));  // 20*100/20
    }
    SUBCASE("at the admission limit the share equals the stipulation") {
        REQUIRE(host.admit("app3", cpu_only(50.0)).accepted);
        host.compute("app2", 1e6);
        host.compute("app3", 1e6);
        CHECK(host.effective_rate("app1") == doctest::Approx(20.0));
    }
}

TEST_CASE("dummy loads eat into every fair-sharing denominator") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(100.0), SchedulingMode::fair_sharing);
    REQUIRE(host.install_dummy_load(50.0).has_value());
    REQUIRE(host.admit("app", cpu_only(25.0)).accepted);
    // r' = 25 * 100 / 75
    CHECK(host.effective_rate("app") == doctest::Approx(25.0 * 100.0 / 75.0));

    SUBCASE("oversized dummy is rejected") {
        CHECK_FALSE(host.install_dummy_load(100.0).has_value());  // 50 already taken
    }
}

TEST_CASE("dummy load has no effect under segregation") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(100.0), SchedulingMode::segregation);
    REQUIRE(host.install_dummy_load(50.0).has_value());
    REQUIRE(host.admit("app", cpu_only(25.0)).accepted);
    CHECK(host.effective_rate("app") == doctest::Approx(25.0));
}

TEST_CASE("release frees the allocation and cancels running tasks") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(100.0), SchedulingMode::segregation);
    REQUIRE(host.admit("app", cpu_only(40.0)).accepted);
    bool completed = false;
    host.compute("app", 80.0, [&]() { completed = true; });
    host.release("app");
    eng.run_until(seconds(100.0));
    CHECK_FALSE(completed);
    CHECK(host.allocated_cpu() == doctest::Approx(0.0));
    CHECK_THROWS_AS(host.release("app"), SimError);  // double release
}

TEST_CASE("compute validates its arguments") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(100.0), SchedulingMode::segregation);
    CHECK_THROWS_AS(host.compute("ghost", 10.0), SimError);
    REQUIRE(host.admit("app", cpu_only(10.0)).accepted);
    CHECK_THROWS_AS(host.compute("app", 0.0), SimError);
}

TEST_CASE("a second compute by the same app queues behind the first") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(100.0), SchedulingMode::segregation);
    REQUIRE(host.admit("app", cpu_only(10.0)).accepted);
    const SimTime first = host.compute("app", 10.0);   // 1 s
    const SimTime second = host.compute("app", 10.0);  // queued behind
    CHECK(first.seconds() == doctest::Approx(1.0));
    CHECK(second.seconds() == doctest::Approx(2.0));
}

TEST_CASE("frozen rate: later releases do not move a computed completion") {
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(100.0), SchedulingMode::fair_sharing);
    REQUIRE(host.admit("app1", cpu_only(20.0)).accepted);
    REQUIRE(host.admit("app2", cpu_only(30.0)).accepted);
    host.compute("app2", 1e4);
    SimTime fired{};
    const SimTime promised = host.compute("app1", 80.0, [&]() { fired = eng.now(); });
    host.release("app2");  // would raise app1's share if re-evaluated
    REQUIRE(host.admit("app3", cpu_only(70.0)).accepted);
    host.compute("app3", 1.0);
    eng.run_until(seconds(100.0));
    CHECK(promised.seconds() == doctest::Approx(2.0));
    CHECK(fired == promised);
}

TEST_CASE("fair-share arithmetic property over random admissible loads") {
    RngStream gen(99, "prop");
    for (int trial = 0; trial < 200; ++trial) {
        Engine eng(trial);
        const int napps = 2 + static_cast<int>(gen.next_u64() % 6);
        // Integer-valued rates keep the sums exact.
        std::vector<double> rates;
        double sum = 0.0;
        for (int i = 0; i < napps; ++i) {
            const double r = 1.0 + static_cast<double>(gen.next_u64() % 1000);
            rates.push_back(r);
            sum += r;
        }
        const bool exact_fill = trial % 2 == 0;
        const double capacity =
            exact_fill ? sum : sum + 1.0 + static_cast<double>(gen.next_u64() % 500);

        ComputeHost host(eng, 0, cpu_only(capacity), SchedulingMode::fair_sharing);
        for (int i = 0; i < napps; ++i) {
            REQUIRE(host.admit("app" + std::to_string(i), cpu_only(rates[i])).accepted);
        }
        for (int i = 0; i < napps; ++i) {
            host.compute("app" + std::to_string(i), 1e6);  // make everyone active
        }
        for (int i = 0; i < napps; ++i) {
            const double expected = rates[i] * capacity / sum;
            const double actual = host.effective_rate("app" + std::to_string(i));
            CHECK(actual == doctest::Approx(expected).epsilon(1e-12));
            CHECK(actual >= rates[i]);
            if (exact_fill) {
                CHECK(actual == rates[i]);
            } else {
                CHECK(actual > rates[i]);
            }
        }
    }
}

TEST_CASE("segregation isolation: completion times are bit-identical under contention") {
    auto run = [](bool contended) {
        Engine eng(5);
        ComputeHost host(eng, 0, cpu_only(1e9), SchedulingMode::segregation);
        REQUIRE(host.admit("probe", cpu_only(12345.0)).accepted);
        if (contended) {
            for (int i = 0; i < 10; ++i) {
                REQUIRE(host.admit("bg" + std::to_string(i), cpu_only(1e7)).accepted);
                host.compute("bg" + std::to_string(i), 1e9);
            }
        }
        eng.run_until(seconds(0.25));
        return host.compute("probe", 777777.0).micros();
    };
    CHECK(run(false) == run(true));
}

TEST_CASE("admission safety: allocations never exceed capacity") {
    RngStream gen(123, "safety");
    Engine eng(1);
    ComputeHost host(eng, 0, cpu_only(1000.0), SchedulingMode::fair_sharing);
    int admitted = 0;
    for (int i = 0; i < 100; ++i) {
        const double r = 1.0 + static_cast<double>(gen.next_u64() % 200);
        if (host.admit("app" + std::to_string(i), cpu_only(r)).accepted) ++admitted;
        CHECK(host.allocated_cpu() <= 1000.0);
    }
    CHECK(admitted > 0);
}
