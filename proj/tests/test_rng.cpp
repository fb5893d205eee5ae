#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mecsim/mathstat.hpp"
#include "mecsim/rng.hpp"

using namespace mecsim;

TEST_CASE("identical (seed, name) reproduces the sample sequence") {
    RngStream a(42, "bg");
    RngStream b(42, "bg");
    for (int i = 0; i < 5; ++i) {
        CHECK(a.uniform01() == b.uniform01());
    }
}

TEST_CASE("distinct names and seeds give distinct sequences") {
    RngStream bg(42, "bg"), svc(42, "svc"), bg43(43, "bg");
    bool name_differs = false, seed_differs = false;
    RngStream bg_ref(42, "bg");
    for (int i = 0; i < 5; ++i) {
        const double r = bg_ref.uniform01();
        if (svc.uniform01() != r) name_differs = true;
        if (bg43.uniform01() != r) seed_differs = true;
        bg.uniform01();
    }
    CHECK(name_differs);
    CHECK(seed_differs);
}

TEST_CASE("exponential sampler matches its analytic mean to 2%") {
    RngStream rng(7, "exp");
    const double mean = 0.010;
    const int n = 1'000'000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.exponential(1.0 / mean);
    CHECK(sum / n == doctest::Approx(mean).epsilon(0.02));
}

TEST_CASE("poisson sampler: mean and variance match lambda*t") {
    RngStream rng(7, "poisson");
    const double mean = 2.0 * 3.0;  // rate 2/s over 3 s
    const int n = 1'000'000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = static_cast<double>(rng.poisson(mean));
    CHECK(mean_of(xs) == doctest::Approx(mean).epsilon(0.02));
    CHECK(variance_of(xs) == doctest::Approx(mean_of(xs)).epsilon(0.03));
}

TEST_CASE("poisson of a zero-length interval is always zero") {
    RngStream rng(7, "poisson0");
    for (int i = 0; i < 100; ++i) CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("geometric backlog law: point probabilities and mean") {
    // P(n) = rho^n (1 - rho): for rho=0.5 the first terms are .5 .25 .125
    RngStream rng(11, "geom");
    const double rho = 0.5;
    const int n = 200'000;
    std::vector<std::uint64_t> counts(12, 0);
    for (int i = 0; i < n; ++i) {
        const std::uint64_t v = rng.geometric_rho(rho);
        if (v < counts.size()) ++counts[v];
    }
    CHECK(static_cast<double>(counts[0]) / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(static_cast<double>(counts[1]) / n == doctest::Approx(0.25).epsilon(0.02));
    CHECK(static_cast<double>(counts[2]) / n == doctest::Approx(0.125).epsilon(0.03));

    SUBCASE("rho 0 always yields an empty system") {
        for (int i = 0; i < 100; ++i) CHECK(rng.geometric_rho(0.0) == 0);
    }

    SUBCASE("rho 0.8 has mean rho/(1-rho) = 4") {
        RngStream r2(11, "geom8");
        const int m = 1'000'000;
        double sum = 0.0;
        for (int i = 0; i < m; ++i) sum += static_cast<double>(r2.geometric_rho(0.8));
        CHECK(sum / m == doctest::Approx(4.0).epsilon(0.02));
    }
}

TEST_CASE("erlang(k, mu) mean is k/mu for k in {1, 3, 10}") {
    RngStream rng(13, "erlang");
    const double mu = 20.0;
    for (std::uint64_t k : {1ull, 3ull, 10ull}) {
        const int n = 200'000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += rng.erlang(k, mu);
        CHECK(sum / n ==
              doctest::Approx(static_cast<double>(k) / mu).epsilon(0.02));
    }
}

TEST_CASE("1-stage erlang is exponential(mu)") {
    RngStream rng(17, "erlang1");
    const double mu = 10.0;
    const int n = 500'000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.erlang(1, mu);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(1.0 / mu).epsilon(0.02));
    CHECK(var == doctest::Approx(1.0 / (mu * mu)).epsilon(0.03));  // exp: var = mean^2
}

TEST_CASE("ks_distance separates equal and shifted samples") {
    RngStream rng(19, "ks");
    std::vector<double> a, b, c;
    for (int i = 0; i < 20'000; ++i) {
        a.push_back(rng.exponential(1.0));
        b.push_back(rng.exponential(1.0));
        c.push_back(rng.exponential(1.0) + 0.5);
    }
    CHECK(ks_distance(a, b) < 0.02);
    CHECK(ks_distance(a, c) > 0.2);
    CHECK(ks_distance(a, a) == doctest::Approx(0.0));
}

TEST_CASE("gamma_q reproduces chi-square table values") {
    // Survival values from standard chi-square tables.
    CHECK(gamma_q(5.0, 23.2093 / 2.0) == doctest::Approx(0.01).epsilon(0.01));   // 10 dof
    CHECK(gamma_q(0.5, 3.8415 / 2.0) == doctest::Approx(0.05).epsilon(0.01));    // 1 dof
    CHECK(gamma_q(2.5, 15.0863 / 2.0) == doctest::Approx(0.01).epsilon(0.01));   // 5 dof
}

TEST_CASE("chi-square GOF accepts a faithful sampler and rejects a biased one") {
    RngStream rng(23, "gof");
    const double rho = 0.5;
    const int n = 100'000;
    std::vector<std::uint64_t> counts(30, 0);
    for (int i = 0; i < n; ++i) {
        const std::uint64_t v = rng.geometric_rho(rho);
        ++counts[std::min<std::uint64_t>(v, counts.size() - 1)];
    }
    std::vector<double> expected;
    double tail = 1.0;
    for (std::size_t k = 0; k + 1 < counts.size(); ++k) {
        const double p = std::pow(rho, static_cast<double>(k)) * (1.0 - rho);
        expected.push_back(p * n);
        tail -= p;
    }
    expected.push_back(tail * n);
    CHECK(chi_square_gof(counts, expected).p_value > 0.01);

    // Shift mass between the first two bins: must be detected.
    std::vector<std::uint64_t> biased = counts;
    biased[0] += 2000;
    biased[1] -= 2000;
    CHECK(chi_square_gof(biased, expected).p_value < 1e-6);
}

TEST_CASE("mann-whitney flags stochastic dominance") {
    RngStream rng(29, "mw");
    std::vector<double> low, high;
    for (int i = 0; i < 200; ++i) {
        low.push_back(rng.exponential(1.0));
        high.push_back(rng.exponential(1.0) + 1.0);
    }
    CHECK(mann_whitney_p_greater(high, low) < 0.01);
    CHECK(mann_whitney_p_greater(low, high) > 0.5);
}
