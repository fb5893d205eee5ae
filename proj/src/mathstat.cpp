#include "mecsim/mathstat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mecsim {

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

namespace {

// ln Gamma(x), Lanczos approximation.
double ln_gamma(double x) {
    static const double c[6] = {76.18009172947146,  -86.50532032941677, 24.01409824083091,
                                -1.231739572450155, 0.1208650973866179e-2, -0.5395239384953e-5};
    double y = x;
    double tmp = x + 5.5;
    tmp -= (x + 0.5) * std::log(tmp);
    double ser = 1.000000000190015;
    for (double ci : c) ser += ci / ++y;
    return -tmp + std::log(2.5066282746310005 * ser / x);
}

// Lower regularized incomplete gamma P(a, x) by series expansion (x < a+1).
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ++ap;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - ln_gamma(a));
}

// Upper regularized incomplete gamma Q(a, x) by continued fraction (x >= a+1).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - ln_gamma(a)) * h;
}

} // namespace

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

ChiSquareResult chi_square_gof(const std::vector<std::uint64_t>& observed,
                               const std::vector<double>& expected,
                               double min_expected) {
    if (observed.size() != expected.size() || observed.empty()) {
        throw std::invalid_argument("chi_square_gof: mismatched bins");
    }
    // Merge trailing low-expectation bins into their predecessor.
    std::vector<double> obs, exp;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        obs.push_back(static_cast<double>(observed[i]));
        exp.push_back(expected[i]);
    }
    while (exp.size() > 1 && exp.back() < min_expected) {
        exp[exp.size() - 2] += exp.back();
        obs[obs.size() - 2] += obs.back();
        exp.pop_back();
        obs.pop_back();
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < exp.size(); ++i) {
        if (exp[i] <= 0.0) continue;
        const double diff = obs[i] - exp[i];
        r.statistic += diff * diff / exp[i];
    }
    r.dof = exp.size() > 1 ? exp.size() - 1 : 1;
    r.p_value = gamma_q(static_cast<double>(r.dof) / 2.0, r.statistic / 2.0);
    return r;
}

double mann_whitney_p_greater(const std::vector<double>& high,
                              const std::vector<double>& low) {
    const double n1 = static_cast<double>(high.size());
    const double n2 = static_cast<double>(low.size());
    if (high.empty() || low.empty()) throw std::invalid_argument("mann_whitney: empty sample");
    // Rank-sum with average ranks for ties.
    struct Tagged {
        double v;
        bool from_high;
    };
    std::vector<Tagged> all;
    all.reserve(high.size() + low.size());
    for (double v : high) all.push_back({v, true});
    for (double v : low) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.v < b.v; });

    double rank_sum_high = 0.0;
    double tie_correction = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const double t = static_cast<double>(j - i);
        tie_correction += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].from_high) rank_sum_high += avg_rank;
        }
        i = j;
    }
    const double u = rank_sum_high - n1 * (n1 + 1.0) / 2.0;
    const double mu = n1 * n2 / 2.0;
    const double n = n1 + n2;
    const double sigma2 = n1 * n2 / 12.0 * ((n + 1.0) - tie_correction / (n * (n - 1.0)));
    if (sigma2 <= 0.0) return 1.0;
    const double z = (u - mu) / std::sqrt(sigma2);
    return 0.5 * std::erfc(z / std::sqrt(2.0));  // P(U >= u) under H0
}

double mean_of(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double sum = 0.0;
    for (double x : v) sum += (x - m) * (x - m);
    return sum / static_cast<double>(v.size() - 1);
}

} // namespace mecsim
