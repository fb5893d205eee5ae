#pragma once

#include <cstdint>
#include <vector>

namespace mecsim {

// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
// Inputs need not be sorted.
double ks_distance(std::vector<double> a, std::vector<double> b);

// Regularized upper incomplete gamma Q(a, x); Q(k/2, x/2) is the chi-square
// survival function with k degrees of freedom.
double gamma_q(double a, double x);

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
};

// Goodness of fit of observed bin counts against expected counts; low-count
// tail bins are merged until every expected count is >= min_expected.
ChiSquareResult chi_square_gof(const std::vector<std::uint64_t>& observed,
                               const std::vector<double>& expected,
                               double min_expected = 5.0);

// One-sided Mann-Whitney U test that samples in `high` are stochastically
// larger than samples in `low`; returns the normal-approximation p-value.
double mann_whitney_p_greater(const std::vector<double>& high,
                              const std::vector<double>& low);

// Simple aggregates.
double mean_of(const std::vector<double>& v);
double variance_of(const std::vector<double>& v);

} // namespace mecsim
