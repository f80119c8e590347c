#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace carnot {

// z such that Φ(z) = 0.99
inline constexpr double kZ99 = 2.3263478740408408;

double normal_cdf(double x);

// One-sided upper confidence bound for a binomial proportion.
double clopper_pearson_upper(std::size_t successes, std::size_t trials, double confidence = 0.99);

struct MeanEstimate {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::size_t count = 0;
  double standard_error() const;
  double upper(double z = kZ99) const { return mean + z * standard_error(); }
  double lower(double z = kZ99) const { return mean - z * standard_error(); }
};

MeanEstimate estimate_mean(std::span<const double> values);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov law.
// Infinite values are allowed and treated as a common largest atom.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double kolmogorov_survival(double lambda);

// Upper tail of the chi-square law with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

// Fraction of values strictly greater than t, times count.
std::size_t count_greater(std::span<const double> sorted, double t);

}  // namespace carnot
