#pragma once

#include <cstddef>
#include <span>
#include <utility>

namespace branchou::stats {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double central4 = 0.0;  // fourth central moment (plug-in)

  double standard_error() const;
  // Standard error of the sample variance, sqrt((mu4 - s^4) / n).
  double variance_standard_error() const;
  double excess_kurtosis() const;
};

Moments moments(std::span<const double> xs);

double normal_cdf(double x);

// Sample Pearson correlation.
double correlation(std::span<const double> xs, std::span<const double> ys);

// Two-sided interval for the sample variance of n normal draws with true
// variance sigma_sq: sigma_sq * chi2_{n-1}(alpha/2, 1-alpha/2) / (n-1).
std::pair<double, double> variance_interval(std::size_t n, double sigma_sq, double confidence);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov
// distribution and Stephens' small-sample correction.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

struct TrendResult {
  double rho = 0.0;
  double p_decreasing = 1.0;  // one-sided P(rho' <= rho) under exchangeability
};

// Spearman rank correlation of ys against 0, 1, 2, ...; exact permutation
// p-value up to 10 points, normal approximation beyond.
TrendResult spearman_trend(std::span<const double> ys);

double median(std::span<const double> xs);

}  // namespace branchou::stats
