#include "branchou/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "branchou/errors.hpp"

namespace branchou::stats {

double Moments::standard_error() const { return std::sqrt(variance / static_cast<double>(n)); }

double Moments::variance_standard_error() const {
  const double plug_in = variance * (n - 1.0) / n;
  return std::sqrt(std::max(central4 - plug_in * plug_in, 0.0) / static_cast<double>(n));
}

double Moments::excess_kurtosis() const {
  const double plug_in = variance * (n - 1.0) / n;
  return central4 / (plug_in * plug_in) - 3.0;
}

Moments moments(std::span<const double> xs) {
  if (xs.size() < 2) throw ArgumentError("moments need at least two samples");
  Moments m;
  m.n = xs.size();
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(m.n);
  double s2 = 0.0;
  double s4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.variance = s2 / (m.n - 1.0);
  m.central4 = s4 / static_cast<double>(m.n);
  return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ArgumentError("correlation needs paired samples");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::pair<double, double> variance_interval(std::size_t n, double sigma_sq, double confidence) {
  if (n < 2) throw ArgumentError("variance_interval needs n >= 2");
  const double dof = static_cast<double>(n - 1);
  boost::math::chi_squared chi2(dof);
  const double alpha = 1.0 - confidence;
  return {sigma_sq * boost::math::quantile(chi2, alpha / 2.0) / dof,
          sigma_sq * boost::math::quantile(chi2, 1.0 - alpha / 2.0) / dof};
}

double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ks_two_sample needs non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / nx - j / ny));
  }
  const double ne = nx * ny / (nx + ny);
  const double root = std::sqrt(ne);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

namespace {

std::vector<double> ranks(std::span<const double> ys) {
  std::vector<std::size_t> order(ys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return ys[l] < ys[r]; });
  std::vector<double> r(ys.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t e = k;
    while (e + 1 < order.size() && ys[order[e + 1]] == ys[order[k]]) ++e;
    const double avg = 0.5 * (k + e) + 1.0;
    for (std::size_t q = k; q <= e; ++q) r[order[q]] = avg;
    k = e + 1;
  }
  return r;
}

double spearman_of_ranks(std::span<const double> r) {
  const double n = static_cast<double>(r.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = (i + 1.0) - mean;
    const double y = r[i] - mean;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TrendResult spearman_trend(std::span<const double> ys) {
  if (ys.size() < 3) throw ArgumentError("spearman_trend needs at least 3 points");
  const std::vector<double> r = ranks(ys);
  TrendResult out;
  out.rho = spearman_of_ranks(r);
  if (ys.size() <= 10) {
    std::vector<double> perm = r;
    std::sort(perm.begin(), perm.end());
    std::size_t total = 0, as_low = 0;
    do {
      ++total;
      if (spearman_of_ranks(perm) <= out.rho + 1e-12) ++as_low;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.p_decreasing = static_cast<double>(as_low) / static_cast<double>(total);
  } else {
    const double z = out.rho * std::sqrt(ys.size() - 1.0);
    out.p_decreasing = normal_cdf(z);
  }
  return out;
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace branchou::stats
