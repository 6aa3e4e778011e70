#include "branchou/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "branchou/errors.hpp"
#include "branchou/stats.hpp"
#include "branchou/theory.hpp"

namespace branchou {

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  if (lo.size() != hi.size()) throw ArgumentError("box corners differ in dimension");
  Box box;
  box.lo = Eigen::Map<const Eigen::VectorXd>(lo.begin(), static_cast<Eigen::Index>(lo.size()));
  box.hi = Eigen::Map<const Eigen::VectorXd>(hi.begin(), static_cast<Eigen::Index>(hi.size()));
  return box;
}

RectangleFamily RectangleFamily::standard(int d) {
  if (d < 1) throw ArgumentError("rectangle family needs d >= 1");
  std::vector<std::pair<double, double>> intervals;
  for (int k = -8; k <= 6; ++k) intervals.emplace_back(k / 2.0, (k + 2) / 2.0);
  intervals.emplace_back(-1.0, 1.0);
  intervals.emplace_back(-2.0, 2.0);

  RectangleFamily family;
  family.dim = d;
  const std::size_t per_axis = intervals.size();
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;
  family.boxes.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    Box box{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    std::size_t rest = code;
    for (int k = 0; k < d; ++k) {
      const auto& [lo, hi] = intervals[rest % per_axis];
      rest /= per_axis;
      box.lo[k] = lo;
      box.hi[k] = hi;
    }
    family.boxes.push_back(std::move(box));
  }
  return family;
}

double empirical_measure(const Eigen::Ref<const Eigen::MatrixXd>& points, const Box& box) {
  if (points.cols() == 0) return 0.0;
  if (points.rows() != box.lo.size()) throw ArgumentError("box and points differ in dimension");
  Eigen::Index inside = 0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) inside += box.contains(points.col(i)) ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(points.cols());
}

SllnReference::SllnReference(RectangleFamily family, double gamma_plus_b) : family_(std::move(family)) {
  if (!(gamma_plus_b > 0.0)) throw DomainError("the limit law needs gamma + b > 0");
  masses_.reserve(family_.boxes.size());
  for (const Box& box : family_.boxes) masses_.push_back(theory::limit_box_mass(box.lo, box.hi, gamma_plus_b));
}

double SllnReference::deviation(const Generation& g) const {
  if (g.dim() != family_.dim) throw ArgumentError("generation and rectangle family differ in dimension");
  const Eigen::MatrixXd y = relative_positions(g);
  double worst = 0.0;
  for (std::size_t k = 0; k < family_.boxes.size(); ++k) {
    worst = std::max(worst, std::abs(empirical_measure(y, family_.boxes[k]) - masses_[k]));
  }
  return worst;
}

double slln_deviation(const Generation& g, const RectangleFamily& family, double gamma_plus_b) {
  return SllnReference(family, gamma_plus_b).deviation(g);
}

ClassPairMoments class_pair_moments(const Generation& g, int a) {
  if (a < 0 || a > g.m - 1) throw ArgumentError("split-time class a must lie in [0, m-1]");
  const Eigen::RowVectorXd y = relative_positions(g).row(0);
  const Eigen::Index block = Eigen::Index{1} << (g.m - a);
  const Eigen::Index half = block / 2;
  ClassPairMoments out;
  for (Eigen::Index s = 0; s < y.size(); s += block) {
    const double left = y.segment(s, half).sum();
    const double right = y.segment(s + half, half).sum();
    out.pairs += static_cast<double>(half * half);
    out.sum += 0.5 * static_cast<double>(half) * (left + right);
    out.sum_prod += left * right;
  }
  return out;
}

namespace {

double pooled_covariance(const ClassPairMoments& total) {
  const double mean = total.sum / total.pairs;
  return total.sum_prod / total.pairs - mean * mean;
}

}  // namespace

CovarianceEstimate covariance_by_class(std::span<const ClassPairMoments> replicates, const RngStream& rng,
                                       int resamples) {
  if (replicates.size() < 2) throw ArgumentError("covariance_by_class needs at least two replicates");
  ClassPairMoments total;
  for (const auto& r : replicates) {
    total.pairs += r.pairs;
    total.sum += r.sum;
    total.sum_prod += r.sum_prod;
  }
  if (total.pairs == 0.0) throw ArgumentError("empty split-time class");

  CovarianceEstimate out;
  out.estimate = pooled_covariance(total);
  const auto n = static_cast<double>(replicates.size());
  std::vector<double> boot(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    const RngStream stream = rng.substep(static_cast<std::uint64_t>(b));
    ClassPairMoments acc;
    for (std::size_t k = 0; k < replicates.size(); ++k) {
      const auto pick = static_cast<std::size_t>(stream.uniform(k) * n);
      const auto& r = replicates[std::min(pick, replicates.size() - 1)];
      acc.pairs += r.pairs;
      acc.sum += r.sum;
      acc.sum_prod += r.sum_prod;
    }
    boot[static_cast<std::size_t>(b)] = pooled_covariance(acc);
  }
  out.standard_error = std::sqrt(stats::moments(boot).variance);
  return out;
}

CovarianceEstimate covariance_by_class(std::span<const Generation> replicates, int a, const RngStream& rng,
                                       int resamples) {
  std::vector<ClassPairMoments> per;
  per.reserve(replicates.size());
  for (const Generation& g : replicates) per.push_back(class_pair_moments(g, a));
  return covariance_by_class(per, rng, resamples);
}

ExtinctionSample extinction_sample(const Generation& g, double ball_radius) {
  ExtinctionSample s;
  s.occupied = static_cast<std::uint64_t>((g.positions.colwise().norm().array() < ball_radius).count());
  s.support_radius = support_radius(g);
  s.com_norm = center_of_mass(g).norm();
  return s;
}

ExtinctionSummary extinction_diagnostic(std::span<const ExtinctionSample> samples) {
  if (samples.empty()) throw ArgumentError("extinction_diagnostic needs replicates");
  ExtinctionSummary out;
  std::vector<double> ratios;
  ratios.reserve(samples.size());
  std::size_t empty = 0;
  for (const auto& s : samples) {
    empty += s.occupied == 0 ? 1 : 0;
    ratios.push_back(s.com_norm > 0.0 ? s.support_radius / s.com_norm : std::numeric_limits<double>::infinity());
  }
  out.zero_fraction = static_cast<double>(empty) / static_cast<double>(samples.size());
  out.median_ratio = stats::median(ratios);
  return out;
}

ExtinctionSummary extinction_diagnostic(std::span<const Generation> replicates, double ball_radius) {
  std::vector<ExtinctionSample> samples;
  samples.reserve(replicates.size());
  for (const Generation& g : replicates) samples.push_back(extinction_sample(g, ball_radius));
  return extinction_diagnostic(samples);
}

bool ExperimentReport::passed() const {
  return std::all_of(statistics.begin(), statistics.end(), [](const Statistic& s) { return s.pass; });
}

Statistic& ExperimentReport::add_z(std::string name, double observed, double theoretical, double se,
                                   double z_max, bool extra) {
  Statistic s{std::move(name), observed, theoretical, se, (observed - theoretical) / se, true};
  if (se == 0.0) s.z = observed == theoretical ? 0.0 : std::copysign(INFINITY, observed - theoretical);
  s.pass = extra && std::abs(s.z) <= z_max;
  statistics.push_back(std::move(s));
  return statistics.back();
}

Statistic& ExperimentReport::add_check(std::string name, double observed, double theoretical, bool pass) {
  statistics.push_back(Statistic{std::move(name), observed, theoretical,
                                 std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(), pass});
  return statistics.back();
}

Statistic& ExperimentReport::add_info(std::string name, double observed, double theoretical, double se) {
  statistics.push_back(
      Statistic{std::move(name), observed, theoretical, se, std::numeric_limits<double>::quiet_NaN(), true});
  return statistics.back();
}

}  // namespace branchou
