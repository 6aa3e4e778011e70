#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "branchou/generation.hpp"
#include "branchou/rng.hpp"

namespace branchou {

// ---------------------------------------------------------------------------
// Observables of a single generation.

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> center_of_mass(const BasicGeneration<Scalar>& g) {
  return g.positions.rowwise().mean();
}

// Y^i = Z^i - Zbar. Columns sum to zero up to rounding.
template <typename Scalar>
typename BasicGeneration<Scalar>::Positions relative_positions(const BasicGeneration<Scalar>& g) {
  return g.positions.colwise() - center_of_mass(g);
}

// Radius of the smallest origin-centered ball holding the relative system.
template <typename Scalar>
Scalar support_radius(const BasicGeneration<Scalar>& g) {
  return relative_positions(g).colwise().norm().maxCoeff();
}

// Axis-aligned box [lo, hi) per axis.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return (x.array() >= lo.array()).all() && (x.array() < hi.array()).all();
  }
  double volume() const { return (hi - lo).cwiseMax(0.0).prod(); }
};

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi);

// Finite truncation of the bounded rational rectangles. For d = 1 it holds
// [k/2, (k+2)/2) for k = -8..6 plus [-1, 1) and [-2, 2); for d > 1 the
// product grid of those intervals.
struct RectangleFamily {
  std::vector<Box> boxes;
  int dim = 1;

  static RectangleFamily standard(int d);
};

// Fraction of columns of `points` inside `box`.
double empirical_measure(const Eigen::Ref<const Eigen::MatrixXd>& points, const Box& box);

// max over a family of |empirical mass of the relative system - limit mass|.
// The limit masses are integrated once at construction.
class SllnReference {
 public:
  SllnReference(RectangleFamily family, double gamma_plus_b);

  double deviation(const Generation& g) const;
  const RectangleFamily& family() const { return family_; }
  const std::vector<double>& limit_masses() const { return masses_; }

 private:
  RectangleFamily family_;
  std::vector<double> masses_;
};

double slln_deviation(const Generation& g, const RectangleFamily& family, double gamma_plus_b);

// ---------------------------------------------------------------------------
// Covariance by splitting-time class.

// Per-replicate sums over the unordered pairs (i, j) of a generation with
// split_time(i, j, m) == a, first coordinate of the relative system.
struct ClassPairMoments {
  double pairs = 0.0;
  double sum = 0.0;      // sum over pairs of (y_i + y_j) / 2
  double sum_prod = 0.0; // sum over pairs of y_i y_j
};

ClassPairMoments class_pair_moments(const Generation& g, int a);

struct CovarianceEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Pooled sample covariance over all replicates; the standard error is the
// standard deviation of `resamples` replicate-level bootstrap estimates.
CovarianceEstimate covariance_by_class(std::span<const ClassPairMoments> replicates, const RngStream& rng,
                                       int resamples = 200);
CovarianceEstimate covariance_by_class(std::span<const Generation> replicates, int a, const RngStream& rng,
                                       int resamples = 200);

// ---------------------------------------------------------------------------
// Local extinction.

struct ExtinctionSample {
  std::uint64_t occupied = 0;  // particles in the origin-centered ball
  double support_radius = 0.0;
  double com_norm = 0.0;
};

ExtinctionSample extinction_sample(const Generation& g, double ball_radius);

struct ExtinctionSummary {
  double zero_fraction = 0.0;  // replicates with an empty ball
  double median_ratio = 0.0;   // median of support_radius / |Zbar|
};

ExtinctionSummary extinction_diagnostic(std::span<const ExtinctionSample> samples);
ExtinctionSummary extinction_diagnostic(std::span<const Generation> replicates, double ball_radius);

// ---------------------------------------------------------------------------
// Reports.

struct Statistic {
  std::string name;
  double observed = 0.0;
  double theoretical = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();
  double z = std::numeric_limits<double>::quiet_NaN();
  bool pass = true;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<std::pair<std::string, double>> params;
  std::size_t replicates = 0;
  std::vector<Statistic> statistics;
  double runtime_seconds = 0.0;

  bool passed() const;

  // z-test: passes iff |observed - theoretical| <= z_max * se and `extra` holds.
  Statistic& add_z(std::string name, double observed, double theoretical, double se, double z_max,
                   bool extra = true);
  // Criterion without a z-score (bounds, fractions, p-values).
  Statistic& add_check(std::string name, double observed, double theoretical, bool pass);
  // Reported value with no pass/fail role.
  Statistic& add_info(std::string name, double observed, double theoretical,
                      double se = std::numeric_limits<double>::quiet_NaN());
};

}  // namespace branchou
