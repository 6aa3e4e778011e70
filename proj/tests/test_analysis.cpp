#include <cmath>
#include <vector>

#include "doctest.h"

#include "branchou/analysis.hpp"
#include "branchou/errors.hpp"
#include "branchou/lineage.hpp"
#include "branchou/theory.hpp"

using namespace branchou;

namespace {

Generation random_generation(int m, int d, std::uint64_t seed) {
  Generation g;
  g.m = m;
  g.t = m + 1.0;
  g.positions.resize(d, static_cast<Eigen::Index>(population(m)));
  RngStream(seed).fill_normal(g.positions);
  return g;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("center of mass and relative positions") {
    Generation g;
    g.m = 1;
    g.t = 1;
    g.positions = Eigen::RowVector2d(0.0, 2.0);
    CHECK(center_of_mass(g)(0) == 1.0);
    const Eigen::MatrixXd y = relative_positions(g);
    CHECK(y(0, 0) == -1.0);
    CHECK(y(0, 1) == 1.0);
    CHECK(support_radius(g) == 1.0);

    Generation single;
    single.positions = Eigen::Vector2d(3.0, -4.0);
    CHECK(relative_positions(single).isZero());
    CHECK(center_of_mass(single)(1) == -4.0);

    const Generation r = random_generation(3, 2, 5);
    CHECK(center_of_mass(r)(1) == doctest::Approx(r.positions.row(1).sum() / 8).epsilon(1e-15));
    CHECK(relative_positions(r).rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);

    Generation same;
    same.m = 2;
    same.positions = Eigen::MatrixXd::Constant(1, 4, 0.7);
    CHECK(center_of_mass(same)(0) == doctest::Approx(0.7));
  }

  TEST_CASE("boxes are half open") {
    const Box b = make_box({-1.0, 0.0}, {1.0, 2.0});
    CHECK(b.contains(Eigen::Vector2d(-1.0, 0.0)));
    CHECK_FALSE(b.contains(Eigen::Vector2d(1.0, 1.0)));
    CHECK_FALSE(b.contains(Eigen::Vector2d(0.0, 2.0)));
    CHECK(b.volume() == 4.0);
  }

  TEST_CASE("standard rectangle family") {
    const RectangleFamily one = RectangleFamily::standard(1);
    REQUIRE(one.boxes.size() == 17);
    CHECK(one.boxes.front().lo[0] == -4.0);
    CHECK(one.boxes.front().hi[0] == -3.0);
    CHECK(one.boxes[14].lo[0] == 3.0);
    CHECK(one.boxes[14].hi[0] == 4.0);
    CHECK(one.boxes[15].lo[0] == -1.0);
    CHECK(one.boxes[16].hi[0] == 2.0);
    CHECK(RectangleFamily::standard(2).boxes.size() == 17 * 17);
  }

  TEST_CASE("empirical measure and SLLN deviation") {
    Eigen::MatrixXd pts(1, 4);
    pts << -0.5, 0.25, 1.0, 3.0;
    CHECK(empirical_measure(pts, make_box({-1.0}, {1.0})) == 0.5);

    const Generation g = random_generation(8, 1, 9);
    const double lambda = 1.0;
    const RectangleFamily family = RectangleFamily::standard(1);
    const Eigen::MatrixXd y = relative_positions(g);
    double expect = 0.0;
    for (const Box& b : family.boxes) {
      double inside = 0.0;
      for (Eigen::Index i = 0; i < y.cols(); ++i) inside += (y(0, i) >= b.lo[0] && y(0, i) < b.hi[0]) ? 1.0 : 0.0;
      const double mass = 0.5 * (std::erf(b.hi[0]) - std::erf(b.lo[0]));
      expect = std::max(expect, std::abs(inside / y.cols() - mass));
    }
    CHECK(slln_deviation(g, family, lambda) == doctest::Approx(expect).epsilon(1e-10));
    const SllnReference ref(family, lambda);
    CHECK(ref.deviation(g) == doctest::Approx(expect).epsilon(1e-10));
  }

  TEST_CASE("class pair moments match a brute-force pair sum") {
    const int m = 5;
    const Generation g = random_generation(m, 1, 21);
    const Eigen::RowVectorXd y = relative_positions(g).row(0);
    for (int a = 0; a < m; ++a) {
      double pairs = 0, sum = 0, prod = 0;
      for (Label i = 1; i <= population(m); ++i) {
        for (Label j = i + 1; j <= population(m); ++j) {
          if (split_time(i, j, m) != a) continue;
          const double yi = y(static_cast<Eigen::Index>(i - 1));
          const double yj = y(static_cast<Eigen::Index>(j - 1));
          pairs += 1;
          sum += 0.5 * (yi + yj);
          prod += yi * yj;
        }
      }
      const ClassPairMoments c = class_pair_moments(g, a);
      CHECK(c.pairs == pairs);
      CHECK(c.sum == doctest::Approx(sum).scale(1.0));
      CHECK(c.sum_prod == doctest::Approx(prod).epsilon(1e-12));
      // Unordered pair count is 2^(m-1) * count[a] / 2 from the label profile.
      CHECK(c.pairs == static_cast<double>(population(m) * pairs_by_split_time(1, m)[static_cast<std::size_t>(a)] / 2));
    }
    CHECK_THROWS_AS(class_pair_moments(g, m), ArgumentError);
  }

  TEST_CASE("pooled class covariance is deterministic for a fixed bootstrap stream") {
    std::vector<Generation> reps;
    for (std::uint64_t s = 0; s < 50; ++s) reps.push_back(random_generation(4, 1, 100 + s));
    const CovarianceEstimate a = covariance_by_class(reps, 2, RngStream(1), 50);
    const CovarianceEstimate b = covariance_by_class(reps, 2, RngStream(1), 50);
    CHECK(a.estimate == b.estimate);
    CHECK(a.standard_error == b.standard_error);
    CHECK(a.standard_error > 0.0);
    // i.i.d. N(0,1) coordinates: relative positions have covariance -1/16 off the diagonal.
    CHECK(std::abs(a.estimate + 1.0 / 16) < 5 * a.standard_error);
  }

  TEST_CASE("extinction diagnostic") {
    Generation far;
    far.m = 1;
    far.t = 2;
    far.positions = Eigen::RowVector2d(99.0, 101.0);
    const ExtinctionSample s = extinction_sample(far, 1.0);
    CHECK(s.occupied == 0);
    CHECK(s.support_radius == 1.0);
    CHECK(s.com_norm == 100.0);
    Generation near = far;
    near.positions = Eigen::RowVector2d(-0.5, 0.5);
    const std::vector<Generation> reps{far, far, near};
    const ExtinctionSummary sum = extinction_diagnostic(reps, 1.0);
    CHECK(sum.zero_fraction == doctest::Approx(2.0 / 3.0));
    CHECK(sum.median_ratio == doctest::Approx(0.01));
  }

  TEST_CASE("report pass flags follow the z band") {
    ExperimentReport r;
    r.add_z("inside", 1.3, 1.0, 0.1, 4.0);
    CHECK(r.passed());
    CHECK(r.statistics.back().z == doctest::Approx(3.0));
    r.add_z("outside", 1.5, 1.0, 0.1, 4.0);
    CHECK_FALSE(r.statistics.back().pass);
    CHECK_FALSE(r.passed());
    r.add_z("extra", 1.0, 1.0, 0.1, 4.0, false);
    CHECK_FALSE(r.statistics.back().pass);
    r.add_info("note", 5.0, 0.0);
    CHECK(r.statistics.back().pass);
    CHECK(std::isnan(r.statistics.back().z));
  }
}
