#include <cmath>
#include <numbers>

#include "doctest.h"

#include "branchou/errors.hpp"
#include "branchou/lineage.hpp"
#include "branchou/theory.hpp"

using namespace branchou;
namespace th = branchou::theory;

namespace {

// a_{k+1} = e^{-2g}(a_k + b_k), b_k = (1 - 2^{-k})(e^{2g} - 1)/(2g), a_0 = 0.
double recursion_oracle(int m, double g) {
  double a = 0.0;
  for (int k = 0; k < m; ++k) a = std::exp(-2 * g) * (a + (1 - std::ldexp(1.0, -k)) * std::expm1(2 * g) / (2 * g));
  return a;
}

// Covariance matrix of the relative system at the end of generation m,
// propagated exactly through the linear one-generation map.
Eigen::MatrixXd relative_covariance_oracle(int m, double lambda) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(1, 1);
  const double v_rel = (1 - std::exp(-2 * lambda)) / (2 * lambda);
  for (int k = 0;; ++k) {
    const Eigen::Index n = cov.rows();
    const Eigen::MatrixXd center = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    cov = std::exp(-2 * lambda) * cov + v_rel * center;
    if (k == m) return cov;
    Eigen::MatrixXd dup = Eigen::MatrixXd::Zero(2 * n, n);
    for (Eigen::Index i = 0; i < n; ++i) dup(2 * i, i) = dup(2 * i + 1, i) = 1.0;
    cov = dup * cov * dup.transpose();
  }
}

// Simpson integration of e^{2bu} 2^{-floor(u)} over [0, t].
double time_change_oracle(double t, double b) {
  double total = 0.0;
  for (int k = 0; k < t; ++k) {
    const double lo = k, hi = std::min<double>(k + 1, t);
    const int n = 2000;
    const double h = (hi - lo) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      s += w * std::exp(2 * b * (lo + i * h));
    }
    total += std::ldexp(s * h / 3, -k);
  }
  return total;
}

}  // namespace

TEST_SUITE("theory") {
  TEST_CASE("center-of-mass time change") {
    for (double b : {-1.0, 0.5, 1.0}) {
      CHECK(th::com_time_change(1, b).value == doctest::Approx(std::expm1(2 * b) / (2 * b)).epsilon(1e-13));
      CHECK(th::com_time_change(3.5, b).value == doctest::Approx(time_change_oracle(3.5, b)).epsilon(1e-10));
    }
    CHECK(th::com_time_change(2, 0.0).value == doctest::Approx(1.5).epsilon(1e-14));
  }

  TEST_CASE("terminal variance") {
    const double direct = (1 - std::exp(-2.0)) / (1.0 * (2 - std::exp(-2.0)));
    CHECK(th::terminal_variance(-1).value == doctest::Approx(direct).epsilon(1e-14));
    CHECK(std::abs(th::terminal_variance(-1).value - 0.46371) < 1e-5);
    CHECK(std::abs(th::terminal_variance(-1).value - th::com_time_change(40, -1).value) < 1e-10);
    CHECK(std::abs(th::terminal_variance(-1e-6).value - 2.0) < 1e-4);
    CHECK(std::abs(th::terminal_variance(-1e-12).value - 2.0) < 1e-6);
    CHECK_THROWS_AS(th::terminal_variance(1.0), DomainError);
    CHECK_THROWS_AS(th::terminal_variance(0.0), DomainError);
  }

  TEST_CASE("relative variance anchors") {
    CHECK(th::relative_variance(1, 0.7).value == 0.0);
    CHECK(th::relative_variance(2, 1).value == doctest::Approx((1 - std::exp(-2.0)) / 4).epsilon(1e-14));
    CHECK(std::abs(th::relative_variance(2, 1).value - 0.216166) < 1e-6);
    CHECK(th::relative_variance_closed(1, 1).value == doctest::Approx(0.2161661792).epsilon(1e-9));
    CHECK(std::abs(th::relative_variance(12, 1).value - 0.5) < 1e-3);
    double prev = 1e9;
    for (int m = 2; m <= 30; ++m) {
      const double gap = std::abs(th::relative_variance(m, 1).value - 0.5);
      CHECK(gap < prev);
      prev = gap;
    }
  }

  TEST_CASE("recursion agrees with the oracle and with the closed form") {
    for (double g : {0.1, 0.25, std::numbers::ln2 / 2, 1.0, 2.0, 5.0}) {
      for (int m = 1; m <= 30; ++m) {
        const double rec = th::relative_variance(m + 1, g);
        CHECK(rec == doctest::Approx(recursion_oracle(m + 1, g)).epsilon(1e-12));
        const double closed = th::relative_variance_closed(m, g);
        CHECK(std::abs(closed - rec) <= 1e-12 * std::abs(rec));
      }
    }
    CHECK(th::relative_variance_closed(4, std::numbers::ln2 / 2).singular_handled);
  }

  TEST_CASE("noise covariance") {
    CHECK(th::noise_covariance(0, 1).value == doctest::Approx(-std::expm1(2.0) / 2).epsilon(1e-14));
    CHECK(std::abs(th::noise_covariance(0, 1).value + 3.19453) < 1e-5);
    CHECK(th::noise_covariance(10, 1).value == doctest::Approx(th::noise_covariance(0, 1).value / 1024).epsilon(1e-14));
    CHECK(th::noise_covariance(3, 1e-9).value == doctest::Approx(-0.125).epsilon(1e-8));
  }

  TEST_CASE("pair covariance structure") {
    const double g = 0.8;
    for (int m = 1; m <= 8; ++m) {
      const double siblings = std::exp(-2 * g) * (th::relative_variance(m - 1, g) + th::noise_covariance(m - 1, g));
      CHECK(th::pair_covariance(m, m - 1, g).value == doctest::Approx(siblings).epsilon(1e-13));
      double noise = 0.0;
      for (int k = 0; k < m; ++k) noise += std::exp(-2 * g * (m - k)) * th::noise_covariance(k, g);
      CHECK(th::pair_covariance(m, 0, g).value == doctest::Approx(noise).epsilon(1e-13));
    }
  }

  TEST_CASE("class covariance matches the exact covariance propagation") {
    for (double g : {0.5, 1.0, 1.7}) {
      for (int m = 1; m <= 7; ++m) {
        const Eigen::MatrixXd cov = relative_covariance_oracle(m, g);
        CHECK(cov(0, 0) == doctest::Approx(th::relative_variance(m + 1, g).value).epsilon(1e-12));
        for (Label j = 2; j <= population(m); ++j) {
          const int a = split_time(1, j, m);
          CHECK(cov(0, static_cast<Eigen::Index>(j - 1)) ==
                doctest::Approx(th::class_covariance(m, a, g).value).epsilon(1e-11).scale(1e-14));
        }
        // Rows of the covariance of a zero-sum vector sum to zero.
        CHECK(std::abs(cov.row(0).sum()) < 1e-12);
      }
    }
  }

  TEST_CASE("frozen covariance bound dominates every pair covariance") {
    const double g = 1.0;
    double worst = 0.0;
    for (int m = 1; m <= 20; ++m) {
      for (int a = 0; a <= m - 1; ++a) {
        const double cov = std::abs(th::pair_covariance(m, a, g).value);
        CHECK(cov <= th::covariance_bound(m, a, g, th::kCovarianceBoundC).value);
        CHECK(cov <= th::covariance_bound(m, a, g, 10.0).value);
        worst = std::max(worst, cov / th::covariance_bound(m, a, g, 1.0).value);
      }
    }
    MESSAGE("covariance bound scan maximum: " << worst);
    CHECK(worst <= th::kCovarianceBoundC);
    CHECK(th::covariance_bound(60, 0, 1, 1).value < 1e-15);
    CHECK(th::covariance_bound(5, 4, 1, 2).value == doctest::Approx(2 * 5 * (std::exp(-2.0) + 1.0 / 32)));
  }

  TEST_CASE("limit density and box mass") {
    CHECK(th::limit_density(Eigen::VectorXd::Zero(1), 1, 1).value == doctest::Approx(1 / std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(std::abs(th::limit_density(Eigen::VectorXd::Zero(1), 1, 1).value - 0.56419) < 1e-5);
    CHECK(th::limit_density(Eigen::Vector2d(0.3, -0.2), 2, 2).value ==
          doctest::Approx((2 / std::numbers::pi) * std::exp(-2 * 0.13)).epsilon(1e-14));
    const Eigen::VectorXd wide = Eigen::VectorXd::Constant(1, 50.0);
    CHECK(std::abs(th::limit_box_mass(-wide, wide, 1).value - 1.0) < 1e-8);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    CHECK(th::limit_box_mass(-one, one, 1).value == doctest::Approx(std::erf(1.0)).epsilon(1e-12));
    CHECK(th::limit_box_mass(-one, one, 0.5).value == doctest::Approx(std::erf(std::sqrt(0.5))).epsilon(1e-12));
    CHECK_THROWS_AS(th::limit_density(Eigen::VectorXd::Zero(1), 0, 1), DomainError);
  }

  TEST_CASE("watanabe scale") {
    CHECK(th::watanabe_scale(4, 1).value == doctest::Approx(std::sqrt(2 * std::numbers::pi) * 2 / 16).epsilon(1e-14));
    CHECK(std::abs(th::watanabe_scale(4, 1).value - 0.31333) < 1e-5);
    CHECK(th::watanabe_scale(6, 2).value == doctest::Approx(2 * std::numbers::pi * 6 / 64).epsilon(1e-14));
    CHECK(th::watanabe_scale(200, 1).value < 1e-50);
  }

  TEST_CASE("indicator covariance against closed forms") {
    const th::Interval half{0.0, std::numeric_limits<double>::infinity()};
    for (double rho : {-0.9, -0.5, -0.1, 0.2, 0.5, 0.8}) {
      // P(X > 0, Y > 0) = 1/4 + asin(rho) / (2 pi)
      CHECK(th::indicator_cov_gaussian(rho, 1, half).value == doctest::Approx(std::asin(rho) / (2 * std::numbers::pi)).epsilon(1e-8));
    }
    const th::Interval unit{-1, 1};
    for (const th::Interval& b : {unit, half, th::Interval{0.5, 2.0}}) {
      CHECK(th::indicator_cov_gaussian(0.0, 1, b).value == 0.0);
    }
    const double p = std::erf(1 / std::sqrt(2.0));
    CHECK(th::indicator_cov_gaussian(1.0, 1, unit).value == doctest::Approx(p * (1 - p)).epsilon(1e-10));
    // sigma^2 scaling: psi(rho, s, B) = psi(rho/s, 1, B/sqrt(s))
    const double s = 2.5;
    CHECK(th::indicator_cov_gaussian(0.7, s, unit).value ==
          doctest::Approx(th::indicator_cov_gaussian(0.7 / s, 1, {-1 / std::sqrt(s), 1 / std::sqrt(s)}).value).epsilon(1e-8));
    CHECK_THROWS_AS(th::indicator_cov_gaussian(1.5, 1, unit), DomainError);

    // Midpoint double integral of the joint minus product density.
    auto brute = [](double rho, double lo, double hi) {
      const int n = 1200;
      const double h = (hi - lo) / n;
      const double q = 1 - rho * rho;
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = lo + (i + 0.5) * h;
        for (int j = 0; j < n; ++j) {
          const double y = lo + (j + 0.5) * h;
          sum += std::exp(-(x * x - 2 * rho * x * y + y * y) / (2 * q)) / std::sqrt(q) - std::exp(-(x * x + y * y) / 2);
        }
      }
      return sum * h * h / (2 * std::numbers::pi);
    };
    for (double rho : {-0.45, -0.0075, 0.003, 0.3}) {
      for (auto [lo, hi] : {std::pair{-2.0, 2.0}, std::pair{0.0, 1.0}, std::pair{-1.5, -0.5}}) {
        CHECK(th::indicator_cov_gaussian(rho, 1, {lo, hi}).value == doctest::Approx(brute(rho, lo, hi)).epsilon(1e-5).scale(1e-9));
      }
    }
  }

  TEST_CASE("delta transform") {
    ModelParams p;
    p.b = 0.3;
    p.gamma = 1.1;
    const ModelParams q = th::delta_transform(p, p.gamma);
    CHECK(q.gamma == 0.0);
    CHECK(q.b == doctest::Approx(1.4));
    const ModelParams r = th::delta_transform(p, -p.b);
    CHECK(r.b == 0.0);
    CHECK(r.gamma == doctest::Approx(1.4));
    const ModelParams s = th::delta_transform(p, 0.0);
    CHECK(s.b == p.b);
    CHECK(s.gamma == p.gamma);
    for (double delta : {0.25, -0.5, 2.0, 0.125}) {
      const ModelParams t = th::delta_transform(p, delta);
      CHECK(t.gamma_plus_b() == doctest::Approx(p.gamma_plus_b()).epsilon(1e-15));
    }
    ModelParams e;
    e.b = 1.0;
    e.gamma = 0.5;
    CHECK(th::delta_transform(e, 0.5).gamma_plus_b() == e.gamma_plus_b());
  }
}
