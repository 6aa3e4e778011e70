#pragma once

#include <limits>
#include <string_view>

#include <Eigen/Core>

#include "branchou/params.hpp"

namespace branchou::theory {

enum class Formula {
  ComTimeChange,
  TerminalVariance,
  RelativeVariance,
  RelativeVarianceClosed,
  NoiseCovariance,
  PairCovariance,
  ClassCovariance,
  CovarianceBound,
  LimitDensity,
  LimitBoxMass,
  WatanabeScale,
  IndicatorCovariance,
};

std::string_view formula_name(Formula f);

struct TheoryValue {
  double value = std::numeric_limits<double>::quiet_NaN();
  Formula formula = Formula::ComTimeChange;
  bool singular_handled = false;  // a removable singularity was evaluated by its limit

  operator double() const noexcept { return value; }
};

// Closed interval [lo, hi]; infinite endpoints are allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// s(t) = Var(e^{bt} Zbar_t) = int_0^t 2^{-floor(s)} e^{2bs} ds.
TheoryValue com_time_change(double t, double b);

// lim s(t) for b < 0: (1 - e^{2b}) / (|b| (2 - e^{2b})). Tends to 2 as b -> 0-.
TheoryValue terminal_variance(double b);

// Var(Y_m) at integer time m by the recursion a_{k+1} = e^{-2g}(a_k + b_k),
// b_k = (1 - 2^{-k}) (e^{2g} - 1) / (2g), a_0 = 0. Any real gamma_eff.
TheoryValue relative_variance(int m, double gamma_eff);

// Closed form of Var(Y_{m+1}) (note the shift: argument m gives time m+1),
// m >= 1, gamma_eff > 0. At e^{2 gamma} = 2 the geometric term is summed
// directly.
TheoryValue relative_variance_closed(int m, double gamma_eff);

// Cov(X_n^i, X_n^j) = -2^{-n} (e^{2g} - 1) / (2g) for the unit-interval noises
// of two distinct particles of generation n.
TheoryValue noise_covariance(int n, double gamma_eff);

// Cov(Y_m^i, Y_m^j) at integer time m for two particles whose lineages were
// last at a common position at integer time a (0 <= a <= m):
//   e^{-2g(m-a)} Var(Y_a) + sum_{k=a}^{m-1} e^{-2g(m-k)} noise_covariance(k).
TheoryValue pair_covariance(int m, int a, double gamma_eff);

// Covariance at the end of generation m (time m+1) of two generation-m
// particles with split_time(i, j, m) == a. Their lineages separate at the
// birth of generation a+1, so this is pair_covariance(m + 1, a + 1).
TheoryValue class_covariance(int m, int a, double gamma_eff);

// C m (e^{-2g(m-a)} + 2^{-m}).
TheoryValue covariance_bound(int m, int a, double gamma_eff, double c);

// ((g+b)/pi)^{d/2} exp(-(g+b)|y|^2), the N(0, 1/(2(g+b)) I_d) density.
TheoryValue limit_density(const Eigen::Ref<const Eigen::VectorXd>& y, double gamma_plus_b, int d);

// Mass of an axis-aligned box [lo, hi) under limit_density, by Gauss-Kronrod
// quadrature of the one-dimensional factors.
TheoryValue limit_box_mass(const Eigen::Ref<const Eigen::VectorXd>& lo,
                           const Eigen::Ref<const Eigen::VectorXd>& hi, double gamma_plus_b);

// (2 pi)^{d/2} n^{d/2} 2^{-n}.
TheoryValue watanabe_scale(int n, int d);

// Cov(1_B(X), 1_B(Y)) for a centered bivariate normal with marginal variance
// sigma_sq and covariance rho: the integral over B x B of the joint density
// minus the product density, evaluated as a Gauss-Kronrod integral over the
// correlation (error estimate at most 1e-8, else NumericalError).
TheoryValue indicator_cov_gaussian(double rho, double sigma_sq, Interval box);

// gamma' = gamma - delta, b' = b + delta. The relative systems of the two
// parameter sets have the same law.
ModelParams delta_transform(const ModelParams& params, double delta);

// Frozen constants for the bound checks, calibrated once by exhaustive scan.
// covariance_bound with kCovarianceBoundC dominates |pair_covariance| for
// gamma = 1 and all 1 <= m <= 20, 0 <= a <= m - 1 (scan maximum 0.680).
inline constexpr double kCovarianceBoundC = 1.0;
// |indicator_cov_gaussian(rho, 1, B)| <= kIndicatorCovC * |rho| for |rho| <= 1/2
// over the standard rectangle family (scan maximum 0.064). The margin also
// covers half-lines through 0, which reach 0.1667 at |rho| = 1/2.
inline constexpr double kIndicatorCovC = 0.2;

}  // namespace branchou::theory
