#include "branchou/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "branchou/errors.hpp"
#include "branchou/math.hpp"

namespace branchou::theory {

namespace {

using boost::math::quadrature::gauss_kronrod;

double pow2_neg(int n) { return std::ldexp(1.0, -n); }

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

// sum_{n=0}^{m-1} q^n, switching to direct summation near q = 1.
double geometric_sum(double q, int m, bool& singular) {
  if (std::abs(1.0 - q) < kSeriesSwitch) {
    singular = true;
    double sum = 0.0;
    double term = 1.0;
    for (int n = 0; n < m; ++n, term *= q) sum += term;
    return sum;
  }
  return (1.0 - std::pow(q, m)) / (1.0 - q);
}

}  // namespace

std::string_view formula_name(Formula f) {
  switch (f) {
    case Formula::ComTimeChange: return "com_time_change";
    case Formula::TerminalVariance: return "terminal_variance";
    case Formula::RelativeVariance: return "relative_variance";
    case Formula::RelativeVarianceClosed: return "relative_variance_closed";
    case Formula::NoiseCovariance: return "noise_covariance";
    case Formula::PairCovariance: return "pair_covariance";
    case Formula::ClassCovariance: return "class_covariance";
    case Formula::CovarianceBound: return "covariance_bound";
    case Formula::LimitDensity: return "limit_density";
    case Formula::LimitBoxMass: return "limit_box_mass";
    case Formula::WatanabeScale: return "watanabe_scale";
    case Formula::IndicatorCovariance: return "indicator_cov_gaussian";
  }
  return "unknown";
}

TheoryValue com_time_change(double t, double b) {
  require(t >= 0.0 && std::isfinite(t), "com_time_change needs finite t >= 0");
  const bool singular = std::abs(b) < kSeriesSwitch;
  // int_m^{m+1} e^{2bs} ds = e^{2bm} growth_variance(b), and the partial
  // interval of length r contributes e^{2bm} r growth_variance(b r).
  const int whole = static_cast<int>(std::floor(t));
  double sum = 0.0;
  const double per_interval = growth_variance(b);
  for (int m = 0; m < whole; ++m) sum += pow2_neg(m) * std::exp(2.0 * b * m) * per_interval;
  const double rest = t - whole;
  if (rest > 0.0) sum += pow2_neg(whole) * std::exp(2.0 * b * whole) * rest * growth_variance(b * rest);
  return {sum, Formula::ComTimeChange, singular};
}

TheoryValue terminal_variance(double b) {
  require(b < 0.0, "terminal_variance requires b < 0, got b=" + std::to_string(b));
  const double e2b = std::exp(2.0 * b);
  // expm1 keeps the numerator accurate as b -> 0-.
  const double numerator = -std::expm1(2.0 * b) / std::abs(b);
  return {numerator / (2.0 - e2b), Formula::TerminalVariance, std::abs(b) < kSeriesSwitch};
}

TheoryValue relative_variance(int m, double gamma_eff) {
  require(m >= 0, "relative_variance needs m >= 0");
  // e^{-2g} b_k = (1 - 2^{-k}) (1 - e^{-2g}) / (2g).
  const double decay = std::exp(-2.0 * gamma_eff);
  const double unit = relaxation_variance(gamma_eff);
  double a = 0.0;
  for (int k = 0; k < m; ++k) a = decay * a + (1.0 - pow2_neg(k)) * unit;
  return {a, Formula::RelativeVariance, std::abs(gamma_eff) < kSeriesSwitch};
}

TheoryValue relative_variance_closed(int m, double gamma_eff) {
  require(m >= 1, "relative_variance_closed needs m >= 1");
  require(gamma_eff > 0.0, "relative_variance_closed needs gamma_eff > 0");
  bool singular = false;
  const double e2g = std::exp(2.0 * gamma_eff);
  // (1 - e^{2mg}) / (1 - e^{2g}) and (1 - (e^{2g}/2)^m) / (2 - e^{2g}),
  // both written as geometric sums.
  const double first = std::expm1(2.0 * m * gamma_eff) / std::expm1(2.0 * gamma_eff);
  const double second = 0.5 * geometric_sum(0.5 * e2g, m, singular);
  const double value = growth_variance(gamma_eff) * std::exp(-2.0 * m * gamma_eff) * (first - second);
  return {value, Formula::RelativeVarianceClosed, singular};
}

TheoryValue noise_covariance(int n, double gamma_eff) {
  require(n >= 0, "noise_covariance needs n >= 0");
  return {-pow2_neg(n) * growth_variance(gamma_eff), Formula::NoiseCovariance,
          std::abs(gamma_eff) < kSeriesSwitch};
}

TheoryValue pair_covariance(int m, int a, double gamma_eff) {
  require(a >= 0 && a <= m, "pair_covariance needs 0 <= a <= m");
  const TheoryValue var_a = relative_variance(a, gamma_eff);
  double value = std::exp(-2.0 * gamma_eff * (m - a)) * var_a.value;
  for (int k = a; k < m; ++k) {
    value += std::exp(-2.0 * gamma_eff * (m - k)) * noise_covariance(k, gamma_eff).value;
  }
  return {value, Formula::PairCovariance, var_a.singular_handled};
}

TheoryValue class_covariance(int m, int a, double gamma_eff) {
  require(m >= 1 && a >= 0 && a <= m - 1, "class_covariance needs m >= 1 and 0 <= a <= m-1");
  TheoryValue v = pair_covariance(m + 1, a + 1, gamma_eff);
  v.formula = Formula::ClassCovariance;
  return v;
}

TheoryValue covariance_bound(int m, int a, double gamma_eff, double c) {
  require(m >= 1 && a >= 0 && a <= m - 1, "covariance_bound needs m >= 1 and 0 <= a <= m-1");
  require(gamma_eff > 0.0 && c > 0.0, "covariance_bound needs gamma_eff > 0 and C > 0");
  return {c * m * (std::exp(-2.0 * gamma_eff * (m - a)) + pow2_neg(m)), Formula::CovarianceBound, false};
}

TheoryValue limit_density(const Eigen::Ref<const Eigen::VectorXd>& y, double gamma_plus_b, int d) {
  require(gamma_plus_b > 0.0, "limit_density requires gamma + b > 0");
  require(d >= 1 && y.size() == d, "limit_density: y must have d coordinates");
  const double value =
      std::pow(gamma_plus_b / std::numbers::pi, 0.5 * d) * std::exp(-gamma_plus_b * y.squaredNorm());
  return {value, Formula::LimitDensity, false};
}

TheoryValue limit_box_mass(const Eigen::Ref<const Eigen::VectorXd>& lo,
                           const Eigen::Ref<const Eigen::VectorXd>& hi, double gamma_plus_b) {
  require(gamma_plus_b > 0.0, "limit_box_mass requires gamma + b > 0");
  require(lo.size() == hi.size() && lo.size() >= 1, "limit_box_mass: mismatched box");
  const double scale = std::sqrt(gamma_plus_b / std::numbers::pi);
  const double reach = 40.0 / std::sqrt(gamma_plus_b);
  auto density = [&](double x) { return scale * std::exp(-gamma_plus_b * x * x); };
  double mass = 1.0;
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    const double a = std::max(lo[k], -reach);
    const double b = std::min(hi[k], reach);
    if (!(b > a)) return {0.0, Formula::LimitBoxMass, false};
    double error = 0.0;
    mass *= gauss_kronrod<double, 31>::integrate(density, a, b, 15, 1e-13, &error);
  }
  return {mass, Formula::LimitBoxMass, false};
}

TheoryValue watanabe_scale(int n, int d) {
  require(n >= 1 && d >= 1, "watanabe_scale needs n >= 1 and d >= 1");
  const double value = std::pow(2.0 * std::numbers::pi * n, 0.5 * d) * pow2_neg(n);
  return {value, Formula::WatanabeScale, false};
}

TheoryValue indicator_cov_gaussian(double rho, double sigma_sq, Interval box) {
  require(sigma_sq > 0.0, "indicator_cov_gaussian needs sigma_sq > 0");
  require(std::abs(rho) <= sigma_sq, "indicator_cov_gaussian needs |rho| <= sigma_sq");
  if (!(box.hi > box.lo) || rho == 0.0) return {0.0, Formula::IndicatorCovariance, false};

  const double sigma = std::sqrt(sigma_sq);
  auto marginal_mass = [&](double lo, double hi) {
    return 0.5 * (std::erfc(lo / (sigma * std::numbers::sqrt2)) - std::erfc(hi / (sigma * std::numbers::sqrt2)));
  };
  const double p = marginal_mass(box.lo, box.hi);
  if (std::abs(rho) == sigma_sq) {
    // Degenerate joint law: Y = X or Y = -X.
    const double joint = rho > 0.0 ? p : marginal_mass(std::max(box.lo, -box.hi), std::min(box.hi, -box.lo));
    return {std::max(joint, 0.0) - p * p, Formula::IndicatorCovariance, true};
  }

  // Plackett's identity d/dt Phi_2(h, k; t) = phi_2(h, k; t) turns the double
  // integral of joint minus product density into a smooth integral over the
  // correlation, with no cancellation between the two densities.
  const double r = rho / sigma_sq;
  const double lo = box.lo / sigma;
  const double hi = box.hi / sigma;
  auto phi2 = [](double h, double k, double t) {
    if (!std::isfinite(h) || !std::isfinite(k)) return 0.0;
    const double q = 1.0 - t * t;
    return std::exp(-(h * h - 2.0 * t * h * k + k * k) / (2.0 * q)) / (2.0 * std::numbers::pi * std::sqrt(q));
  };
  auto corners = [&](double t) { return phi2(hi, hi, t) - 2.0 * phi2(lo, hi, t) + phi2(lo, lo, t); };
  double error = 0.0;
  const double value = gauss_kronrod<double, 61>::integrate(corners, 0.0, r, 15, 1e-12, &error);
  if (!(error <= 1e-8) || !std::isfinite(value)) {
    throw NumericalError("indicator covariance quadrature did not reach 1e-8 (estimate " + std::to_string(error) + ")");
  }
  return {value, Formula::IndicatorCovariance, false};
}

ModelParams delta_transform(const ModelParams& params, double delta) {
  ModelParams out = params;
  out.gamma = params.gamma - delta;
  out.b = params.b + delta;
  return out;
}

}  // namespace branchou::theory
