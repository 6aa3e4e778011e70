#include "branchou/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "branchou/errors.hpp"
#include "branchou/parallel.hpp"
#include "branchou/stats.hpp"
#include "branchou/theory.hpp"

namespace branchou {

Thresholds Thresholds::quick() {
  Thresholds t;
  t.z_band = 5.0;
  t.ks_alpha = 1e-4;
  t.chi2_confidence = 0.9999;
  t.escape_rel_tol = 0.15;
  t.slln_tolerance = 0.04;
  t.slln_pass_fraction = 0.9;
  t.extinction_fraction = 0.9;
  t.extinction_ratio = 0.02;
  t.trend_alpha = 0.05;
  t.euler_ratio_lo = 1.2;
  t.euler_ratio_hi = 3.5;
  t.bootstrap_resamples = 100;
  return t;
}

namespace {

constexpr std::uint64_t kBootstrapTag = 0xb007;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const StepperConfig kExact{StepperConfig::Mode::ExactGeneration, 1.0};

// Calls fn on the snapshot at the end of the last generation.
template <typename Fn>
void with_final(const ModelParams& p, const StepperConfig& cfg, const RngStream& stream, Fn&& fn) {
  simulate(p, cfg, stream, [&](const Generation& g) {
    if (g.m == p.horizon_m && g.at_end()) fn(g);
  });
}

// Parameters for a run whose last snapshot is at integer time m >= 1.
ModelParams observed_at_time(const ModelParams& params, int m) {
  if (m < 1) throw ArgumentError("observation time must be >= 1");
  ModelParams p = params;
  p.horizon_m = m - 1;
  return p;
}

ModelParams with_horizon(const ModelParams& params, int m) {
  ModelParams p = params;
  p.horizon_m = m;
  return p;
}

ExperimentReport start_report(std::string name, const ModelParams& p, std::size_t replicates) {
  ExperimentReport r;
  r.experiment = std::move(name);
  r.replicates = replicates;
  r.params = {{"d", p.dim}, {"b", p.b}, {"gamma", p.gamma}, {"seed", static_cast<double>(p.seed)}};
  return r;
}

double first_relative(const Generation& g) { return g.positions(0, 0) - g.positions.row(0).mean(); }

}  // namespace

ExperimentReport com_convergence_test(const ModelParams& params, int m, const RunOptions& opt) {
  if (!(params.b > 0.0)) throw DomainError("com_convergence_test requires b > 0");
  Stopwatch clock;
  const ModelParams p = observed_at_time(params, m);
  const RngStream root(p.seed);
  std::vector<double> com(opt.replicates);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(p, kExact, root.replicate(r), [&](const Generation& g) { com[r] = g.positions.row(0).mean(); });
  });

  const Thresholds& th = opt.thresholds;
  const double theo = std::exp(-2.0 * p.b * m) * theory::com_time_change(m, p.b).value;
  const stats::Moments mo = stats::moments(com);
  const auto [lo, hi] = stats::variance_interval(mo.n, theo, th.chi2_confidence);
  ExperimentReport rep = start_report("com_convergence", p, opt.replicates);
  rep.params.emplace_back("m", m);
  rep.add_z("var_com", mo.variance, theo, theo * std::sqrt(2.0 / (mo.n - 1.0)), th.z_band,
            lo <= mo.variance && mo.variance <= hi);
  rep.add_z("mean_com", mo.mean, 0.0, mo.standard_error(), th.z_band);
  double max_abs = 0.0;
  for (double c : com) max_abs = std::max(max_abs, std::abs(c));
  const double cap = th.max_com_sigmas * std::sqrt(theo);
  rep.add_check("max_abs_com", max_abs, cap, max_abs <= cap);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport escape_test(const ModelParams& params, int m, const RunOptions& opt) {
  if (!(params.b < 0.0)) throw DomainError("escape_test requires b < 0");
  Stopwatch clock;
  const ModelParams p = observed_at_time(params, m);
  const RngStream root(p.seed);
  const int d = p.dim;
  Eigen::MatrixXd scaled(d, static_cast<Eigen::Index>(opt.replicates));
  const double factor = std::exp(p.b * m);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(p, kExact, root.replicate(r), [&](const Generation& g) {
      scaled.col(static_cast<Eigen::Index>(r)) = factor * center_of_mass(g);
    });
  });

  const Thresholds& th = opt.thresholds;
  const double target = theory::terminal_variance(p.b);
  ExperimentReport rep = start_report("com_escape", p, opt.replicates);
  rep.params.emplace_back("m", m);
  rep.add_info("finite_time_variance", theory::com_time_change(m, p.b), target);
  std::vector<stats::Moments> per;
  for (int k = 0; k < d; ++k) {
    const Eigen::VectorXd row = scaled.row(k).transpose();
    const stats::Moments mo = stats::moments(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    per.push_back(mo);
    const std::string tag = "_coord" + std::to_string(k);
    rep.add_z("variance" + tag, mo.variance, target, target * std::sqrt(2.0 / (mo.n - 1.0)), th.z_band,
              std::abs(mo.variance / target - 1.0) <= th.escape_rel_tol);
    rep.add_z("excess_kurtosis" + tag, mo.excess_kurtosis(), 0.0, std::sqrt(24.0 / mo.n), th.z_band);
  }
  for (int k = 1; k < d; ++k) {
    const Eigen::ArrayXd a = scaled.row(0).array() - per[0].mean;
    const Eigen::ArrayXd b = scaled.row(k).array() - per[static_cast<std::size_t>(k)].mean;
    const double n = static_cast<double>(opt.replicates);
    const double cov = (a * b).sum() / (n - 1.0);
    const double se = std::sqrt(per[0].variance * per[static_cast<std::size_t>(k)].variance / n);
    rep.add_z("cross_covariance_0_" + std::to_string(k), cov, 0.0, se, th.z_band);
  }
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport relative_variance_test(const ModelParams& params, const std::vector<int>& times,
                                        const RunOptions& opt) {
  if (times.empty()) throw ArgumentError("relative_variance_test needs observation times");
  Stopwatch clock;
  const int last = *std::max_element(times.begin(), times.end());
  const ModelParams p = observed_at_time(params, last);
  const RngStream root(p.seed);
  std::vector<std::vector<double>> samples(times.size(), std::vector<double>(opt.replicates));
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    simulate(p, kExact, root.replicate(r), [&](const Generation& g) {
      for (std::size_t k = 0; k < times.size(); ++k) {
        // Start of generation T, or end of the last generation when T is the final time.
        if (g.t == times[k] && (g.at_start() || g.m == p.horizon_m)) samples[k][r] = first_relative(g);
      }
    });
  });

  const Thresholds& th = opt.thresholds;
  ExperimentReport rep = start_report("relative_variance", p, opt.replicates);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double theo = theory::relative_variance(times[k], p.gamma_plus_b());
    const stats::Moments mo = stats::moments(samples[k]);
    const auto [lo, hi] = stats::variance_interval(mo.n, theo, th.chi2_confidence);
    rep.add_z("var_Y1_t" + std::to_string(times[k]), mo.variance, theo, theo * std::sqrt(2.0 / (mo.n - 1.0)),
              th.z_band, lo <= mo.variance && mo.variance <= hi);
  }
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport covariance_mrca_test(const ModelParams& params, int m, const std::vector<int>& classes,
                                      const RunOptions& opt) {
  Stopwatch clock;
  const ModelParams p = with_horizon(params, m);
  const RngStream root(p.seed);
  std::vector<std::vector<ClassPairMoments>> per(classes.size(), std::vector<ClassPairMoments>(opt.replicates));
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(p, kExact, root.replicate(r), [&](const Generation& g) {
      for (std::size_t k = 0; k < classes.size(); ++k) per[k][r] = class_pair_moments(g, classes[k]);
    });
  });

  const Thresholds& th = opt.thresholds;
  ExperimentReport rep = start_report("covariance_mrca", p, opt.replicates);
  rep.params.emplace_back("m", m);
  const RngStream boot = root.purpose(kBootstrapTag);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const int a = classes[k];
    const CovarianceEstimate est =
        covariance_by_class(per[k], boot.purpose(static_cast<std::uint64_t>(a)), th.bootstrap_resamples);
    const double theo = theory::class_covariance(m, a, p.gamma_plus_b());
    rep.add_z("cov_split_" + std::to_string(a), est.estimate, theo, est.standard_error, th.z_band);
    const double bound = theory::covariance_bound(m + 1, a + 1, p.gamma_plus_b(), theory::kCovarianceBoundC);
    rep.add_check("bound_split_" + std::to_string(a), std::abs(theo), bound, std::abs(theo) <= bound);
  }
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport slln_test(const ModelParams& params, int m, const RunOptions& opt) {
  Stopwatch clock;
  const ModelParams p = with_horizon(params, m);
  const RngStream root(p.seed);
  const SllnReference reference(RectangleFamily::standard(p.dim), p.gamma_plus_b());
  std::vector<double> deviation(opt.replicates);
  std::vector<double> central(opt.replicates);
  Box central_box{Eigen::VectorXd::Constant(p.dim, -1.0), Eigen::VectorXd::Constant(p.dim, 1.0)};
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(p, kExact, root.replicate(r), [&](const Generation& g) {
      deviation[r] = reference.deviation(g);
      central[r] = empirical_measure(relative_positions(g), central_box);
    });
  });

  const Thresholds& th = opt.thresholds;
  const auto within = static_cast<double>(
      std::count_if(deviation.begin(), deviation.end(), [&](double v) { return v <= th.slln_tolerance; }));
  const double fraction = within / static_cast<double>(opt.replicates);
  ExperimentReport rep = start_report("slln", p, opt.replicates);
  rep.params.emplace_back("m", m);
  rep.params.emplace_back("tolerance", th.slln_tolerance);
  rep.add_check("fraction_within_tolerance", fraction, th.slln_pass_fraction, fraction >= th.slln_pass_fraction);
  rep.add_info("median_deviation", stats::median(deviation), 0.0);
  rep.add_info("max_deviation", *std::max_element(deviation.begin(), deviation.end()), 0.0);
  const stats::Moments cm = stats::moments(central);
  rep.add_info("mass_unit_cube", cm.mean,
               theory::limit_box_mass(central_box.lo, central_box.hi, p.gamma_plus_b()), cm.standard_error());
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport delta_equivalence_test(const ModelParams& p1, const ModelParams& p2, int m,
                                        const RunOptions& opt) {
  const double s1 = p1.gamma_plus_b();
  const double s2 = p2.gamma_plus_b();
  if (std::abs(s1 - s2) > 1e-12 * std::max({1.0, std::abs(s1), std::abs(s2)})) {
    throw ArgumentError("delta equivalence needs equal gamma + b");
  }
  if (p1.dim != p2.dim) throw ArgumentError("delta equivalence needs equal dimensions");
  Stopwatch clock;
  const ModelParams a = with_horizon(p1, m);
  const ModelParams b = with_horizon(p2, m);
  const RngStream root_a = RngStream(a.seed).purpose(1);
  const RngStream root_b = RngStream(b.seed).purpose(2);
  std::vector<double> ya(opt.replicates), yb(opt.replicates);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(a, kExact, root_a.replicate(r), [&](const Generation& g) { ya[r] = first_relative(g); });
    with_final(b, kExact, root_b.replicate(r), [&](const Generation& g) { yb[r] = first_relative(g); });
  });

  const Thresholds& th = opt.thresholds;
  ExperimentReport rep;
  rep.experiment = "delta_equivalence";
  rep.replicates = opt.replicates;
  rep.params = {{"d", a.dim}, {"b1", a.b}, {"gamma1", a.gamma}, {"b2", b.b}, {"gamma2", b.gamma},
                {"m", m}, {"seed", static_cast<double>(a.seed)}};
  const stats::KsResult ks = stats::ks_two_sample(ya, yb);
  rep.add_check("ks_p_value", ks.p_value, th.ks_alpha, ks.p_value > th.ks_alpha);
  const stats::Moments ma = stats::moments(ya);
  const stats::Moments mb = stats::moments(yb);
  rep.add_z("mean_difference", ma.mean - mb.mean, 0.0, std::hypot(ma.standard_error(), mb.standard_error()),
            th.z_band);
  rep.add_z("variance_difference", ma.variance - mb.variance, 0.0,
            std::hypot(ma.variance_standard_error(), mb.variance_standard_error()), th.z_band);
  rep.add_info("variance_theory", ma.variance, theory::relative_variance(m + 1, s1), ma.variance_standard_error());
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport extinction_test(const ModelParams& params, int m, double ball_radius, const RunOptions& opt) {
  Stopwatch clock;
  const ModelParams p = with_horizon(params, m);
  const RngStream root(p.seed);
  std::vector<ExtinctionSample> samples(opt.replicates);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(p, kExact, root.replicate(r), [&](const Generation& g) { samples[r] = extinction_sample(g, ball_radius); });
  });
  const ExtinctionSummary s = extinction_diagnostic(samples);
  const Thresholds& th = opt.thresholds;
  ExperimentReport rep = start_report("local_extinction", p, opt.replicates);
  rep.params.emplace_back("m", m);
  rep.params.emplace_back("ball_radius", ball_radius);
  rep.add_check("zero_occupation_fraction", s.zero_fraction, th.extinction_fraction,
                s.zero_fraction >= th.extinction_fraction);
  rep.add_check("median_support_to_com_ratio", s.median_ratio, th.extinction_ratio,
                s.median_ratio < th.extinction_ratio);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport watanabe_scaling_test(const ModelParams& params, int n_lo, int n_hi, const Box& box,
                                       const RunOptions& opt) {
  if (std::abs(params.gamma_plus_b()) > 1e-12 || !(params.b > 0.0)) {
    throw DomainError("watanabe scaling needs gamma + b == 0 and b > 0");
  }
  if (n_lo < 1 || n_hi < n_lo + 2) throw ArgumentError("watanabe scaling needs 1 <= n_lo and n_hi >= n_lo + 2");
  if (box.lo.size() != params.dim) throw ArgumentError("box dimension differs from the model dimension");
  Stopwatch clock;
  const ModelParams p = with_horizon(params, n_hi);
  const RngStream root(p.seed);
  const auto width = static_cast<std::size_t>(n_hi - n_lo + 1);
  const Box upper{Eigen::VectorXd::Zero(p.dim), Eigen::VectorXd::Ones(p.dim)};
  const Box lower{-Eigen::VectorXd::Ones(p.dim), Eigen::VectorXd::Zero(p.dim)};
  std::vector<double> scaled(opt.replicates * width);
  std::vector<double> ratio(opt.replicates);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    simulate(p, kExact, root.replicate(r), [&](const Generation& g) {
      if (!g.at_start() || g.m < n_lo) return;
      const double count = empirical_measure(g.positions, box) * static_cast<double>(g.size());
      scaled[r * width + static_cast<std::size_t>(g.m - n_lo)] = theory::watanabe_scale(g.m, p.dim) * count;
      if (g.m == n_hi) {
        const double up = empirical_measure(g.positions, upper);
        const double down = empirical_measure(g.positions, lower);
        ratio[r] = down > 0.0 ? up / down : std::numeric_limits<double>::quiet_NaN();
      }
    });
  });

  const Thresholds& th = opt.thresholds;
  const double target = box.volume();
  ExperimentReport rep = start_report("watanabe_scaling", p, opt.replicates);
  rep.params.emplace_back("n_lo", n_lo);
  rep.params.emplace_back("n_hi", n_hi);
  std::vector<double> distance;
  for (std::size_t k = 0; k < width; ++k) {
    std::vector<double> column(opt.replicates);
    for (std::size_t r = 0; r < opt.replicates; ++r) column[r] = scaled[r * width + k];
    const stats::Moments mo = stats::moments(column);
    distance.push_back(std::abs(mo.mean - target));
    rep.add_info("scaled_mass_n" + std::to_string(n_lo + static_cast<int>(k)), mo.mean, target, mo.standard_error());
  }
  const stats::TrendResult trend = stats::spearman_trend(distance);
  rep.add_info("spearman_rho", trend.rho, -1.0);
  rep.add_check("trend_p_value", trend.p_decreasing, th.trend_alpha, trend.p_decreasing < th.trend_alpha);
  std::vector<double> finite;
  for (double v : ratio) if (std::isfinite(v)) finite.push_back(v);
  if (!finite.empty()) rep.add_info("unit_box_ratio_median", stats::median(finite), 1.0);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport bounded_drift_test(const ModelParams& params, int m, const StepperConfig& cfg,
                                    const RunOptions& opt) {
  if (!params.bounded) throw DomainError("bounded_drift_test needs the bounded drift mode");
  if (cfg.mode != StepperConfig::Mode::Euler) throw ConfigError("bounded drift runs need the Euler stepper");
  Stopwatch clock;
  const ModelParams p = observed_at_time(params, m);
  const RngStream root(p.seed);
  const BoundedDrift& f = *p.bounded;
  const auto reps = static_cast<Eigen::Index>(opt.replicates);
  Eigen::MatrixXd speed(p.dim, reps);
  // Zbar_t minus the noise average: the time integral of the mean drift.
  Eigen::MatrixXd drift_speed(p.dim, reps);
  const SnapshotPolicy every_step{1};
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    Eigen::VectorXd integral = Eigen::VectorXd::Zero(p.dim);
    simulate(p, cfg, root.replicate(r), [&](const Generation& g) {
      if (g.m == p.horizon_m && g.at_end()) {
        speed.col(static_cast<Eigen::Index>(r)) = center_of_mass(g) / static_cast<double>(m);
        drift_speed.col(static_cast<Eigen::Index>(r)) = integral / static_cast<double>(m);
        return;
      }
      integral += cfg.h * g.positions.unaryExpr([&f](double x) { return f(x); }).rowwise().mean();
    }, every_step);
  });

  ExperimentReport rep = start_report("bounded_drift", p, opt.replicates);
  rep.params.emplace_back("m", m);
  rep.params.emplace_back("h", cfg.h);
  rep.params.emplace_back("lower", f.lower);
  rep.params.emplace_back("upper", f.upper);
  rep.add_check("min_com_speed", speed.minCoeff(), f.lower, speed.minCoeff() > f.lower);
  rep.add_check("max_com_speed", speed.maxCoeff(), f.upper, speed.maxCoeff() < f.upper);
  rep.add_info("mean_com_speed", speed.mean(), 0.5 * (f.lower + f.upper));
  // The drift part alone is sandwiched pathwise; the remainder is the averaged noise,
  // whose variance at time m is sum_{k<m} 2^-k.
  rep.add_check("min_drift_speed", drift_speed.minCoeff(), f.lower, drift_speed.minCoeff() > f.lower);
  rep.add_check("max_drift_speed", drift_speed.maxCoeff(), f.upper, drift_speed.maxCoeff() < f.upper);
  const double noise_sd = std::sqrt(2.0 * (1.0 - std::ldexp(1.0, -m))) / m;
  const Eigen::MatrixXd noise = speed - drift_speed;
  const double noise_var = (noise.array() - noise.mean()).square().sum() / std::max<double>(1.0, noise.size() - 1.0);
  rep.add_info("noise_speed_sd", std::sqrt(noise_var), noise_sd);
  const auto outside = ((speed.array() <= f.lower) || (speed.array() >= f.upper)).count();
  rep.add_info("replicates_outside", static_cast<double>(outside), 0.0);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport euler_convergence_test(const ModelParams& params, double h, const RunOptions& opt) {
  if (params.bounded) throw DomainError("euler_convergence_test needs the linear drift");
  Stopwatch clock;
  const ModelParams& p = params;
  const double t_end = p.horizon_m + 1.0;
  const double x0 = p.start.size() > 0 ? p.start[0] : 0.0;
  const double exact_mean = std::exp(-p.b * t_end) * x0;
  const double exact_var = theory::relative_variance(p.horizon_m + 1, p.gamma_plus_b());

  struct Errors {
    double mean, mean_se, var, var_se;
  };
  auto measure = [&](double step, std::uint64_t tag) {
    const StepperConfig cfg{StepperConfig::Mode::Euler, step};
    const RngStream root = RngStream(p.seed).purpose(tag);
    std::vector<double> com(opt.replicates), y1(opt.replicates);
    for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
      with_final(p, cfg, root.replicate(r), [&](const Generation& g) {
        com[r] = g.positions.row(0).mean();
        y1[r] = first_relative(g);
      });
    });
    const stats::Moments mc = stats::moments(com);
    const stats::Moments my = stats::moments(y1);
    return Errors{mc.mean - exact_mean, mc.standard_error(), my.variance - exact_var, my.variance_standard_error()};
  };
  const Errors coarse = measure(h, 1);
  const Errors fine = measure(h / 2.0, 2);

  const Thresholds& th = opt.thresholds;
  ExperimentReport rep = start_report("euler_convergence", p, opt.replicates);
  rep.params.emplace_back("h", h);
  rep.params.emplace_back("t_end", t_end);
  rep.add_info("mean_error_h", coarse.mean, 0.0, coarse.mean_se);
  rep.add_info("mean_error_h_half", fine.mean, 0.0, fine.mean_se);
  rep.add_info("variance_error_h", coarse.var, 0.0, coarse.var_se);
  rep.add_info("variance_error_h_half", fine.var, 0.0, fine.var_se);
  const double mean_ratio = coarse.mean / fine.mean;
  const double var_ratio = coarse.var / fine.var;
  rep.add_check("mean_error_ratio", mean_ratio, 2.0, th.euler_ratio_lo <= mean_ratio && mean_ratio <= th.euler_ratio_hi);
  rep.add_check("variance_error_ratio", var_ratio, 2.0, th.euler_ratio_lo <= var_ratio && var_ratio <= th.euler_ratio_hi);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

CoordinatePairs sample_coordinate_pairs(const std::vector<double>& correlations, std::size_t n,
                                        const RngStream& rng) {
  const auto d = static_cast<Eigen::Index>(correlations.size());
  CoordinatePairs out{Eigen::MatrixXd(d, static_cast<Eigen::Index>(n)), Eigen::MatrixXd(d, static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const std::uint64_t base = 2 * (i * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(k));
      const double rho = correlations[static_cast<std::size_t>(k)];
      if (std::abs(rho) > 1.0) throw ArgumentError("correlations must lie in [-1, 1]");
      const double u = rng.normal(base);
      const double v = rng.normal(base + 1);
      out.x(k, static_cast<Eigen::Index>(i)) = u;
      out.y(k, static_cast<Eigen::Index>(i)) = rho * u + std::sqrt(1.0 - rho * rho) * v;
    }
  }
  return out;
}

namespace {

struct IndicatorCov {
  double cov;
  double se;
};

IndicatorCov indicator_covariance(const Eigen::ArrayXd& u, const Eigen::ArrayXd& v) {
  const double n = static_cast<double>(u.size());
  const Eigen::ArrayXd cu = u - u.mean();
  const Eigen::ArrayXd cv = v - v.mean();
  const Eigen::ArrayXd prod = cu * cv;
  const double cov = prod.mean();
  const double var = (prod - cov).square().sum() / (n - 1.0);
  return {cov, std::sqrt(var / n)};
}

}  // namespace

ExperimentReport coordinate_cov_check(const CoordinatePairs& samples, const Box& box, const Thresholds& th) {
  const Eigen::Index d = samples.x.rows();
  const Eigen::Index n = samples.x.cols();
  if (box.lo.size() != d || samples.y.rows() != d || samples.y.cols() != n || n < 2) {
    throw ArgumentError("coordinate_cov_check: mismatched samples and box");
  }
  auto inside = [&](const Eigen::MatrixXd& pts) {
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = box.contains(pts.col(i)) ? 1.0 : 0.0;
    return out;
  };
  const IndicatorCov joint = indicator_covariance(inside(samples.x), inside(samples.y));
  double rhs = 0.0;
  double rhs_var = 0.0;
  ExperimentReport rep;
  rep.experiment = "coordinate_control";
  rep.replicates = static_cast<std::size_t>(n);
  rep.params = {{"d", static_cast<double>(d)}};
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::ArrayXd u(n), v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      u[i] = (samples.x(k, i) >= box.lo[k] && samples.x(k, i) < box.hi[k]) ? 1.0 : 0.0;
      v[i] = (samples.y(k, i) >= box.lo[k] && samples.y(k, i) < box.hi[k]) ? 1.0 : 0.0;
    }
    const IndicatorCov c = indicator_covariance(u, v);
    rhs += std::abs(c.cov);
    rhs_var += c.se * c.se;
    rep.add_info("coordinate_cov_" + std::to_string(k), c.cov, 0.0, c.se);
  }
  const double slack = th.z_band * std::sqrt(joint.se * joint.se + rhs_var);
  const double lhs = std::abs(joint.cov);
  rep.add_info("joint_cov", joint.cov, 0.0, joint.se);
  rep.add_check("coordinate_control", lhs, rhs + slack, lhs <= rhs + slack);
  return rep;
}

ExperimentReport indicator_cov_scan(double c_frozen, int grid_points) {
  if (grid_points < 2) throw ArgumentError("indicator_cov_scan needs at least two grid points");
  Stopwatch clock;
  const RectangleFamily family = RectangleFamily::standard(1);
  double worst_ratio = 0.0;
  double worst_at_zero = 0.0;
  for (const Box& box : family.boxes) {
    const theory::Interval interval{box.lo[0], box.hi[0]};
    worst_at_zero = std::max(worst_at_zero, std::abs(theory::indicator_cov_gaussian(0.0, 1.0, interval).value));
    for (int k = 0; k < grid_points; ++k) {
      const double rho = -0.5 + k * (1.0 / (grid_points - 1));
      if (std::abs(rho) < 1e-12) continue;
      const double psi = theory::indicator_cov_gaussian(rho, 1.0, interval);
      worst_ratio = std::max(worst_ratio, std::abs(psi) / std::abs(rho));
    }
  }
  ExperimentReport rep;
  rep.experiment = "indicator_cov_scan";
  rep.params = {{"c_frozen", c_frozen}, {"grid_points", grid_points}};
  rep.replicates = family.boxes.size();
  rep.add_check("max_abs_psi_over_rho", worst_ratio, c_frozen, worst_ratio <= c_frozen);
  rep.add_check("psi_at_zero", worst_at_zero, 0.0, worst_at_zero == 0.0);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport com_gamma_free_test(const ModelParams& params, double other_gamma, int m, const RunOptions& opt) {
  Stopwatch clock;
  const ModelParams a = observed_at_time(params, m);
  ModelParams b = a;
  b.gamma = other_gamma;
  const RngStream root_a = RngStream(a.seed).purpose(1);
  const RngStream root_b = RngStream(a.seed).purpose(2);
  std::vector<double> ca(opt.replicates), cb(opt.replicates);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(a, kExact, root_a.replicate(r), [&](const Generation& g) { ca[r] = g.positions.row(0).mean(); });
    with_final(b, kExact, root_b.replicate(r), [&](const Generation& g) { cb[r] = g.positions.row(0).mean(); });
  });
  ExperimentReport rep = start_report("com_gamma_free", a, opt.replicates);
  rep.params.emplace_back("other_gamma", other_gamma);
  rep.params.emplace_back("m", m);
  const stats::KsResult ks = stats::ks_two_sample(ca, cb);
  rep.add_check("ks_p_value", ks.p_value, opt.thresholds.ks_alpha, ks.p_value > opt.thresholds.ks_alpha);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

ExperimentReport independence_proxy_test(const ModelParams& params, int m, const Box& box, const RunOptions& opt) {
  Stopwatch clock;
  const ModelParams p = observed_at_time(params, m);
  const RngStream root(p.seed);
  std::vector<double> com(opt.replicates), mass(opt.replicates);
  const double factor = std::exp(p.b * m);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    with_final(p, kExact, root.replicate(r), [&](const Generation& g) {
      com[r] = factor * g.positions.row(0).mean();
      mass[r] = empirical_measure(relative_positions(g), box);
    });
  });
  ExperimentReport rep = start_report("independence_proxy", p, opt.replicates);
  rep.params.emplace_back("m", m);
  rep.add_z("correlation", stats::correlation(com, mass), 0.0, 1.0 / std::sqrt(static_cast<double>(opt.replicates)),
            opt.thresholds.z_band);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

OccupationCell occupation_cell(const ModelParams& params, int generations, const RunOptions& opt) {
  if (generations < 2) throw ArgumentError("occupation_cell needs at least 2 generations");
  const ModelParams p = with_horizon(params, generations);
  const RngStream root(p.seed);
  const auto width = static_cast<std::size_t>(generations);
  std::vector<double> fraction(opt.replicates * width);
  for_each_replicate(opt.replicates, opt.jobs, [&](std::size_t r) {
    simulate(p, kExact, root.replicate(r), [&](const Generation& g) {
      if (!g.at_start() || g.m < 1) return;
      const auto inside = (g.positions.colwise().norm().array() < 1.0).count();
      fraction[r * width + static_cast<std::size_t>(g.m - 1)] =
          static_cast<double>(inside) / static_cast<double>(g.size());
    });
  });

  OccupationCell cell;
  cell.b = p.b;
  cell.gamma = p.gamma;
  cell.replicates = opt.replicates;
  cell.generations = generations;
  std::vector<double> mean(width, 0.0);
  std::size_t empty = 0;
  for (std::size_t r = 0; r < opt.replicates; ++r) {
    for (std::size_t k = 0; k < width; ++k) mean[k] += fraction[r * width + k] / static_cast<double>(opt.replicates);
    empty += fraction[r * width + width - 1] == 0.0 ? 1 : 0;
  }
  cell.mean_unit_ball_fraction = mean.back();
  cell.zero_occupation_fraction = static_cast<double>(empty) / static_cast<double>(opt.replicates);
  // Least-squares slope of log mean occupation over the second half of the generations.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = width / 2; k < width; ++k) {
    if (mean[k] > 0.0) pts.emplace_back(static_cast<double>(k + 1), std::log(mean[k]));
  }
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    cell.occupation_decay_rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  } else {
    cell.occupation_decay_rate = std::numeric_limits<double>::quiet_NaN();
  }
  return cell;
}

}  // namespace branchou
