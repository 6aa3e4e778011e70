#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "branchou/analysis.hpp"
#include "branchou/params.hpp"
#include "branchou/simulate.hpp"

namespace branchou {

// Every statistical tolerance used by the experiments lives here.
struct Thresholds {
  double z_band = 4.0;              // moment and covariance comparisons
  double ks_alpha = 1e-3;           // two-sample KS rejection level
  double chi2_confidence = 0.999;   // variance intervals
  double escape_rel_tol = 0.05;     // Var(e^{bm} Zbar_m) against T(b)
  double slln_tolerance = 0.02;     // sup over boxes of |empirical - limit|
  double slln_pass_fraction = 0.95;
  double extinction_fraction = 0.95;
  double extinction_ratio = 0.01;   // median support radius / |Zbar|
  double trend_alpha = 0.01;        // Spearman one-sided level
  double euler_ratio_lo = 1.5;      // err(h) / err(h/2)
  double euler_ratio_hi = 2.7;
  double max_com_sigmas = 6.0;      // max |Zbar| in units of the theoretical sd
  int bootstrap_resamples = 200;

  static Thresholds standard() { return {}; }
  // Used with 1/10 of the replicates.
  static Thresholds quick();
};

struct RunOptions {
  std::size_t replicates = 10000;
  int jobs = 1;
  Thresholds thresholds = Thresholds::standard();
};

// Center of mass for b > 0 at integer time m: Var(Zbar_m) against
// e^{-2bm} s(m) and mean against 0.
ExperimentReport com_convergence_test(const ModelParams& params, int m, const RunOptions& opt);

// Escape for b < 0: Var(e^{bm} Zbar_m) against T(b) per coordinate,
// Gaussianity by excess kurtosis, cross-covariances against 0.
ExperimentReport escape_test(const ModelParams& params, int m, const RunOptions& opt);

// Var(Y_m^1) at the given integer times against relative_variance(m, gamma + b).
ExperimentReport relative_variance_test(const ModelParams& params, const std::vector<int>& times,
                                        const RunOptions& opt);

// Pooled covariance of split-time classes at the end of generation m against
// class_covariance(m, a, gamma + b).
ExperimentReport covariance_mrca_test(const ModelParams& params, int m, const std::vector<int>& classes,
                                      const RunOptions& opt);

// One run per replicate; slln deviation of generation m at its end time.
ExperimentReport slln_test(const ModelParams& params, int m, const RunOptions& opt);

// Relative position of particle 1 at the end of generation m under p1 and p2
// (which must share gamma + b): KS and first two moments.
ExperimentReport delta_equivalence_test(const ModelParams& p1, const ModelParams& p2, int m,
                                        const RunOptions& opt);

// End of generation m: share of replicates with an empty origin ball and
// median support_radius / |Zbar|.
ExperimentReport extinction_test(const ModelParams& params, int m, double ball_radius, const RunOptions& opt);

// watanabe_scale(n, d) * Z_n(B) averaged over replicates for n in
// [n_lo, n_hi]; passes when |avg - Leb(B)| trends down (Spearman).
ExperimentReport watanabe_scaling_test(const ModelParams& params, int n_lo, int n_hi, const Box& box,
                                       const RunOptions& opt);

// Bounded drift (Euler): Zbar_m / m inside (lower, upper) for every replicate
// and coordinate.
ExperimentReport bounded_drift_test(const ModelParams& params, int m, const StepperConfig& cfg,
                                    const RunOptions& opt);

// Euler moment error against the exact laws at the end of generation
// params.horizon_m, for step h and h/2. The start point should be away from
// the origin so the mean error is visible.
ExperimentReport euler_convergence_test(const ModelParams& params, double h, const RunOptions& opt);

// Synthetic pairs (X_k, Y_k) with correlation rho_k, independent across k.
struct CoordinatePairs {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
};
CoordinatePairs sample_coordinate_pairs(const std::vector<double>& correlations, std::size_t n,
                                        const RngStream& rng);

// |Cov(1_B(X), 1_B(Y))| <= sum_k |Cov(1_{B_k}(X_k), 1_{B_k}(Y_k))| + z_band SE.
ExperimentReport coordinate_cov_check(const CoordinatePairs& samples, const Box& box, const Thresholds& th);

// Scan of |psi(rho, B)| / |rho| over a rho grid in [-1/2, 1/2] and the
// bounded boxes of the d = 1 family, against the frozen constant.
ExperimentReport indicator_cov_scan(double c_frozen, int grid_points);

// Direct checks of the decomposition: the center of mass law does not
// depend on gamma (KS), and e^{bm} Zbar_m is uncorrelated with the empirical
// mass of the relative system in a fixed box.
ExperimentReport com_gamma_free_test(const ModelParams& params, double other_gamma, int m, const RunOptions& opt);
ExperimentReport independence_proxy_test(const ModelParams& params, int m, const Box& box, const RunOptions& opt);

// Occupation statistics of the unit ball for one (b, gamma) cell.
struct OccupationCell {
  double b = 0.0;
  double gamma = 0.0;
  std::size_t replicates = 0;
  int generations = 0;
  double mean_unit_ball_fraction = 0.0;  // 2^{-n} Z_n(B(0,1)) at the last n
  double zero_occupation_fraction = 0.0;
  double occupation_decay_rate = 0.0;    // slope of log mean 2^{-n} Z_n(B) over n
};
OccupationCell occupation_cell(const ModelParams& params, int generations, const RunOptions& opt);

}  // namespace branchou
