#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "branchou/errors.hpp"
#include "branchou/generation.hpp"
#include "branchou/math.hpp"
#include "branchou/params.hpp"
#include "branchou/rng.hpp"

namespace branchou {

struct StepperConfig {
  enum class Mode { Euler, ExactGeneration };

  Mode mode = Mode::ExactGeneration;
  double h = 1.0 / 256.0;  // Euler only; must be 2^-k

  int steps_per_unit() const { return static_cast<int>(std::lround(1.0 / h)); }

  void validate() const {
    if (mode != Mode::Euler) return;
    int e = 0;
    const double mantissa = std::frexp(h, &e);
    if (!(h > 0.0) || mantissa != 0.5 || e > 1 || e < -29) {
      throw ConfigError("Euler step must be 2^-k with 0 <= k <= 30, got " + std::to_string(h));
    }
  }
};

// Snapshots are emitted at the start of every generation (t = m) and at the
// end of the last one. Euler runs may add intra-interval snapshots every
// `intra_every` substeps.
struct SnapshotPolicy {
  int intra_every = 0;
};

// Largest number of stored coordinates per snapshot (2^22 particles in d=4).
inline constexpr std::uint64_t kCoordinateBudget = std::uint64_t{1} << 24;

inline void check_memory_budget(const ModelParams& params) {
  if (params.horizon_m > 40 ||
      (population(params.horizon_m) * static_cast<std::uint64_t>(params.dim)) > kCoordinateBudget) {
    throw ResourceError("2^" + std::to_string(params.horizon_m) + " particles in d=" +
                        std::to_string(params.dim) +
                        " exceeds the snapshot budget of 2^24 coordinates; lower the generation count");
  }
}

// Drift of every particle: gamma (mean - x_i) - b x_i in Linear mode, and
// gamma (mean - x_i) + b(x_i) coordinate-wise in Bounded mode.
template <typename Scalar>
typename BasicGeneration<Scalar>::Positions drift_vector(const BasicGeneration<Scalar>& g,
                                                         const ModelParams& params) {
  using Positions = typename BasicGeneration<Scalar>::Positions;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = g.positions.rowwise().mean();
  const auto gamma = static_cast<Scalar>(params.gamma);
  Positions interaction = -gamma * g.positions;
  interaction.colwise() += gamma * mean;
  if (params.bounded) {
    const BoundedDrift& f = *params.bounded;
    return interaction +
           g.positions.unaryExpr([&f](Scalar x) { return static_cast<Scalar>(f(static_cast<double>(x))); });
  }
  return interaction - static_cast<Scalar>(params.b) * g.positions;
}

// One Euler-Maruyama step of size h. The noise of substep k of generation m
// is drawn from replicate_stream.generation(m).substep(k), normal index
// particle * d + coordinate.
template <typename Scalar>
BasicGeneration<Scalar> euler_step(const BasicGeneration<Scalar>& g, const StepperConfig& cfg,
                                   const ModelParams& params, const RngStream& replicate_stream) {
  const double h = cfg.h;
  const double k_real = (g.t - g.m) / h;
  const auto k = static_cast<std::uint64_t>(std::llround(k_real));
  if (k_real != static_cast<double>(k) || g.t + h > g.m + 1) {
    throw StateError("Euler step from t=" + std::to_string(g.t) + " crosses the branch time " +
                     std::to_string(g.m + 1));
  }
  typename BasicGeneration<Scalar>::Positions noise(g.dim(), g.size());
  replicate_stream.generation(static_cast<std::uint64_t>(g.m)).substep(k).fill_normal(noise);

  BasicGeneration<Scalar> next;
  next.m = g.m;
  next.t = g.m + static_cast<double>(k + 1) * h;
  next.positions = g.positions + static_cast<Scalar>(h) * drift_vector(g, params) +
                   static_cast<Scalar>(std::sqrt(h)) * noise;
  return next;
}

// Exact Gaussian transition over [m, m+1] for the linear drift. Per
// coordinate the drift matrix gamma P - (gamma + b) I splits into the mean
// direction (rate b) and its orthogonal complement (rate gamma + b), so
//   x' = e^{-(gamma+b)} (x - xbar) + e^{-b} xbar
//        + sqrt(v_rel) (xi - xibar) + sqrt(v_com) xibar.
// Noise comes from replicate_stream.generation(m), index particle * d + coordinate.
template <typename Scalar>
BasicGeneration<Scalar> exact_generation_step(const BasicGeneration<Scalar>& g, const ModelParams& params,
                                              const RngStream& replicate_stream) {
  if (params.bounded) throw ConfigError("the exact stepper requires the linear drift");
  if (!g.at_start()) throw StateError("exact_generation_step() requires t == m");
  using Column = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const double rate_rel = params.gamma + params.b;
  const auto decay_rel = static_cast<Scalar>(std::exp(-rate_rel));
  const auto decay_com = static_cast<Scalar>(std::exp(-params.b));
  const auto sd_rel = static_cast<Scalar>(std::sqrt(relaxation_variance(rate_rel)));
  const auto sd_com = static_cast<Scalar>(std::sqrt(relaxation_variance(params.b)));

  typename BasicGeneration<Scalar>::Positions noise(g.dim(), g.size());
  replicate_stream.generation(static_cast<std::uint64_t>(g.m)).fill_normal(noise);

  const Column mean = g.positions.rowwise().mean();
  const Column noise_mean = noise.rowwise().mean();

  BasicGeneration<Scalar> next;
  next.m = g.m;
  next.t = g.m + 1.0;
  next.positions = (decay_rel * g.positions + sd_rel * noise).colwise() +
                   ((decay_com - decay_rel) * mean + (sd_com - sd_rel) * noise_mean);
  return next;
}

// Drives one replicate from t = 0 through the end of generation horizon_m.
// observer(const BasicGeneration<Scalar>&) is called for every snapshot.
template <typename Scalar = double, typename Observer>
void simulate(const ModelParams& params, const StepperConfig& cfg, const RngStream& replicate_stream,
              Observer&& observer, const SnapshotPolicy& policy = {}) {
  params.validate();
  cfg.validate();
  check_memory_budget(params);
  if (cfg.mode == StepperConfig::Mode::ExactGeneration && params.bounded) {
    throw ConfigError("bounded drift requires --mode euler");
  }
  if (policy.intra_every > 0 && cfg.mode != StepperConfig::Mode::Euler) {
    throw ConfigError("intra-interval snapshots require the Euler stepper");
  }

  BasicGeneration<Scalar> g = new_system<Scalar>(params);
  for (int m = 0;; ++m) {
    observer(static_cast<const BasicGeneration<Scalar>&>(g));
    if (cfg.mode == StepperConfig::Mode::ExactGeneration) {
      g = exact_generation_step(g, params, replicate_stream);
    } else {
      const int steps = cfg.steps_per_unit();
      for (int k = 1; k <= steps; ++k) {
        g = euler_step(g, cfg, params, replicate_stream);
        if (policy.intra_every > 0 && k < steps && k % policy.intra_every == 0) {
          observer(static_cast<const BasicGeneration<Scalar>&>(g));
        }
      }
      g.t = m + 1.0;
    }
    if (m == params.horizon_m) {
      observer(static_cast<const BasicGeneration<Scalar>&>(g));
      return;
    }
    g = branch(g);
  }
}

template <typename Scalar = double>
std::vector<BasicGeneration<Scalar>> run(const ModelParams& params, const StepperConfig& cfg,
                                         const RngStream& replicate_stream, const SnapshotPolicy& policy = {}) {
  std::vector<BasicGeneration<Scalar>> trajectory;
  simulate<Scalar>(
      params, cfg, replicate_stream, [&](const BasicGeneration<Scalar>& g) { trajectory.push_back(g); }, policy);
  return trajectory;
}

}  // namespace branchou
