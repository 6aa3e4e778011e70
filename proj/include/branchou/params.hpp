#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace branchou {

// Drift of the form x -> center + amplitude * f(x), applied per coordinate.
// Registered function ids: "tanh" (f = tanh) and "constant" (f = 0).
struct BoundedDrift {
  double lower = 1.0;
  double upper = 2.0;
  std::string function_id = "tanh";
  double center = 1.5;
  double amplitude = 0.4;

  double operator()(double x) const;
  // Closed range of the registered function, as (inf, sup).
  std::pair<double, double> range() const;
};

enum class DriftKind { Linear, Bounded };

struct ModelParams {
  int dim = 1;
  double b = 0.0;      // O-U parameter, positive = inward
  double gamma = 0.0;  // interaction, positive = attraction
  int horizon_m = 0;
  std::optional<BoundedDrift> bounded;  // set => Bounded drift mode
  std::uint64_t seed = 0;
  Eigen::VectorXd start;  // empty => origin

  DriftKind drift_kind() const { return bounded ? DriftKind::Bounded : DriftKind::Linear; }
  double gamma_plus_b() const { return gamma + b; }

  // Throws ConfigError.
  void validate() const;
};

}  // namespace branchou
