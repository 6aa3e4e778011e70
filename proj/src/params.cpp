#include "branchou/params.hpp"

#include <cmath>
#include <string>

#include "branchou/errors.hpp"
#include "branchou/lineage.hpp"

namespace branchou {

double BoundedDrift::operator()(double x) const {
  if (function_id == "tanh") return center + amplitude * std::tanh(x);
  if (function_id == "constant") return center;
  throw ConfigError("unknown bounded drift function '" + function_id + "'");
}

std::pair<double, double> BoundedDrift::range() const {
  if (function_id == "tanh") return {center - std::abs(amplitude), center + std::abs(amplitude)};
  if (function_id == "constant") return {center, center};
  throw ConfigError("unknown bounded drift function '" + function_id + "'");
}

void ModelParams::validate() const {
  if (dim < 1) throw ConfigError("dimension must be >= 1");
  if (horizon_m < 0 || horizon_m > kMaxGeneration) throw ConfigError("horizon_m must lie in [0, 62]");
  if (!std::isfinite(b) || !std::isfinite(gamma)) throw ConfigError("b and gamma must be finite");
  if (start.size() != 0 && start.size() != dim) {
    throw ConfigError("start point has " + std::to_string(start.size()) + " coordinates, expected " +
                      std::to_string(dim));
  }
  if (start.size() != 0 && !start.allFinite()) throw ConfigError("start point must be finite");
  if (bounded) {
    const BoundedDrift& f = *bounded;
    if (!(0.0 < f.lower && f.lower < f.upper)) throw ConfigError("bounded drift needs 0 < lower < upper");
    const auto [inf, sup] = f.range();
    // tanh never attains +-1, so its closed range may touch the bounds.
    const bool open_range = f.function_id == "tanh" && f.amplitude != 0.0;
    const bool inside = open_range ? (f.lower <= inf && sup <= f.upper) : (f.lower < inf && sup < f.upper);
    if (!inside) throw ConfigError("bounded drift function must map into (lower, upper)");
  }
}

}  // namespace branchou
