#pragma once

#include <string>

#include <Eigen/Dense>

#include "branchou/errors.hpp"
#include "branchou/lineage.hpp"
#include "branchou/params.hpp"

namespace branchou {

// The population alive on [m, m+1), observed at time t. Column i-1 of
// `positions` is particle i; rows are coordinates.
template <typename Scalar>
struct BasicGeneration {
  using Positions = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int m = 0;
  double t = 0.0;
  Positions positions;

  Eigen::Index dim() const { return positions.rows(); }
  Eigen::Index size() const { return positions.cols(); }
  bool at_start() const { return t == static_cast<double>(m); }
  bool at_end() const { return t == static_cast<double>(m + 1); }

  void validate() const {
    if (m < 0 || m > kMaxGeneration) throw StateError("generation index out of range");
    if (static_cast<Label>(size()) != population(m)) {
      throw StateError("generation " + std::to_string(m) + " must hold 2^m particles, got " +
                       std::to_string(size()));
    }
    if (t < m || t > m + 1) throw StateError("time outside [m, m+1]");
    if (!positions.allFinite()) throw StateError("non-finite particle coordinate");
  }
};

using Generation = BasicGeneration<double>;

// One particle at `params.start` (origin by default) at time 0.
template <typename Scalar = double>
BasicGeneration<Scalar> new_system(const ModelParams& params) {
  params.validate();
  BasicGeneration<Scalar> g;
  g.positions = BasicGeneration<Scalar>::Positions::Zero(params.dim, 1);
  if (params.start.size() > 0) g.positions.col(0) = params.start.template cast<Scalar>();
  return g;
}

// Dyadic branching at the end of the interval: particle i leaves children
// 2i-1 and 2i at its final position.
template <typename Scalar>
BasicGeneration<Scalar> branch(const BasicGeneration<Scalar>& g) {
  if (!g.at_end()) throw StateError("branch() requires t == m + 1");
  if (g.m + 1 > kMaxGeneration) throw StateError("generation index overflow");
  BasicGeneration<Scalar> next;
  next.m = g.m + 1;
  next.t = g.t;
  next.positions.resize(g.dim(), 2 * g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    next.positions.col(2 * i) = g.positions.col(i);
    next.positions.col(2 * i + 1) = g.positions.col(i);
  }
  return next;
}

}  // namespace branchou
