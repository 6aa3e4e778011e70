#pragma once

#include <cstdint>
#include <vector>

namespace branchou {

// Particles are labeled 1..2^m in generation m. The children of particle i
// are 2i-1 and 2i in generation m+1; the labeling never looks at positions.
using Label = std::uint64_t;

inline constexpr int kMaxGeneration = 62;

inline Label population(int m) { return Label{1} << m; }

// Ancestor in generation g of particle i of generation m: ceil(i / 2^(m-g)).
Label ancestor(Label i, int m, int g);

// Last generation in which the ancestors of i and j coincide. Siblings
// split at m-1; particles in opposite halves of the tree split at 0.
int split_time(Label i, Label j, int m);

// count[a] = #{ j != i : split_time(i, j, m) == a }, a = 0..m-1.
// The profile is count[m-k] = 2^(k-1) for every i.
std::vector<std::uint64_t> pairs_by_split_time(Label i, int m);

// Value wrapper for a fixed generation.
class LineageIndex {
 public:
  explicit LineageIndex(int m);

  int generation() const { return m_; }
  Label size() const { return population(m_); }
  Label ancestor(Label i, int g) const { return branchou::ancestor(i, m_, g); }
  int split_time(Label i, Label j) const { return branchou::split_time(i, j, m_); }

 private:
  int m_;
};

}  // namespace branchou
