#include "branchou/lineage.hpp"

#include <bit>
#include <string>

#include "branchou/errors.hpp"

namespace branchou {

namespace {

void check_label(Label i, int m) {
  if (m < 0 || m > kMaxGeneration) throw ArgumentError("generation out of range: " + std::to_string(m));
  if (i < 1 || i > population(m)) {
    throw ArgumentError("label " + std::to_string(i) + " outside 1.." + std::to_string(population(m)));
  }
}

}  // namespace

Label ancestor(Label i, int m, int g) {
  check_label(i, m);
  if (g < 0 || g > m) throw ArgumentError("ancestor generation must lie in [0, m]");
  return ((i - 1) >> (m - g)) + 1;
}

int split_time(Label i, Label j, int m) {
  check_label(i, m);
  check_label(j, m);
  if (i == j) throw ArgumentError("split_time needs two distinct particles");
  // Ancestors in generation g agree iff the labels agree above bit m-g.
  return m - static_cast<int>(std::bit_width((i - 1) ^ (j - 1)));
}

std::vector<std::uint64_t> pairs_by_split_time(Label i, int m) {
  check_label(i, m);
  if (m < 1) throw ArgumentError("pairs_by_split_time needs m >= 1");
  std::vector<std::uint64_t> count(static_cast<std::size_t>(m), 0);
  for (int k = 1; k <= m; ++k) count[static_cast<std::size_t>(m - k)] = population(k - 1);
  return count;
}

LineageIndex::LineageIndex(int m) : m_(m) {
  if (m < 0 || m > kMaxGeneration) throw ArgumentError("generation out of range: " + std::to_string(m));
}

}  // namespace branchou
