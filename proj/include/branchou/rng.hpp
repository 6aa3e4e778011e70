#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Core>

namespace branchou {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based random stream. A stream is addressed by a path of ids below
// the root seed (replicate, generation, substep, ...); the k-th draw of a
// stream is a pure function of (path, k). Nothing is mutated by drawing, so
// streams can be shared freely between threads and draws can be taken in any
// order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t root_seed)
      : root_seed_(root_seed), key_(splitmix64(root_seed ^ 0x6a09e667f3bcc909ULL)) {}

  std::uint64_t root_seed() const { return root_seed_; }
  std::uint64_t key() const { return key_; }

  RngStream replicate(std::uint64_t r) const { return child(kReplicate, r); }
  RngStream generation(std::uint64_t m) const { return child(kGeneration, m); }
  RngStream substep(std::uint64_t k) const { return child(kSubstep, k); }
  // Auxiliary streams (bootstrap, synthetic samplers) keyed by a caller tag.
  RngStream purpose(std::uint64_t tag) const { return child(kPurpose, tag); }

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(key_ + (counter + 1) * kGolden);
  }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal number k of the stream (Box-Muller on uniform pairs).
  double normal(std::uint64_t k) const {
    const auto [z0, z1] = normal_pair(k / 2);
    return (k % 2 == 0) ? z0 : z1;
  }

  // Fills `out` in storage order with normals offset, offset+1, ...
  template <typename Derived>
  void fill_normal(Eigen::DenseBase<Derived>& out, std::uint64_t offset = 0) const {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = out.size();
    Scalar* data = out.derived().data();
    Eigen::Index k = 0;
    if (offset % 2 == 1 && n > 0) {
      data[k++] = static_cast<Scalar>(normal(offset));
    }
    std::uint64_t pair = (offset + static_cast<std::uint64_t>(k)) / 2;
    for (; k + 1 < n; k += 2, ++pair) {
      const auto [z0, z1] = normal_pair(pair);
      data[k] = static_cast<Scalar>(z0);
      data[k + 1] = static_cast<Scalar>(z1);
    }
    if (k < n) data[k] = static_cast<Scalar>(normal_pair(pair).first);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kReplicate = 1;
  static constexpr std::uint64_t kGeneration = 2;
  static constexpr std::uint64_t kSubstep = 3;
  static constexpr std::uint64_t kPurpose = 4;

  RngStream child(std::uint64_t tag, std::uint64_t id) const {
    RngStream s = *this;
    s.key_ = splitmix64(key_ ^ splitmix64(tag * kGolden + splitmix64(id + tag)));
    return s;
  }

  std::pair<double, double> normal_pair(std::uint64_t pair) const {
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  std::uint64_t root_seed_;
  std::uint64_t key_;
};

}  // namespace branchou
