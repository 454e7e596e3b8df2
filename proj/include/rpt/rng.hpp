#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "rpt/types.hpp"

namespace rpt::num {

// Counter-based deterministic RNG with labeled sub-streams.
//
// A stream is identified by a 64-bit key derived from (root seed, label
// path). Identical paths reproduce identical draw sequences on every
// platform; distinct paths give statistically independent streams. Drawing
// from a stream never affects siblings, so rollouts labeled by
// (context, rollout) can run serially or in parallel with identical results.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t seed, std::initializer_list<std::string_view> labels);

  RngStream child(std::string_view label) const;
  RngStream child(std::uint64_t index) const;

  // Stream identity; usable as a derived root seed for sibling namespaces.
  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // N(0, 1), Box-Muller
  int uniform_int(int lo, int hi);       // inclusive, unbiased

  Vector normal_vector(Eigen::Index d);
  Vector sphere_vector(Eigen::Index d);  // uniform on the unit sphere

 private:
  explicit RngStream(std::uint64_t key, int /*tag*/) : key_(key) {}

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace rpt::num
