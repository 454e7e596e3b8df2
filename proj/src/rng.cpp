#include "rpt/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rpt::num {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix(a + kGolden * (b + 0x632BE59BD9B4E019ULL));
}

std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a 64
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix(h);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix(seed + kGolden)) {}

RngStream::RngStream(std::uint64_t seed,
                     std::initializer_list<std::string_view> labels)
    : RngStream(seed) {
  for (std::string_view l : labels) key_ = combine(key_, hash_label(l));
}

RngStream RngStream::child(std::string_view label) const {
  return RngStream(combine(key_, hash_label(label)), 0);
}

RngStream RngStream::child(std::uint64_t index) const {
  return RngStream(combine(key_, index), 0);
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

int RngStream::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
  // Lemire's multiply-shift method with rejection.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * span;
  auto low = static_cast<std::uint64_t>(m);
  if (low < span) {
    const std::uint64_t threshold = -span % span;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * span;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return lo + static_cast<int>(m >> 64);
}

Vector RngStream::normal_vector(Eigen::Index d) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
  return v;
}

Vector RngStream::sphere_vector(Eigen::Index d) {
  while (true) {
    Vector v = normal_vector(d);
    const double n = v.norm();
    if (n > 1e-300) return v / n;
  }
}

}  // namespace rpt::num
