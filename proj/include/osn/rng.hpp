#pragma once

#include <cmath>
#include <cstdint>

namespace osn {

// splitmix64; used only to expand seeds into xoshiro state and to derive
// substream seeds.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

// Deterministic substream derivation. Replications hash (root, rep), streams
// hash (rep_root, stream id); the double splitmix pass decorrelates nearby
// ids. Results are bitwise stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  SplitMix64 sm(root);
  const std::uint64_t a = sm.next();
  SplitMix64 sm2(a ^ (stream * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL));
  return sm2.next();
}

// Stream ids within one replication. Every algorithm sees the same data and
// init draws; probe and model-noise streams are per algorithm so adding an
// algorithm to a plan never perturbs another algorithm's trajectory.
namespace stream {
constexpr std::uint64_t kData = 0;
constexpr std::uint64_t kInit = 1;
constexpr std::uint64_t kSplit = 2;
constexpr std::uint64_t kProbeBase = 100;  // + algorithm slot
constexpr std::uint64_t kNoiseBase = 200;  // + algorithm slot
}  // namespace stream

// xoshiro256++ with Box-Muller normals. We avoid std::normal_distribution and
// friends because their outputs differ across standard libraries; this
// generator is bitwise reproducible everywhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  RngStream(std::uint64_t root, std::uint64_t stream) : RngStream(derive_seed(root, stream)) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]; keeps the log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // +1 or -1 with equal probability.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  // Uniform integer in [0, k). Fixed-point multiply keeps the draw bitwise
  // deterministic across platforms.
  std::uint64_t bounded(std::uint64_t k) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * k) >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace osn
