#pragma once

#include <cmath>
#include <cstdint>

namespace slimshap {

// Deterministic, platform-independent generator (xoshiro256++ seeded through
// splitmix64). Every stochastic step in the library draws from one of these,
// never from std:: distributions, so results are reproducible across runs,
// platforms and thread counts. Child streams come from derive(), which mixes
// tag values into the parent seed; two distinct tags give unrelated streams.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t x = seed;
    for (auto& s : s_) s = splitmix(x);
    // avoid the all-zero state xoshiro cannot leave
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ull;
  }

  // Independent stream tagged by up to three integers (tree index, node id, ...).
  Rng derive(uint64_t a, uint64_t b = 0, uint64_t c = 0) const {
    uint64_t h = seed_;
    h = mix(h, 0x8bb84b93962eacc9ull ^ a);
    h = mix(h, 0x2f63a0d4d3b7e9b5ull ^ b);
    h = mix(h, 0xd1342543de82ef95ull ^ c);
    return Rng(h);
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n), n >= 1; rejection keeps it unbiased
  uint64_t below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // standard normal via Box-Muller; caches the spare draw
  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  uint64_t seed() const { return seed_; }

 private:
  static uint64_t splitmix(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  static uint64_t mix(uint64_t h, uint64_t v) {
    uint64_t x = h ^ v;
    return splitmix(x);
  }
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace slimshap
