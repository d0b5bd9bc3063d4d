#include "rmtlab/rng.hpp"

#include <cmath>

namespace rmtlab {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t replicate,
                     std::uint64_t lane) {
  // Mix the triple into one state so nearby (replicate, lane) pairs land in
  // unrelated parts of the sequence.
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= replicate * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix64(s);
  s ^= lane * 0x9e3779b97f4a7c15ULL + 0x94d049bb133111ebULL;
  std::uint64_t c = splitmix64(s);
  state_ = a ^ (b + 0x632be59bd9b4e019ULL) ^ (c * 0xff51afd7ed558ccdULL | 1ULL);
}

std::uint64_t StreamRng::next_u64() { return splitmix64(state_); }

double StreamRng::next_uniform() {
  // 53 random bits into (0,1); offset keeps log() finite.
  return (double(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double StreamRng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_uniform();
  double u2 = next_uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double t = 2.0 * M_PI * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

double StreamRng::next_rademacher() {
  return (next_u64() & 1ULL) ? 1.0 : -1.0;
}

}  // namespace rmtlab
