#include "rmtlab/fft.hpp"

#include <cmath>
#include <map>

namespace rmtlab::fft {

namespace {

struct Plan {
  std::vector<std::size_t> bitrev;
  std::vector<cplx> twiddle;  // twiddle[half + k] = exp(-i pi k / half)
};

const Plan& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, Plan> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Plan p;
  p.bitrev.resize(n);
  std::size_t log2n = 0;
  while ((std::size_t{1} << log2n) < n) ++log2n;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < log2n; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
    p.bitrev[i] = r;
  }
  p.twiddle.resize(n);
  for (std::size_t half = 1; half < n; half <<= 1) {
    for (std::size_t k = 0; k < half; ++k) {
      double ang = -M_PI * double(k) / double(half);
      p.twiddle[half + k] = cplx(std::cos(ang), std::sin(ang));
    }
  }
  return cache.emplace(n, std::move(p)).first->second;
}

}  // namespace

std::size_t next_pow2(std::size_t m) {
  std::size_t n = 1;
  while (n < m) n <<= 1;
  return n;
}

void transform(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  const Plan& p = plan_for(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = p.bitrev[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t half = 1; half < n; half <<= 1) {
    for (std::size_t start = 0; start < n; start += 2 * half) {
      for (std::size_t k = 0; k < half; ++k) {
        cplx w = p.twiddle[half + k];
        if (inverse) w = std::conj(w);
        cplx u = a[start + k];
        cplx t = w * a[start + k + half];
        a[start + k] = u + t;
        a[start + k + half] = u - t;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / double(n);
    for (auto& x : a) x *= inv;
  }
}

std::vector<cplx> cyclic_convolve(std::vector<cplx> a, std::vector<cplx> b) {
  transform(a, false);
  transform(b, false);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  transform(a, true);
  return a;
}

}  // namespace rmtlab::fft
