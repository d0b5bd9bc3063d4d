#pragma once

#include <complex>
#include <vector>

namespace rmtlab::fft {

using cplx = std::complex<double>;

// Smallest power of two >= m.
std::size_t next_pow2(std::size_t m);

// In-place radix-2 transform; size must be a power of two.
// inverse=true applies the 1/N normalization.
void transform(std::vector<cplx>& a, bool inverse);

// c[k] = sum_j a[j] b[k-j mod N], N = a.size() = b.size() (power of two).
std::vector<cplx> cyclic_convolve(std::vector<cplx> a, std::vector<cplx> b);

}  // namespace rmtlab::fft
