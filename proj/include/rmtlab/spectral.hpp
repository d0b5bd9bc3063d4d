#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmtlab/limits.hpp"
#include "rmtlab/trace.hpp"

namespace rmtlab {

// Dense realization of a formally self-adjoint word polynomial on one draw.
// Hermiticity of the result is asserted to 1e-10 * max|entry|.
Mat realize_polynomial(const WordPolynomial& q, const Realization& re,
                       Flavor flavor);

struct JacobiOptions {
  double tol = 1e-11;   // off-diagonal Frobenius mass target, relative
  int max_sweeps = 60;
  bool residual_check = true;  // spot-check A v = lambda v on 10 pairs
};

// Cyclic Jacobi for complex Hermitian matrices; eigenvalues ascending.
std::vector<double> eigenvalues_hermitian(const Mat& a,
                                          const JacobiOptions& opts = {});

struct EsdReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string polynomial;
  int replicates = 0;
  std::vector<std::vector<double>> eigenvalues;  // per replicate, sorted
  std::vector<double> bin_edges;                 // pooled histogram
  std::vector<std::size_t> counts;
  std::vector<double> moments;     // m_1..m_2K, replicate means
  std::vector<double> moment_se;   // per moment
  std::vector<double> limit_moments;     // from the limit calculus (0 = odd)
  std::vector<bool> gaussian_bound_ok;   // even orders: m_2k <= (2k-1)!! m2^k
};

struct EsdOptions {
  int replicates = 4;
  std::uint64_t seed = 1;
  int max_moment = 8;  // 2K
  IntegOptions integ;
  std::size_t histogram_bins = 0;  // 0: Freedman-Diaconis
};

EsdReport esd_study(const WordPolynomial& q, const CorrelationSpec& spec,
                    const std::map<int, SymbolSpec>& det_symbols,
                    const std::map<int, SymbolSpec>& det_gen_symbols,
                    std::size_t n, const EsdOptions& opts);

}  // namespace rmtlab
