#pragma once

#include <cstdint>
#include <vector>

#include "rmtlab/dense.hpp"
#include "rmtlab/model.hpp"

namespace rmtlab {

// Complex input sequence a_{-(n-1)} .. a_{n-1}, stored with offset n-1.
struct SymbolSeq {
  std::size_t n = 0;
  std::vector<cplx> coef;  // size 2n-1

  cplx at(long long k) const { return coef[std::size_t(k + (long long)(n) - 1)]; }
  cplx& at(long long k) { return coef[std::size_t(k + (long long)(n) - 1)]; }
};

// One draw of the paired quadruple structure: for each j >= 1 the quadruple
// (x_j, y_j, x_{-j}, y_{-j}) is an independent L*u with u iid standardized
// base variables; a_0 uses the (x_0, y_0) marginal pair.
SymbolSeq sample_pair_reflected(const CorrelationSpec& spec, std::size_t n,
                                std::uint64_t seed, std::uint64_t replicate,
                                std::uint64_t copy);

// Generalized model: independent (a_j, b_j) for every j in -(n-1)..n-1.
struct GenSymbolSeq {
  SymbolSeq a;
  SymbolSeq b;
};
GenSymbolSeq sample_generalized(const CorrelationSpec& spec, std::size_t n,
                                std::uint64_t seed, std::uint64_t replicate,
                                std::uint64_t copy);

enum class MatrixKind { Toeplitz, GenToeplitz, DetToeplitz, BackwardIdentity };

// A realized n x n matrix held by its defining sequences.
struct StructuredMatrix {
  MatrixKind kind = MatrixKind::BackwardIdentity;
  std::size_t n = 0;
  SymbolSeq a;  // Toeplitz / DetToeplitz diagonals, or GenToeplitz upper law
  SymbolSeq b;  // GenToeplitz only

  static StructuredMatrix toeplitz(SymbolSeq seq);
  static StructuredMatrix gen_toeplitz(SymbolSeq a, SymbolSeq b);
  static StructuredMatrix det_toeplitz(const DeterministicSymbol& sym,
                                       std::size_t n);
  static StructuredMatrix backward_identity(std::size_t n);

  cplx entry(std::size_t i, std::size_t j) const;  // 0-based
  Mat to_dense(std::size_t cap = 512) const;

  // y = M v or M* v. Toeplitz-family uses circulant embedding above the
  // direct-path cutoff; GenToeplitz falls back to the direct O(n^2) split;
  // P reverses.
  std::vector<cplx> matvec(const std::vector<cplx>& v, bool adjointed) const;

  // Direct O(n^2) reference path, kept for cross-checking.
  std::vector<cplx> matvec_direct(const std::vector<cplx>& v,
                                  bool adjointed) const;

  static std::size_t direct_cutoff();  // circulant embedding above this n
};

// Toeplitz matvec with a prepared symbol spectrum; used by the hot loops.
struct ToeplitzApplier {
  std::size_t n = 0;
  std::size_t m = 0;                    // FFT size >= 2n-1
  std::vector<cplx> spectrum;           // DFT of the embedded first column
  std::vector<cplx> spectrum_adj;       // DFT for the adjoint

  ToeplitzApplier() = default;
  explicit ToeplitzApplier(const SymbolSeq& seq);
  void apply(const std::vector<cplx>& v, std::vector<cplx>& out,
             bool adjointed) const;
};

// Generalized-Toeplitz matvec: full Toeplitz part by circulant embedding
// plus the anti-diagonal correction, which is a triangular Hankel kernel
// applied by divide-and-conquer over row blocks (O(n log^2 n)).
struct GenToeplitzApplier {
  std::size_t n = 0;
  ToeplitzApplier base;      // Toeplitz part, symbol a
  ToeplitzApplier base_adj;  // Toeplitz part of the adjoint, symbol conj(a_-k)
  SymbolSeq corr;            // b - a
  SymbolSeq corr_adj;        // conj(b_-k) - conj(a_-k)

  GenToeplitzApplier() = default;
  GenToeplitzApplier(const SymbolSeq& a, const SymbolSeq& b);
  void apply(const std::vector<cplx>& v, std::vector<cplx>& out,
             bool adjointed) const;
};

}  // namespace rmtlab
