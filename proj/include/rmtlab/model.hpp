#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "rmtlab/errors.hpp"

namespace rmtlab {

using cplx = std::complex<double>;

enum class Flavor {
  PairReflected,
  Generalized,
  Hermitian,
  RealSymmetric,
  RealAsymmetric,
};

enum class BaseLaw { GaussianMix, RademacherMix };

const char* flavor_name(Flavor f);
const char* base_law_name(BaseLaw b);
Flavor flavor_from_string(const std::string& s);
BaseLaw base_law_from_string(const std::string& s);

// 4x4 real covariance of the entry quadruple, with a pivoted Cholesky
// factor for sampling. PairReflected layout: (x_j, y_j, x_{-j}, y_{-j});
// Generalized layout: (x_j, y_j, x'_j, y'_j).
struct Cov4 {
  std::array<std::array<double, 4>, 4> c{};
  // chol[:, 0..rank) columns of a factor L with P C P^T = L L^T; perm is P.
  std::array<std::array<double, 4>, 4> chol{};
  std::array<int, 4> perm{};
  int rank = 0;

  // x = P^T L u for u with iid standardized components.
  std::array<double, 4> sample_from(const double* u) const;
};

struct CorrelationSpec {
  double sigma_x2 = 0.5;
  double sigma_y2 = 0.5;
  std::array<double, 6> rho{};  // rho[0] = rho1, ..., rho[5] = rho6
  Flavor flavor = Flavor::PairReflected;
  BaseLaw base = BaseLaw::GaussianMix;
  bool moment_cap_check = true;

  double rho1() const { return rho[0]; }
  double rho2() const { return rho[1]; }
  double rho3() const { return rho[2]; }
  double rho4() const { return rho[3]; }
  double rho5() const { return rho[4]; }
  double rho6() const { return rho[5]; }

  bool is_generalized() const { return flavor == Flavor::Generalized; }
  std::string canonical_string() const;
};

// Builds the quadruple covariance and checks it is PSD (pivoted Cholesky,
// tolerance 1e-12) together with the flavor-forced identities. Warnings
// (e.g. a negative rho) are appended to *warnings when given.
Cov4 validate_spec(const CorrelationSpec& spec,
                   std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------

struct DeterministicSymbol {
  enum class Family { FiniteSupport, Geometric, PolyDecay };

  Family family = Family::FiniteSupport;
  std::vector<std::pair<int, cplx>> support;  // FiniteSupport
  cplx ratio = 0.5;                           // Geometric, |ratio| < 1
  double exponent = 2.0;                      // PolyDecay, > 1
  cplx scale = 1.0;

  static DeterministicSymbol finite(std::vector<std::pair<int, cplx>> s);
  static DeterministicSymbol geometric(cplx ratio, cplx scale = 1.0);
  static DeterministicSymbol poly_decay(double exponent, cplx scale = 1.0);

  cplx value(long long k) const;
  double total_abs() const;         // sum_k |d_k|
  double tail_abs(long long K) const;  // sum_{|k|>K} |d_k|
  // Smallest K with tail_abs(K) <= tol, or nullopt below max_k.
  std::optional<long long> truncation_for(double tol, long long max_k) const;
  std::vector<cplx> realize(std::size_t n) const;  // d_{-(n-1)} .. d_{n-1}
  std::string canonical_string() const;
};

// A deterministic input: one symbol, or a (d', d'') pair for the
// generalized split.
struct SymbolSpec {
  DeterministicSymbol primary;
  std::optional<DeterministicSymbol> paired;

  const DeterministicSymbol& second() const {
    return paired ? *paired : primary;
  }
};

// ---------------------------------------------------------------------------

enum class LetterKind {
  P,
  RandToeplitz,
  DetToeplitz,
  RandGenToeplitz,
  DetGenToeplitz,
};

struct Letter {
  LetterKind kind = LetterKind::P;
  int copy = 1;       // tau, ignored for P
  bool star = false;  // ignored for P

  bool is_random() const {
    return kind == LetterKind::RandToeplitz ||
           kind == LetterKind::RandGenToeplitz;
  }
  bool is_deterministic() const {
    return kind == LetterKind::DetToeplitz ||
           kind == LetterKind::DetGenToeplitz;
  }
  bool is_generalized() const {
    return kind == LetterKind::RandGenToeplitz ||
           kind == LetterKind::DetGenToeplitz;
  }
  int eps_prime() const { return star ? -1 : 1; }
  bool operator==(const Letter&) const = default;
};

struct MonomialWord {
  std::vector<Letter> letters;

  static MonomialWord parse(const std::string& text);
  std::string to_string() const;

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  std::size_t count_p() const;
  std::size_t count_random() const;
  bool has_kind(LetterKind k) const;

  MonomialWord normalized() const;  // cancels consecutive P pairs
  MonomialWord rotated(std::size_t by) const;
  MonomialWord adjoint() const;  // reverse order, flip stars
  bool operator==(const MonomialWord&) const = default;
};

// Segment structure of a word that contains at least one P: the word is
// rotated so it starts at a P, then split into the p runs between P's.
struct SegmentedWord {
  std::size_t rotation = 0;          // rotation applied to the input
  std::size_t p = 0;                 // number of P letters
  std::vector<std::vector<Letter>> segments;  // non-P runs, one per P
  std::vector<std::size_t> cumulative;        // k_1 <= ... <= k_p

  // letter index (within the concatenated non-P letters) -> segment (1-based)
  std::vector<std::size_t> segment_of;
  std::vector<Letter> flat;  // the non-P letters in order
};

SegmentedWord segment_word(const MonomialWord& word);

}  // namespace rmtlab
