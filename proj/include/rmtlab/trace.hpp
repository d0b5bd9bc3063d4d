#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "rmtlab/ensembles.hpp"
#include "rmtlab/model.hpp"

namespace rmtlab {

enum class TraceMethod {
  Auto,
  DensePropagation,
  StructuredPropagation,
  StructuredDisplacement,  // exact shift-displacement recurrence, plain words
  IndexSumFormula,
  Hutchinson,
};

struct TraceResult {
  cplx value;
  TraceMethod method = TraceMethod::Auto;
  std::size_t n = 0;
  double se = 0.0;   // Hutchinson only
  int probes = 0;    // Hutchinson only
};

// Realized matrices for one replicate of a word, keyed by letter identity.
// P is shared and carried implicitly.
struct Realization {
  std::size_t n = 0;
  std::map<int, StructuredMatrix> rand_toe;  // copy -> T
  std::map<int, StructuredMatrix> det_toe;   // copy -> D
  std::map<int, StructuredMatrix> rand_gen;  // copy -> Tg
  std::map<int, StructuredMatrix> det_gen;   // copy -> Dg

  const StructuredMatrix& get(const Letter& l) const;
};

// Samples / realizes every copy the word mentions. Random copies draw from
// spec with one stream per (seed, replicate, copy, j); deterministic copies
// realize their symbol. Throws MixedModels when the word mixes the plain
// and generalized random families, InvalidFlavor when the spec flavor does
// not match the random letters.
Realization realize_word(const MonomialWord& word, const CorrelationSpec* spec,
                         const std::map<int, SymbolSpec>& det_symbols,
                         const std::map<int, SymbolSpec>& det_gen_symbols,
                         std::size_t n, std::uint64_t seed,
                         std::uint64_t replicate);

// Apply the word (right to left) to a vector, including the n^{-1/2}
// scaling per random letter.
std::vector<cplx> apply_word(const MonomialWord& word, const Realization& re,
                             std::vector<cplx> v);

// Exact trace of the scaled word on one realization.
TraceResult trace_word(const MonomialWord& word, const Realization& re,
                       TraceMethod method = TraceMethod::Auto);

// Stochastic trace probe for n beyond the exact-path budget.
TraceResult trace_hutchinson(const MonomialWord& word, const Realization& re,
                             int probes, std::uint64_t seed);

// --- index-sum oracles (hard-capped: n <= 16, non-P letters <= 5) ---------

// Pure Toeplitz-family words (T/D letters only, no P, no generalized).
cplx trace_formula_toeplitz(const MonomialWord& word, const Realization& re);

// Words with at least one P; plain T/D letters.
cplx trace_formula_with_P(const MonomialWord& word, const Realization& re);

// Generalized-Toeplitz words (Tg/Dg letters), optionally with P.
cplx trace_formula_generalized(const MonomialWord& word, const Realization& re);

// --- Monte Carlo estimators ------------------------------------------------

struct EmpiricalPhi {
  cplx mean;
  double se_re = 0.0;
  double se_im = 0.0;
  std::vector<cplx> samples;  // per replicate, kept when keep_samples
};

struct EmpiricalOptions {
  int replicates = 100;
  std::uint64_t seed = 1;
  bool keep_samples = false;
  TraceMethod method = TraceMethod::Auto;
  std::optional<BaseLaw> base_override;
};

EmpiricalPhi empirical_phi(const MonomialWord& word,
                           const CorrelationSpec& spec,
                           const std::map<int, SymbolSpec>& det_symbols,
                           const std::map<int, SymbolSpec>& det_gen_symbols,
                           std::size_t n, const EmpiricalOptions& opt);

// Self-adjoint word polynomial, for the spectral and concentration studies.
struct PolyTerm {
  cplx coeff;
  MonomialWord word;
};

struct WordPolynomial {
  std::vector<PolyTerm> terms;

  static WordPolynomial parse(const std::string& text);
  std::string to_string() const;
  WordPolynomial power(int k) const;
  WordPolynomial adjoint() const;
  // Formal check; stars on letters that the flavor forces self-adjoint
  // (T under hermitian / real symmetric) are canonicalized away first.
  bool is_formally_self_adjoint(Flavor flavor) const;
};

struct ConcentrationResult {
  double fourth_central = 0.0;
  double jackknife_se = 0.0;
  bool se_unreliable = false;  // too few replicates for a stable jackknife
  double mean = 0.0;
  int replicates = 0;
};

// Fourth central moment of (1/n) Tr(Q^k) across replicates.
ConcentrationResult concentration_probe(
    const WordPolynomial& q, int k, const CorrelationSpec& spec,
    const std::map<int, SymbolSpec>& det_symbols,
    const std::map<int, SymbolSpec>& det_gen_symbols, std::size_t n,
    int replicates, std::uint64_t seed);

int worker_count();  // RMTLAB_WORKERS override, else hardware concurrency

// Runs body(0..count-1) across the worker pool; callers store results in
// preassigned slots so reductions stay deterministic.
void run_replicates(int count, const std::function<void(int)>& body);

}  // namespace rmtlab
