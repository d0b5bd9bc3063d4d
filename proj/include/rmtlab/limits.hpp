#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "rmtlab/model.hpp"
#include "rmtlab/pairings.hpp"

namespace rmtlab {

enum class IntegMethod { QMC, GridRiemann, ExactSum };

struct IntegOptions {
  IntegMethod method = IntegMethod::QMC;
  std::size_t samples = 1'000'000;  // QMC points per scrambling replicate
  int qmc_replicates = 16;
  std::size_t grid_res = 200;  // per axis; grid path needs k <= 2
  std::uint64_t seed = 20240901ULL;
  double tail_tol = 1e-10;  // absolute target for the deterministic sums
  long long max_truncation = 1LL << 22;
};

struct PartitionContribution {
  std::size_t partition_id = 0;
  cplx weight;       // region-averaged block-moment product
  double volume = 0; // indicator-region volume, always within [0, 1]
  double volume_se = 0;
};

struct LimitMomentResult {
  cplx value;
  double se = 0.0;  // integration standard error (0 for exact paths)
  IntegMethod method = IntegMethod::QMC;
  std::size_t samples = 0;
  int replicates = 0;
  std::vector<PartitionContribution> contributions;
  long long truncation = 0;  // ExactSum
  double tail_bound = 0.0;   // ExactSum
};

// --- pair weights -----------------------------------------------------------

// [sx+sy]^{1-d} [(rho2-rho5) + i eps'_r (rho3+rho4)]^{d}, d = delta_{eps'}.
cplx theta_plain(const CorrelationSpec& spec, int eps_r, int eps_s);

// Four-branch weight for P-segmented words. rel_equal selects the
// i_r = i_s branches, z_positive the sign; nu_product = nu_c * nu_{c'}.
cplx theta_TP(const CorrelationSpec& spec, int eps_r, int eps_s,
              int nu_product, bool rel_equal, bool z_positive);

// Symmetric-Hankel weight; same branch table with the segment-parity
// selectors implicit in the branch choice.
cplx theta_H(const CorrelationSpec& spec, int eps_r, int eps_s,
             bool rel_equal, bool z_positive);

// Generalized-model pair coefficient: which of the two input laws each
// matched position drew from (false = a / d', true = b / d'').
using GenPairWeightFn =
    std::function<cplx(const CorrelationSpec&, bool branch_r, bool branch_s,
                       int eps_r, int eps_s)>;
cplx gen_pair_coeff_default(const CorrelationSpec& spec, bool branch_r,
                            bool branch_s, int eps_r, int eps_s);

// Full printed weights at a z-point, for audits and tests. zvec holds the
// k block variables; block b pairs positions (r, s) of pi.
cplx gen_weight_T(const CorrelationSpec& spec, const std::vector<int>& eps,
                  const PairPartition& pi, std::size_t block, double z0,
                  const std::vector<double>& zvec);
cplx gen_weight_H(const CorrelationSpec& spec, const std::vector<int>& eps,
                  const PairPartition& pi, std::size_t block, double z0,
                  const std::vector<double>& zvec);

// --- limit operations -------------------------------------------------------

LimitMomentResult limit_moment_T(const MonomialWord& word,
                                 const CorrelationSpec& spec,
                                 const IntegOptions& opts = {});

LimitMomentResult limit_moment_TP(const MonomialWord& word,
                                  const CorrelationSpec& spec,
                                  const IntegOptions& opts = {});

// Letters are symmetric-Hankel atoms H = P T, carrying (copy, star).
LimitMomentResult limit_moment_Hsym(const std::vector<Letter>& atoms,
                                    const CorrelationSpec& spec,
                                    const IntegOptions& opts = {});

LimitMomentResult limit_moment_D(const MonomialWord& word,
                                 const std::map<int, SymbolSpec>& symbols,
                                 const IntegOptions& opts = {});

LimitMomentResult limit_moment_Dgen(const MonomialWord& word,
                                    const std::map<int, SymbolSpec>& symbols,
                                    const IntegOptions& opts = {});

LimitMomentResult limit_moment_Tgen(const MonomialWord& word,
                                    const CorrelationSpec& spec,
                                    const IntegOptions& opts = {},
                                    const GenPairWeightFn& weight = {});

// Letters are Hankel atoms H = P Tg.
LimitMomentResult limit_moment_Hgen(const std::vector<Letter>& atoms,
                                    const CorrelationSpec& spec,
                                    const IntegOptions& opts = {},
                                    const GenPairWeightFn& weight = {});

LimitMomentResult limit_moment_mixed(
    const MonomialWord& word, const CorrelationSpec* spec,
    const std::map<int, SymbolSpec>& det_symbols,
    const std::map<int, SymbolSpec>& det_gen_symbols,
    const IntegOptions& opts = {}, const GenPairWeightFn& weight = {});

// Routes by alphabet: pure-T, T+P, deterministic, generalized or mixed.
LimitMomentResult limit_moment_auto(
    const MonomialWord& word, const CorrelationSpec* spec,
    const std::map<int, SymbolSpec>& det_symbols,
    const std::map<int, SymbolSpec>& det_gen_symbols,
    const IntegOptions& opts = {}, const GenPairWeightFn& weight = {});

}  // namespace rmtlab
