#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmtlab/io.hpp"
#include "rmtlab/limits.hpp"
#include "rmtlab/spectral.hpp"

namespace rmtlab {

// The experiment drivers behind the CLI subcommands; each renders a
// deterministic text artifact (CSV or JSON) for a given seed.

struct TraceCheckResult {
  std::string report;
  bool passed = false;
  double max_rel_dev = 0.0;
};
// config keys: families (comma list of toeplitz, toeplitz_p, generalized,
// generalized_p), cases, nmin, nmax, maxlen, seed.
TraceCheckResult run_trace_check(const std::string& config_text);

// options keys: samples, qmc_replicates, method (qmc|grid), grid_res,
// tail_tol, seed.
IntegOptions integ_options_from_kv(const std::string& options_text);

std::string run_limit_json(const ParsedSpec& ps, const MonomialWord& word,
                           const IntegOptions& opts);

struct ConvergeOptions {
  std::vector<std::size_t> n_list;
  int replicates = 100;
  std::uint64_t seed = 1;
  bool universality = false;
  IntegOptions integ;
};
std::string run_converge_csv(const ParsedSpec& ps, const MonomialWord& word,
                             const ConvergeOptions& opts);

std::string run_empirical_csv(const ParsedSpec& ps, const MonomialWord& word,
                              std::size_t n, int replicates,
                              std::uint64_t seed);

std::string run_esd_json(const ParsedSpec& ps, const std::string& qpoly_text,
                         std::size_t n, const EsdOptions& opts);
std::string esd_eigenvalues_csv(const EsdReport& rep,
                                const std::string& canonical_config);

std::string run_concentration_csv(const ParsedSpec& ps,
                                  const std::string& qpoly_text, int power,
                                  const std::vector<std::size_t>& n_list,
                                  int replicates, std::uint64_t seed);

}  // namespace rmtlab
