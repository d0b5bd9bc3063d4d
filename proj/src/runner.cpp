#include "rmtlab/runner.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rmtlab/rng.hpp"
#include "rmtlab/trace.hpp"

namespace rmtlab {

using nlohmann::json;

namespace {

std::uint64_t kv_u64(const std::map<std::string, std::string>& kv,
                     const std::string& key, std::uint64_t dflt) {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : std::stoull(it->second);
}

long long kv_ll(const std::map<std::string, std::string>& kv,
                const std::string& key, long long dflt) {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : std::stoll(it->second);
}

std::string kv_str(const std::map<std::string, std::string>& kv,
                   const std::string& key, const std::string& dflt) {
  auto it = kv.find(key);
  return it == kv.end() ? dflt : it->second;
}

}  // namespace

IntegOptions integ_options_from_kv(const std::string& options_text) {
  IntegOptions o;
  auto kv = parse_kv(options_text);
  o.samples = std::size_t(kv_ll(kv, "samples", (long long)(o.samples)));
  o.qmc_replicates = int(kv_ll(kv, "qmc_replicates", o.qmc_replicates));
  o.grid_res = std::size_t(kv_ll(kv, "grid_res", (long long)(o.grid_res)));
  o.seed = kv_u64(kv, "seed", o.seed);
  auto it = kv.find("tail_tol");
  if (it != kv.end()) o.tail_tol = std::stod(it->second);
  std::string method = kv_str(kv, "method", "qmc");
  if (method == "qmc") o.method = IntegMethod::QMC;
  else if (method == "grid") o.method = IntegMethod::GridRiemann;
  else throw Error(ErrorCode::ConfigError, "method must be qmc or grid");
  for (const auto& [key, val] : kv) {
    (void)val;
    if (key != "samples" && key != "qmc_replicates" && key != "grid_res" &&
        key != "seed" && key != "tail_tol" && key != "method")
      throw Error(ErrorCode::ConfigError, "unknown option key: " + key);
  }
  return o;
}

// --- trace-check ------------------------------------------------------------

namespace {

struct OracleCase {
  MonomialWord word;
  std::size_t n;
  std::string family;
};

MonomialWord random_word(StreamRng& rng, const std::string& family,
                         std::size_t maxlen) {
  bool gen = family.rfind("generalized", 0) == 0;
  bool with_p = family == "toeplitz_p" || family == "generalized_p";
  std::size_t len = 1 + rng.next_u64() % maxlen;
  MonomialWord w;
  for (std::size_t i = 0; i < len; ++i) {
    Letter l;
    bool det = rng.next_u64() % 4 == 0;
    l.kind = gen ? (det ? LetterKind::DetGenToeplitz
                        : LetterKind::RandGenToeplitz)
                 : (det ? LetterKind::DetToeplitz : LetterKind::RandToeplitz);
    l.copy = 1 + int(rng.next_u64() % 2);
    l.star = rng.next_u64() % 2 == 0;
    w.letters.push_back(l);
  }
  if (with_p) {
    std::size_t n_p = 1 + rng.next_u64() % 2;
    for (std::size_t q = 0; q < n_p; ++q) {
      Letter p;
      p.kind = LetterKind::P;
      std::size_t pos = rng.next_u64() % (w.letters.size() + 1);
      w.letters.insert(w.letters.begin() + long(pos), p);
    }
  }
  return w.normalized();
}

}  // namespace

TraceCheckResult run_trace_check(const std::string& config_text) {
  auto kv = parse_kv(config_text);
  std::string families_s =
      kv_str(kv, "families", "toeplitz,toeplitz_p,generalized,generalized_p");
  long long cases = kv_ll(kv, "cases", 100);
  long long nmin = kv_ll(kv, "nmin", 3);
  long long nmax = kv_ll(kv, "nmax", 12);
  long long maxlen = kv_ll(kv, "maxlen", 5);
  std::uint64_t seed = kv_u64(kv, "seed", 1);
  if (nmax > 16 || maxlen > 5 || nmin < 1 || nmin > nmax)
    throw Error(ErrorCode::ConfigError,
                "size caps exceed the index-sum budget (TooLarge): need "
                "nmax <= 16 and maxlen <= 5");

  std::vector<std::string> families;
  std::stringstream fs(families_s);
  std::string f;
  while (std::getline(fs, f, ',')) families.push_back(f);

  CorrelationSpec plain;
  plain.sigma_x2 = 0.5;
  plain.sigma_y2 = 0.5;
  plain.rho = {0.1, 0.3, 0.05, -0.05, 0.1, 0.05};
  CorrelationSpec gen;
  gen.flavor = Flavor::Generalized;
  gen.sigma_x2 = 0.5;
  gen.sigma_y2 = 0.5;
  gen.rho = {0.1, 0.3, 0.05, -0.05, 0.1, 0.2};
  std::map<int, SymbolSpec> syms;
  syms[1] = SymbolSpec{DeterministicSymbol::geometric(cplx(0.4, 0.2)),
                       DeterministicSymbol::finite({{0, {0.5, 0}},
                                                    {-1, {0, 1}},
                                                    {2, {0.25, 0.25}}})};
  syms[2] = SymbolSpec{
      DeterministicSymbol::finite({{0, {1, 0}}, {1, {0.5, -0.25}}}),
      DeterministicSymbol::geometric(0.5)};

  std::ostringstream rep;
  rep << artifact_header("trace-check", seed, config_text);
  rep << "family,case,n,word,rel_dev\n";
  double max_dev = 0.0;
  bool pass = true;
  for (const auto& family : families) {
    bool gen_family = family.rfind("generalized", 0) == 0;
    for (long long c = 0; c < cases; ++c) {
      StreamRng rng(seed, std::uint64_t(c), fnv1a(family));
      MonomialWord w = random_word(rng, family, std::size_t(maxlen));
      std::size_t flat = w.size() - w.count_p();
      if (flat > std::size_t(maxlen) || flat == 0) {
        --c;  // resample degenerate draws
        continue;
      }
      std::size_t n = std::size_t(nmin + (long long)(rng.next_u64() %
                                                     std::uint64_t(nmax - nmin + 1)));
      const CorrelationSpec& spec = gen_family ? gen : plain;
      Realization re =
          realize_word(w, &spec, syms, syms, n, seed ^ 0x9e37ULL, std::uint64_t(c));
      double scale = std::pow(double(n), 0.5 * double(w.count_random()));
      cplx dense = trace_word(w, re, TraceMethod::DensePropagation).value *
                   scale;
      cplx formula;
      if (gen_family)
        formula = trace_formula_generalized(w, re);
      else if (w.count_p() > 0)
        formula = trace_formula_with_P(w, re);
      else
        formula = trace_formula_toeplitz(w, re);
      double denom = std::max(1.0, std::abs(dense));
      double dev = std::abs(dense - formula) / denom;
      max_dev = std::max(max_dev, dev);
      if (dev > 1e-9) pass = false;
      rep << family << "," << c << "," << n << "," << w.to_string() << ","
          << format_double(dev) << "\n";
    }
  }
  rep << "# max_rel_dev: " << format_double(max_dev) << "\n";
  rep << "# status: " << (pass ? "PASS" : "FAIL") << "\n";
  return {rep.str(), pass, max_dev};
}

// --- limit ------------------------------------------------------------------

std::string run_limit_json(const ParsedSpec& ps, const MonomialWord& word,
                           const IntegOptions& opts) {
  auto res = limit_moment_auto(word, &ps.spec, ps.det_symbols,
                               ps.det_gen_symbols, opts);
  json j;
  j["tool"] = std::string("rmtlab limit v") + kVersion;
  j["word"] = word.to_string();
  j["config_hash"] = fnv1a(ps.canonical);
  j["value"] = {{"re", res.value.real()}, {"im", res.value.imag()}};
  j["se"] = res.se;
  switch (res.method) {
    case IntegMethod::QMC: j["method"] = "qmc"; break;
    case IntegMethod::GridRiemann: j["method"] = "grid"; break;
    case IntegMethod::ExactSum: j["method"] = "exact_sum"; break;
  }
  j["samples"] = res.samples;
  j["replicates"] = res.replicates;
  if (res.method == IntegMethod::ExactSum) {
    j["truncation"] = res.truncation;
    j["tail_bound"] = res.tail_bound;
  }
  j["contributions"] = json::array();
  for (const auto& c : res.contributions) {
    j["contributions"].push_back({{"partition", c.partition_id},
                                  {"weight_re", c.weight.real()},
                                  {"weight_im", c.weight.imag()},
                                  {"volume", c.volume},
                                  {"volume_se", c.volume_se}});
  }
  return j.dump(2) + "\n";
}

// --- converge -----------------------------------------------------------

std::string run_converge_csv(const ParsedSpec& ps, const MonomialWord& word,
                             const ConvergeOptions& opts) {
  auto lim = limit_moment_auto(word, &ps.spec, ps.det_symbols,
                               ps.det_gen_symbols, opts.integ);
  std::ostringstream os;
  os << artifact_header("converge", opts.seed, ps.canonical);
  os << "# word: " << word.to_string() << "\n";
  os << "n,base,mean_re,mean_im,se_re,se_im,limit_re,limit_im,limit_se,gap_abs"
     << (opts.universality ? ",law_gap_abs,law_gap_band\n" : "\n");
  for (std::size_t n : opts.n_list) {
    EmpiricalOptions eo;
    eo.replicates = opts.replicates;
    eo.seed = opts.seed;
    if (!opts.universality) {
      auto r = empirical_phi(word, ps.spec, ps.det_symbols,
                             ps.det_gen_symbols, n, eo);
      os << n << "," << base_law_name(ps.spec.base) << ","
         << format_double(r.mean.real()) << "," << format_double(r.mean.imag())
         << "," << format_double(r.se_re) << "," << format_double(r.se_im)
         << "," << format_double(lim.value.real()) << ","
         << format_double(lim.value.imag()) << "," << format_double(lim.se)
         << "," << format_double(std::abs(r.mean - lim.value)) << "\n";
    } else {
      EmpiricalPhi laws[2];
      BaseLaw bases[2] = {BaseLaw::GaussianMix, BaseLaw::RademacherMix};
      for (int b = 0; b < 2; ++b) {
        eo.base_override = bases[b];
        laws[b] = empirical_phi(word, ps.spec, ps.det_symbols,
                                ps.det_gen_symbols, n, eo);
      }
      double law_gap = std::abs(laws[0].mean - laws[1].mean);
      double band = std::hypot(std::hypot(laws[0].se_re, laws[1].se_re),
                               std::hypot(laws[0].se_im, laws[1].se_im));
      for (int b = 0; b < 2; ++b) {
        os << n << "," << base_law_name(bases[b]) << ","
           << format_double(laws[b].mean.real()) << ","
           << format_double(laws[b].mean.imag()) << ","
           << format_double(laws[b].se_re) << ","
           << format_double(laws[b].se_im) << ","
           << format_double(lim.value.real()) << ","
           << format_double(lim.value.imag()) << "," << format_double(lim.se)
           << "," << format_double(std::abs(laws[b].mean - lim.value)) << ","
           << format_double(law_gap) << "," << format_double(band) << "\n";
      }
    }
  }
  return os.str();
}

std::string run_empirical_csv(const ParsedSpec& ps, const MonomialWord& word,
                              std::size_t n, int replicates,
                              std::uint64_t seed) {
  EmpiricalOptions eo;
  eo.replicates = replicates;
  eo.seed = seed;
  eo.keep_samples = true;
  auto r = empirical_phi(word, ps.spec, ps.det_symbols, ps.det_gen_symbols, n,
                         eo);
  std::ostringstream os;
  os << artifact_header("empirical", seed, ps.canonical);
  os << "seed,n,word,replicate,re,im\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    os << seed << "," << n << "," << word.to_string() << "," << i << ","
       << format_double(r.samples[i].real()) << ","
       << format_double(r.samples[i].imag()) << "\n";
  return os.str();
}

// --- esd ----------------------------------------------------------------

std::string run_esd_json(const ParsedSpec& ps, const std::string& qpoly_text,
                         std::size_t n, const EsdOptions& opts) {
  WordPolynomial q = WordPolynomial::parse(qpoly_text);
  auto rep = esd_study(q, ps.spec, ps.det_symbols, ps.det_gen_symbols, n,
                       opts);
  json j;
  j["tool"] = std::string("rmtlab esd v") + kVersion;
  j["config_hash"] = fnv1a(ps.canonical);
  j["n"] = rep.n;
  j["seed"] = rep.seed;
  j["replicates"] = rep.replicates;
  j["polynomial"] = rep.polynomial;
  j["moments"] = rep.moments;
  j["moment_se"] = rep.moment_se;
  j["limit_moments"] = rep.limit_moments;
  std::vector<int> bound_ok(rep.gaussian_bound_ok.begin(),
                            rep.gaussian_bound_ok.end());
  j["gaussian_bound_ok"] = bound_ok;
  j["histogram"] = {{"edges", rep.bin_edges}, {"counts", rep.counts}};
  return j.dump(2) + "\n";
}

std::string esd_eigenvalues_csv(const EsdReport& rep,
                                const std::string& canonical_config) {
  std::ostringstream os;
  os << artifact_header("esd", rep.seed, canonical_config);
  os << "replicate,index,eigenvalue\n";
  for (std::size_t r = 0; r < rep.eigenvalues.size(); ++r)
    for (std::size_t i = 0; i < rep.eigenvalues[r].size(); ++i)
      os << r << "," << i << "," << format_double(rep.eigenvalues[r][i])
         << "\n";
  return os.str();
}

// --- concentration --------------------------------------------------------

std::string run_concentration_csv(const ParsedSpec& ps,
                                  const std::string& qpoly_text, int power,
                                  const std::vector<std::size_t>& n_list,
                                  int replicates, std::uint64_t seed) {
  WordPolynomial q = WordPolynomial::parse(qpoly_text);
  std::ostringstream os;
  os << artifact_header("concentration", seed, ps.canonical);
  os << "n,replicates,mean,fourth_central,jackknife_se,se_unreliable,"
        "ratio_to_prev\n";
  double prev = 0.0;
  bool have_prev = false;
  for (std::size_t n : n_list) {
    auto r = concentration_probe(q, power, ps.spec, ps.det_symbols,
                                 ps.det_gen_symbols, n, replicates, seed);
    double ratio = have_prev && r.fourth_central > 0.0
                       ? prev / r.fourth_central
                       : 0.0;
    os << n << "," << r.replicates << "," << format_double(r.mean) << ","
       << format_double(r.fourth_central) << ","
       << format_double(r.jackknife_se) << "," << (r.se_unreliable ? 1 : 0)
       << "," << format_double(ratio) << "\n";
    prev = r.fourth_central;
    have_prev = true;
  }
  return os.str();
}

}  // namespace rmtlab
