#include "rmtlab/limits.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include "rmtlab/fft.hpp"
#include "rmtlab/rng.hpp"
#include "rmtlab/trace.hpp"

namespace rmtlab {

// --- pair weights -----------------------------------------------------------

cplx theta_plain(const CorrelationSpec& s, int eps_r, int eps_s) {
  if (eps_r != eps_s) return cplx(s.sigma_x2 + s.sigma_y2, 0.0);
  return cplx(s.rho2() - s.rho5(), double(eps_r) * (s.rho3() + s.rho4()));
}

cplx theta_TP(const CorrelationSpec& s, int eps_r, int eps_s, int nu_product,
              bool rel_equal, bool z_positive) {
  const bool eps_eq = eps_r == eps_s;
  const bool nu_eq = nu_product == 1;
  if (rel_equal) {
    // i_r = i_s: the entry meets itself
    cplx v{};
    if (!eps_eq && nu_eq) v += cplx(s.sigma_x2 + s.sigma_y2, 0.0);
    if (eps_eq && !nu_eq) {
      double rho_im = z_positive ? s.rho1() : s.rho6();
      v += cplx(s.sigma_x2 - s.sigma_y2, 2.0 * double(eps_r) * rho_im);
    }
    return v;
  }
  // i_r = -i_s: the reflected pair
  int eps_lead = z_positive ? eps_r : eps_s;
  cplx v{};
  if (!eps_eq && !nu_eq)
    v += cplx(s.rho2() + s.rho5(), double(eps_lead) * (s.rho4() - s.rho3()));
  if (eps_eq && nu_eq)
    v += cplx(s.rho2() - s.rho5(), double(eps_lead) * (s.rho4() + s.rho3()));
  return v;
}

cplx theta_H(const CorrelationSpec& s, int eps_r, int eps_s, bool rel_equal,
             bool z_positive) {
  const bool eps_eq = eps_r == eps_s;
  if (rel_equal) {
    if (!eps_eq) return cplx(s.sigma_x2 + s.sigma_y2, 0.0);
    double rho_im = z_positive ? s.rho1() : s.rho6();
    return cplx(s.sigma_x2 - s.sigma_y2, 2.0 * double(eps_r) * rho_im);
  }
  int eps_lead = z_positive ? eps_r : eps_s;
  if (!eps_eq)
    return cplx(s.rho2() + s.rho5(), double(eps_lead) * (s.rho4() - s.rho3()));
  return cplx(s.rho2() - s.rho5(), double(eps_lead) * (s.rho4() + s.rho3()));
}

cplx gen_pair_coeff_default(const CorrelationSpec& s, bool branch_r,
                            bool branch_s, int eps_r, int eps_s) {
  const bool eps_eq = eps_r == eps_s;
  if (!branch_r && !branch_s)
    return eps_eq ? cplx(0.0, 2.0 * double(eps_r) * s.rho1()) : cplx(1.0, 0.0);
  if (branch_r && branch_s)
    return eps_eq ? cplx(0.0, 2.0 * double(eps_r) * s.rho5()) : cplx(1.0, 0.0);
  int eps_lead = branch_r ? eps_s : eps_r;  // the a-side position leads
  if (eps_eq)
    return cplx(s.rho2() - s.rho6(), double(eps_lead) * (s.rho4() + s.rho3()));
  return cplx(s.rho2() + s.rho6(), double(eps_lead) * (s.rho4() - s.rho3()));
}

namespace {

bool in_tilde_A(double z, double w) {
  return w >= std::max(0.0, -z) - 1e-15 && w <= 0.5 * (1.0 - z) + 1e-15;
}
bool in_tilde_B(double z, double w) {
  return w >= 0.5 * (1.0 - z) - 1e-15 && w <= std::min(1.0 - z, 1.0) + 1e-15;
}

}  // namespace

cplx gen_weight_T(const CorrelationSpec& spec, const std::vector<int>& eps,
                  const PairPartition& pi, std::size_t block, double z0,
                  const std::vector<double>& zvec) {
  const std::size_t m = eps.size();
  auto [r, s] = pi.blocks[block];
  if (eps[r] == eps[s]) return {};
  // w_t: scaled source position of letter t (letters act right to left)
  std::vector<double> w(m);
  double acc = z0;
  for (std::size_t t = m; t-- > 0;) {
    w[t] = acc;
    acc += double(eps[t]) * zvec[pi.block_of[t]];
  }
  auto memb = [&](std::size_t t, bool bside) {
    double z = double(eps[t]) * zvec[pi.block_of[t]];
    return bside ? in_tilde_B(z, w[t]) : in_tilde_A(z, w[t]);
  };
  cplx out{};
  if (memb(r, false) && memb(s, false)) out += 1.0;  // f'_1
  if (memb(r, true) && memb(s, true)) out += 1.0;    // f'_4
  cplx cr(spec.rho2() + spec.rho6(),
          -double(eps[r]) * (spec.rho3() - spec.rho4()));
  cplx cs(spec.rho2() + spec.rho6(),
          -double(eps[s]) * (spec.rho3() - spec.rho4()));
  if (memb(r, false) && memb(s, true)) out += cr;  // f'_2
  if (memb(r, true) && memb(s, false)) out += cs;  // f'_3
  return out;
}

cplx gen_weight_H(const CorrelationSpec& spec, const std::vector<int>& eps,
                  const PairPartition& pi, std::size_t block, double z0,
                  const std::vector<double>& zvec) {
  const std::size_t m = eps.size();
  auto [r, s] = pi.blocks[block];
  int nu_r = ((r + 1) % 2 == 0) ? 1 : -1;
  int nu_s = ((s + 1) % 2 == 0) ? 1 : -1;
  if (nu_r == nu_s) return {};
  // Each Hankel atom maps a source position w to 1 - w - z; sources come
  // from walking the word right to left. The split test sits on the
  // source for a plain letter and on the landing for a starred one.
  std::vector<double> src(m), land(m);
  double w = z0;
  for (std::size_t t = m; t-- > 0;) {
    src[t] = w;
    land[t] = 1.0 - w - zvec[pi.block_of[t]];
    w = land[t];
  }
  auto memb = [&](std::size_t t, bool bside) {
    if (land[t] < -1e-15 || land[t] > 1.0 + 1e-15) return false;
    double z = zvec[pi.block_of[t]];
    double probe = eps[t] == 1 ? src[t] : land[t];
    bool a_side = 2.0 * probe + z <= 1.0 + 1e-15;
    return bside ? !a_side : a_side;
  };
  cplx out{};
  if (memb(r, false) && memb(s, false))
    out += gen_pair_coeff_default(spec, false, false, eps[r], eps[s]);
  if (memb(r, true) && memb(s, true))
    out += gen_pair_coeff_default(spec, true, true, eps[r], eps[s]);
  if (memb(r, false) && memb(s, true))
    out += gen_pair_coeff_default(spec, false, true, eps[r], eps[s]);
  if (memb(r, true) && memb(s, false))
    out += gen_pair_coeff_default(spec, true, false, eps[r], eps[s]);
  return out;
}

// --- integration harness ------------------------------------------------

namespace {

LimitMomentResult zero_result(const IntegOptions& opts) {
  LimitMomentResult r;
  r.value = 0.0;
  r.method = opts.method;
  return r;
}

// Roberts' quasirandom direction for a given dimension.
std::vector<double> qmc_alpha(std::size_t dim) {
  double phi = 2.0;
  for (int it = 0; it < 64; ++it)
    phi = std::pow(1.0 + phi, 1.0 / (double(dim) + 1.0));
  std::vector<double> a(dim);
  double g = 1.0;
  for (std::size_t j = 0; j < dim; ++j) {
    g /= phi;
    a[j] = g;
  }
  return a;
}

// eval(z, pairing) -> (weighted value, in-region); z[0] in [0,1], the rest
// in [-1,1].
using PairingEval =
    std::function<std::pair<cplx, bool>(const double*, std::size_t)>;

LimitMomentResult integrate_pairings(std::size_t k, std::size_t n_pairings,
                                     const IntegOptions& opts,
                                     const PairingEval& eval) {
  const std::size_t dim = k + 1;
  const double measure = std::pow(2.0, double(k));
  LimitMomentResult res;
  res.method = opts.method;
  if (n_pairings == 0) return res;

  if (opts.method == IntegMethod::GridRiemann) {
    if (k > 2)
      throw Error(ErrorCode::TooLarge,
                  "grid integration supports at most two block variables");
    const std::size_t ra = opts.grid_res;
    std::vector<cplx> wsum(n_pairings, cplx{});
    std::vector<double> vsum(n_pairings, 0.0);
    std::size_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) total *= ra;
    std::vector<double> z(dim);
    for (std::size_t it = 0; it < total; ++it) {
      std::size_t rem = it;
      for (std::size_t d = 0; d < dim; ++d) {
        std::size_t q = rem % ra;
        rem /= ra;
        double u = (double(q) + 0.5) / double(ra);
        z[d] = d == 0 ? u : 2.0 * u - 1.0;
      }
      for (std::size_t p = 0; p < n_pairings; ++p) {
        auto [w, in] = eval(z.data(), p);
        wsum[p] += w;
        if (in) vsum[p] += 1.0;
      }
    }
    for (std::size_t p = 0; p < n_pairings; ++p) {
      PartitionContribution c;
      c.partition_id = p;
      c.volume = std::min(1.0, vsum[p] / double(total) * measure);
      cplx joint = wsum[p] / double(total) * measure;
      c.weight = c.volume > 0 ? joint / c.volume : cplx{};
      res.contributions.push_back(c);
      res.value += joint;
    }
    res.samples = total;
    res.replicates = 1;
    return res;
  }

  const int R = std::max(2, opts.qmc_replicates);
  const std::size_t pts = std::max<std::size_t>(1, opts.samples);
  auto alpha = qmc_alpha(dim);

  std::vector<std::vector<cplx>> wrep(R, std::vector<cplx>(n_pairings));
  std::vector<std::vector<double>> vrep(R,
                                        std::vector<double>(n_pairings, 0.0));
  run_replicates(R, [&](int rep) {
    StreamRng rng(opts.seed, std::uint64_t(rep), 0x51ULL);
    std::vector<double> shift(dim), z(dim);
    for (auto& sh : shift) sh = rng.next_uniform();
    auto& wacc = wrep[rep];
    auto& vacc = vrep[rep];
    for (std::size_t mm = 0; mm < pts; ++mm) {
      for (std::size_t d = 0; d < dim; ++d) {
        double x = shift[d] + double(mm) * alpha[d];
        x -= std::floor(x);
        z[d] = d == 0 ? x : 2.0 * x - 1.0;
      }
      for (std::size_t p = 0; p < n_pairings; ++p) {
        auto [w, in] = eval(z.data(), p);
        wacc[p] += w;
        if (in) vacc[p] += 1.0;
      }
    }
    for (std::size_t p = 0; p < n_pairings; ++p) {
      wacc[p] *= measure / double(pts);
      vacc[p] *= measure / double(pts);
    }
  });

  std::vector<cplx> totals(R, cplx{});
  for (int rep = 0; rep < R; ++rep)
    for (std::size_t p = 0; p < n_pairings; ++p) totals[rep] += wrep[rep][p];
  cplx mean_total = 0.0;
  for (auto t : totals) mean_total += t;
  mean_total /= double(R);
  double var = 0.0;
  for (auto t : totals) var += std::norm(t - mean_total);
  res.value = mean_total;
  res.se = std::sqrt(var / double(R - 1) / double(R));
  res.samples = pts;
  res.replicates = R;

  for (std::size_t p = 0; p < n_pairings; ++p) {
    PartitionContribution c;
    c.partition_id = p;
    cplx wj = 0.0;
    double vm = 0.0;
    for (int rep = 0; rep < R; ++rep) {
      wj += wrep[rep][p];
      vm += vrep[rep][p];
    }
    wj /= double(R);
    vm /= double(R);
    double vv = 0.0;
    for (int rep = 0; rep < R; ++rep)
      vv += (vrep[rep][p] - vm) * (vrep[rep][p] - vm);
    c.volume = std::min(1.0, vm);
    c.volume_se = std::sqrt(vv / double(R - 1) / double(R));
    c.weight = c.volume > 1e-12 ? wj / c.volume : cplx{};
    res.contributions.push_back(c);
  }
  return res;
}

// |value| <= (2k-1)!! * max-block-weight^k * extra, up to integration noise
void assert_crude_bound(const LimitMomentResult& r, std::size_t k,
                        double max_block_weight, double extra) {
  double bound =
      double_factorial_odd(k) * std::pow(max_block_weight, double(k)) * extra;
  if (std::abs(r.value) > bound * (1.0 + 1e-6) + 10.0 * r.se + 1e-9)
    throw Error(ErrorCode::ShapeMismatch,
                "limit value escaped its crude pairing bound");
}

double max_theta_magnitude(const CorrelationSpec& s) {
  double m = 0.0;
  for (int er : {1, -1})
    for (int es : {1, -1})
      for (int nu : {1, -1})
        for (bool rel : {true, false})
          for (bool pos : {true, false})
            m = std::max(m, std::abs(theta_TP(s, er, es, nu, rel, pos)));
  return m;
}

double max_gen_magnitude(const CorrelationSpec& s, const GenPairWeightFn& fn) {
  double m = 0.0;
  for (int er : {1, -1})
    for (int es : {1, -1})
      for (bool br : {false, true})
        for (bool bs : {false, true})
          m = std::max(m, std::abs(fn(s, br, bs, er, es)));
  return m;
}

std::vector<int> eps_vector(const std::vector<Letter>& ls) {
  std::vector<int> eps;
  eps.reserve(ls.size());
  for (const auto& l : ls) eps.push_back(l.eps_prime());
  return eps;
}

bool copies_match(const PairPartition& pi, const std::vector<Letter>& ls) {
  for (const auto& [r, s] : pi.blocks)
    if (ls[r].copy != ls[s].copy) return false;
  return true;
}

}  // namespace

// --- pure Toeplitz ----------------------------------------------------------

LimitMomentResult limit_moment_T(const MonomialWord& word,
                                 const CorrelationSpec& spec,
                                 const IntegOptions& opts) {
  for (const auto& l : word.letters)
    if (l.kind != LetterKind::RandToeplitz)
      throw Error(ErrorCode::InvalidFlavor,
                  "limit_moment_T expects a P-free pure random Toeplitz word");
  validate_spec(spec);
  const std::size_t m = word.size();
  if (m % 2 == 1) return zero_result(opts);
  const std::size_t k = m / 2;
  if (k == 0) {
    auto r = zero_result(opts);
    r.value = 1.0;
    return r;
  }

  auto eps = eps_vector(word.letters);
  struct Active {
    PairPartition pi;
    SignMaps maps;
    cplx theta;
  };
  std::vector<Active> act;
  for (auto& pi : enumerate_pairings(m)) {
    if (!copies_match(pi, word.letters)) continue;
    Active a{pi, sign_maps(pi, eps, {}), cplx(1.0, 0.0)};
    for (const auto& [r, s] : pi.blocks)
      a.theta *= theta_plain(spec, eps[r], eps[s]);
    act.push_back(std::move(a));
  }

  auto eval = [&](const double* z, std::size_t p) -> std::pair<cplx, bool> {
    const Active& a = act[p];
    double acc = 0.0;
    for (std::size_t t = a.maps.eps_pi.size(); t-- > 0;) {
      acc += double(a.maps.eps_pi[t]) * z[1 + a.pi.block_of[t]];
      double arg = z[0] + acc;
      if (arg < 0.0 || arg > 1.0) return {cplx{}, false};
    }
    return {a.theta, true};
  };
  auto res = integrate_pairings(k, act.size(), opts, eval);
  assert_crude_bound(res, k, std::max(1e-12, max_theta_magnitude(spec)), 1.0);
  return res;
}

// --- P-segmented Toeplitz -----------------------------------------------

LimitMomentResult limit_moment_TP(const MonomialWord& word,
                                  const CorrelationSpec& spec,
                                  const IntegOptions& opts) {
  validate_spec(spec);
  SegmentedWord seg = segment_word(word.normalized());
  for (const auto& l : seg.flat)
    if (l.kind != LetterKind::RandToeplitz)
      throw Error(ErrorCode::InvalidFlavor,
                  "limit_moment_TP expects P and random Toeplitz letters");
  const std::size_t p = seg.p;
  const std::size_t m = seg.flat.size();
  if (p % 2 == 1 || m % 2 == 1) return zero_result(opts);
  const std::size_t k = m / 2;
  if (k == 0) {
    auto r = zero_result(opts);
    r.value = 1.0;
    return r;
  }
  if (p + 1 >= 18 || m >= 16)
    throw Error(ErrorCode::TooLarge, "word too long for the limit evaluator");

  auto eps = eps_vector(seg.flat);
  const auto& segment_of = seg.segment_of;
  struct Active {
    PairPartition pi;
    SignMaps maps;
  };
  std::vector<Active> act;
  for (auto& pi : enumerate_pairings(m)) {
    if (!copies_match(pi, seg.flat)) continue;
    act.push_back({pi, sign_maps(pi, eps, segment_of)});
  }

  auto eval = [&](const double* z, std::size_t pidx) -> std::pair<cplx, bool> {
    const Active& a = act[pidx];
    double segsum[18] = {0};
    double d[16];
    for (std::size_t t = 0; t < m; ++t) {
      d[t] =
          double(eps[t]) * double(a.maps.eta_tp[t]) * z[1 + a.pi.block_of[t]];
      segsum[segment_of[t]] += d[t];
    }
    double tail[20] = {0};
    for (std::size_t c = p; c >= 1; --c) {
      double sign = (c % 2 == 0) ? 1.0 : -1.0;
      tail[c] = tail[c + 1] + sign * segsum[c];
    }
    double inner = 0.0;
    std::size_t cur = segment_of[m - 1];
    for (std::size_t t = m; t-- > 0;) {
      if (segment_of[t] != cur) {
        cur = segment_of[t];
        inner = 0.0;
      }
      inner += d[t];
      double sign_e = (cur % 2 == 0) ? 1.0 : -1.0;
      double arg = z[0] + sign_e * inner + tail[cur + 1];
      if (arg < 0.0 || arg > 1.0) return {cplx{}, false};
    }
    cplx w = 1.0;
    for (const auto& [r, s] : a.pi.blocks) {
      bool rel_equal = a.maps.eta_tp[s] == 1;
      bool zpos = z[1 + a.pi.block_of[r]] >= 0.0;
      int nu_prod = a.maps.nu[r] * a.maps.nu[s];
      w *= theta_TP(spec, eps[r], eps[s], nu_prod, rel_equal, zpos);
    }
    return {w, true};
  };
  auto res = integrate_pairings(k, act.size(), opts, eval);
  assert_crude_bound(res, k, std::max(1e-12, max_theta_magnitude(spec)), 1.0);
  return res;
}

// --- symmetric Hankel -----------------------------------------------------

LimitMomentResult limit_moment_Hsym(const std::vector<Letter>& atoms,
                                    const CorrelationSpec& spec,
                                    const IntegOptions& opts) {
  validate_spec(spec);
  const std::size_t m = atoms.size();
  if (m % 2 == 1) return zero_result(opts);
  const std::size_t k = m / 2;
  if (k == 0) {
    auto r = zero_result(opts);
    r.value = 1.0;
    return r;
  }
  auto eps = eps_vector(atoms);
  std::vector<std::size_t> segs(m);
  for (std::size_t t = 0; t < m; ++t) segs[t] = t + 1;  // nu_t = (-1)^t

  struct Active {
    PairPartition pi;
    SignMaps maps;
  };
  std::vector<Active> act;
  for (auto& pi : enumerate_pairings(m)) {
    if (!copies_match(pi, atoms)) continue;
    act.push_back({pi, sign_maps(pi, eps, segs)});
  }

  auto eval = [&](const double* z, std::size_t pidx) -> std::pair<cplx, bool> {
    const Active& a = act[pidx];
    double acc = 0.0;
    for (std::size_t t = m; t-- > 0;) {
      acc += double(a.maps.nu[t]) * double(a.maps.eta_h[t]) *
             z[1 + a.pi.block_of[t]];
      double arg = z[0] + acc;
      if (arg < 0.0 || arg > 1.0) return {cplx{}, false};
    }
    cplx w = 1.0;
    for (const auto& [r, s] : a.pi.blocks) {
      bool rel_equal = a.maps.eta_h[s] == 1;
      bool zpos = z[1 + a.pi.block_of[r]] >= 0.0;
      w *= theta_H(spec, eps[r], eps[s], rel_equal, zpos);
    }
    return {w, true};
  };
  auto res = integrate_pairings(k, act.size(), opts, eval);
  assert_crude_bound(res, k, std::max(1e-12, max_theta_magnitude(spec)), 1.0);
  return res;
}

// --- deterministic sums -----------------------------------------------------

namespace {

// Sign bookkeeping for a normalized word: letters apply right to left;
// each P to the left of a letter flips the sign its index carries in the
// final displacement; the P's to its right set the orientation it sees.
struct Prepass {
  int alpha = 1;
  int cshift = 0;
  std::vector<int> gamma;
  std::vector<int> orient;
  std::vector<std::size_t> letter_pos;
};

Prepass engine_prepass(const MonomialWord& word) {
  Prepass pp;
  const auto& ls = word.letters;
  int left = 0;
  std::vector<int> p_left(ls.size(), 0);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    p_left[i] = left;
    if (ls[i].kind == LetterKind::P) ++left;
  }
  const int total_p = left;
  int right = 0;
  std::vector<int> p_right(ls.size(), 0);
  for (std::size_t i = ls.size(); i-- > 0;) {
    p_right[i] = right;
    if (ls[i].kind == LetterKind::P) ++right;
  }
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (ls[i].kind == LetterKind::P) continue;
    pp.gamma.push_back(ls[i].eps_prime() * (p_left[i] % 2 == 0 ? 1 : -1));
    pp.orient.push_back(p_right[i] % 2 == 0 ? 1 : -1);
    pp.letter_pos.push_back(i);
  }
  pp.alpha = (total_p % 2 == 0) ? 1 : -1;
  pp.cshift = (total_p % 2 == 0) ? 0 : 1;
  return pp;
}

struct DetSumResult {
  cplx value;
  long long truncation = 0;
  double bound = 0.0;
};

// Exact lattice sum over |i_t| <= K subject to sum_t sigma_t i_t = 0,
// as a product of offset polynomials read at offset zero.
DetSumResult exact_det_sum(const std::vector<const DeterministicSymbol*>& syms,
                           const std::vector<bool>& stars,
                           const std::vector<int>& sigma, double tol,
                           long long max_k) {
  DetSumResult out;
  const std::size_t p = syms.size();
  if (p == 0) {
    out.value = 1.0;
    return out;
  }
  std::vector<double> totals(p);
  for (std::size_t t = 0; t < p; ++t) totals[t] = syms[t]->total_abs();
  auto bound_at = [&](long long K) {
    double b = 0.0;
    for (std::size_t t = 0; t < p; ++t) {
      double prod = 1.0;
      for (std::size_t u = 0; u < p; ++u)
        if (u != t) prod *= totals[u];
      b += syms[t]->tail_abs(K) * prod;
    }
    return b;
  };
  long long K = 0;
  while (bound_at(K) > tol) {
    K = K == 0 ? 1 : K * 2;
    if (K > max_k)
      throw Error(ErrorCode::TailBoundTooLarge,
                  "requested precision unreachable within the truncation cap");
  }
  out.truncation = K;
  out.bound = bound_at(K);

  auto coeff = [&](std::size_t t, long long offset) {
    cplx v = syms[t]->value(sigma[t] * offset);
    return stars[t] ? std::conj(v) : v;
  };

  const long long width = 2 * K + 1;
  if (width <= 513 || p <= 1) {
    std::vector<cplx> dp{cplx(1.0, 0.0)};
    long long dp_lo = 0;
    for (std::size_t t = 0; t < p; ++t) {
      std::vector<cplx> nxt(dp.size() + std::size_t(width) - 1, cplx{});
      long long nxt_lo = dp_lo - K;
      for (long long i = -K; i <= K; ++i) {
        cplx v = coeff(t, i);
        if (v == cplx{}) continue;
        for (std::size_t q = 0; q < dp.size(); ++q)
          nxt[std::size_t((long long)(q) + i + K)] += dp[q] * v;
      }
      dp.swap(nxt);
      dp_lo = nxt_lo;
    }
    long long pos = -dp_lo;
    out.value = (pos >= 0 && pos < (long long)(dp.size()))
                    ? dp[std::size_t(pos)]
                    : cplx{};
    return out;
  }
  const std::size_t msz = fft::next_pow2(std::size_t(width) * p + 1);
  std::vector<cplx> acc(msz, cplx{});
  acc[0] = 1.0;
  fft::transform(acc, false);
  std::vector<cplx> g(msz);
  for (std::size_t t = 0; t < p; ++t) {
    std::fill(g.begin(), g.end(), cplx{});
    for (long long i = -K; i <= K; ++i) {
      std::size_t slot = std::size_t((i + (long long)(msz)) % (long long)(msz));
      g[slot] = coeff(t, i);
    }
    fft::transform(g, false);
    for (std::size_t q = 0; q < msz; ++q) acc[q] *= g[q];
  }
  fft::transform(acc, true);
  out.value = acc[0];
  return out;
}

}  // namespace

LimitMomentResult limit_moment_D(const MonomialWord& word,
                                 const std::map<int, SymbolSpec>& symbols,
                                 const IntegOptions& opts) {
  MonomialWord w = word.normalized();
  for (const auto& l : w.letters)
    if (l.kind != LetterKind::P && l.kind != LetterKind::DetToeplitz)
      throw Error(ErrorCode::InvalidFlavor,
                  "limit_moment_D expects deterministic Toeplitz letters");
  if (w.count_p() % 2 == 1) return zero_result(opts);
  Prepass pp = engine_prepass(w);

  std::vector<const DeterministicSymbol*> syms;
  std::vector<bool> stars;
  std::vector<int> sigma;
  std::size_t li = 0;
  for (const auto& l : w.letters) {
    if (l.kind == LetterKind::P) continue;
    auto it = symbols.find(l.copy);
    if (it == symbols.end())
      throw Error(ErrorCode::MissingCopy,
                  "no symbol for D" + std::to_string(l.copy));
    syms.push_back(&it->second.primary);
    stars.push_back(l.star);
    sigma.push_back(pp.gamma[li++]);
  }
  auto sum =
      exact_det_sum(syms, stars, sigma, opts.tail_tol, opts.max_truncation);
  LimitMomentResult res;
  res.method = IntegMethod::ExactSum;
  res.value = sum.value;
  res.truncation = sum.truncation;
  res.tail_bound = sum.bound;
  return res;
}

LimitMomentResult limit_moment_Dgen(const MonomialWord& word,
                                    const std::map<int, SymbolSpec>& symbols,
                                    const IntegOptions& opts) {
  MonomialWord w = word.normalized();
  for (const auto& l : w.letters)
    if (l.kind != LetterKind::P && !l.is_deterministic())
      throw Error(ErrorCode::InvalidFlavor,
                  "limit_moment_Dgen expects deterministic letters");
  if (w.count_p() % 2 == 1) return zero_result(opts);
  Prepass pp = engine_prepass(w);

  // Two z0 half-patterns: below 1/2 an unreflected letter reads d', a
  // reflected one d''; above 1/2 they swap. Plain D letters have one law.
  LimitMomentResult res;
  res.method = IntegMethod::ExactSum;
  for (int half = 0; half < 2; ++half) {
    std::vector<const DeterministicSymbol*> syms;
    std::vector<bool> stars;
    std::vector<int> sigma;
    std::size_t li = 0;
    for (const auto& l : w.letters) {
      if (l.kind == LetterKind::P) continue;
      auto it = symbols.find(l.copy);
      if (it == symbols.end())
        throw Error(ErrorCode::MissingCopy,
                    "no symbol for letter copy " + std::to_string(l.copy));
      bool primary_side = true;
      if (l.kind == LetterKind::DetGenToeplitz)
        primary_side = (half == 0) == (pp.orient[li] == 1);
      syms.push_back(primary_side ? &it->second.primary
                                  : &it->second.second());
      stars.push_back(l.star);
      sigma.push_back(pp.gamma[li]);
      ++li;
    }
    auto sum =
        exact_det_sum(syms, stars, sigma, opts.tail_tol, opts.max_truncation);
    res.value += 0.5 * sum.value;
    res.truncation = std::max(res.truncation, sum.truncation);
    res.tail_bound += 0.5 * sum.bound;
  }
  return res;
}

// --- the joint evaluator ------------------------------------------------
//
// Walks the word right to left in scaled coordinates: P reflects w -> 1-w;
// a random letter shifts by eps' z and must land in [0,1]; a generalized
// letter also records which law it read (source + landing <= 1); a
// deterministic letter contributes a constrained lattice sum evaluated per
// realized branch pattern. Weight and region do not factor, so both are
// integrated jointly.

namespace {

LimitMomentResult engine_evaluate(const MonomialWord& input,
                                  const CorrelationSpec* spec,
                                  const std::map<int, SymbolSpec>& det_syms,
                                  const std::map<int, SymbolSpec>& det_gen_syms,
                                  const IntegOptions& opts,
                                  const GenPairWeightFn& weight_fn) {
  MonomialWord word = input.normalized();
  GenPairWeightFn gen_weight =
      weight_fn ? weight_fn : GenPairWeightFn(gen_pair_coeff_default);

  bool has_plain = word.has_kind(LetterKind::RandToeplitz);
  bool has_gen = word.has_kind(LetterKind::RandGenToeplitz);
  if (has_plain && has_gen)
    throw Error(ErrorCode::MixedModels,
                "word mixes plain and generalized random letters");
  if ((has_plain || has_gen) && spec == nullptr)
    throw Error(ErrorCode::MissingCopy, "random letters need a spec");
  if (spec) validate_spec(*spec);
  if (has_gen && spec->flavor != Flavor::Generalized)
    throw Error(ErrorCode::InvalidFlavor,
                "generalized letters need the generalized flavor");
  if (has_plain && spec->flavor == Flavor::Generalized)
    throw Error(ErrorCode::InvalidFlavor,
                "plain random letters need a pair-reflected family flavor");

  Prepass pp = engine_prepass(word);
  if (pp.alpha != 1 || pp.cshift != 0) return zero_result(opts);

  std::vector<std::size_t> rand_letters, det_letters;
  std::vector<Letter> rand_atoms;
  for (std::size_t li = 0; li < pp.letter_pos.size(); ++li) {
    const Letter& l = word.letters[pp.letter_pos[li]];
    if (l.is_random()) {
      rand_letters.push_back(li);
      rand_atoms.push_back(l);
    } else {
      det_letters.push_back(li);
    }
  }
  const std::size_t m = rand_atoms.size();
  if (m % 2 == 1) return zero_result(opts);
  const std::size_t k = m / 2;

  struct ActivePairing {
    PairPartition pi;
    std::vector<int> eta;
  };
  std::vector<ActivePairing> act;
  for (auto& pi : enumerate_pairings(m)) {
    if (!copies_match(pi, rand_atoms)) continue;
    ActivePairing ap;
    ap.pi = pi;
    ap.eta.assign(std::max<std::size_t>(m, 1), 1);
    bool alive = true;
    for (const auto& [r, s] : pi.blocks) {
      int gr = pp.gamma[rand_letters[r]];
      int gs = pp.gamma[rand_letters[s]];
      if (has_gen) {
        if (gr != -gs) {  // a reflected match has independent entries
          alive = false;
          break;
        }
      } else {
        ap.eta[s] = -gr * gs;
      }
    }
    if (alive) act.push_back(std::move(ap));
  }
  if (act.empty()) return zero_result(opts);

  const auto& letters = word.letters;
  std::vector<int> rand_index(letters.size(), -1),
      det_index(letters.size(), -1);
  for (std::size_t q = 0; q < rand_letters.size(); ++q)
    rand_index[pp.letter_pos[rand_letters[q]]] = int(q);
  for (std::size_t q = 0; q < det_letters.size(); ++q)
    det_index[pp.letter_pos[det_letters[q]]] = int(q);

  // branch-pattern cache for the deterministic factor (shared across
  // workers; guarded by a mutex inside)
  struct DetCache {
    std::map<std::vector<std::uint8_t>, cplx> table;
    std::mutex mtx;
  };
  auto cache = std::make_shared<DetCache>();

  auto det_factor = [&, cache](const std::vector<std::uint8_t>& pattern) {
    if (det_letters.empty()) return cplx(1.0, 0.0);
    {
      std::lock_guard<std::mutex> lock(cache->mtx);
      auto it = cache->table.find(pattern);
      if (it != cache->table.end()) return it->second;
    }
    std::vector<const DeterministicSymbol*> syms;
    std::vector<bool> stars;
    std::vector<int> sigma;
    for (std::size_t q = 0; q < det_letters.size(); ++q) {
      std::size_t li = det_letters[q];
      const Letter& l = letters[pp.letter_pos[li]];
      const auto& table =
          l.kind == LetterKind::DetToeplitz ? det_syms : det_gen_syms;
      auto sit = table.find(l.copy);
      if (sit == table.end())
        throw Error(ErrorCode::MissingCopy,
                    "no symbol for letter copy " + std::to_string(l.copy));
      bool primary = l.kind == LetterKind::DetToeplitz || pattern[q] == 0;
      syms.push_back(primary ? &sit->second.primary : &sit->second.second());
      stars.push_back(l.star);
      sigma.push_back(pp.gamma[li]);
    }
    cplx v =
        exact_det_sum(syms, stars, sigma, opts.tail_tol, opts.max_truncation)
            .value;
    std::lock_guard<std::mutex> lock(cache->mtx);
    cache->table.emplace(pattern, v);
    return v;
  };

  auto eval = [&](const double* z, std::size_t pidx) -> std::pair<cplx, bool> {
    const auto& ap = act[pidx];
    thread_local std::vector<std::uint8_t> pattern, gen_branch;
    pattern.assign(det_letters.size(), 0);
    gen_branch.assign(std::max<std::size_t>(m, 1), 0);

    double w = z[0];
    for (std::size_t pos = letters.size(); pos-- > 0;) {
      const Letter& l = letters[pos];
      if (l.kind == LetterKind::P) {
        w = 1.0 - w;
        continue;
      }
      if (l.is_random()) {
        int q = rand_index[pos];
        double zi = double(ap.eta[q]) * z[1 + ap.pi.block_of[q]];
        double landing = w + double(l.eps_prime()) * zi;
        if (landing < 0.0 || landing > 1.0) return {cplx{}, false};
        if (l.kind == LetterKind::RandGenToeplitz)
          gen_branch[q] = (w + landing <= 1.0) ? 0 : 1;
        w = landing;
      } else if (l.kind == LetterKind::DetGenToeplitz) {
        int q = det_index[pos];
        pattern[q] = (2.0 * w <= 1.0) ? 0 : 1;
      }
    }

    cplx weight = 1.0;
    for (const auto& [r, s] : ap.pi.blocks) {
      int er = rand_atoms[r].eps_prime();
      int es = rand_atoms[s].eps_prime();
      if (has_gen) {
        weight *= gen_weight(*spec, gen_branch[r] != 0, gen_branch[s] != 0, er,
                             es);
      } else {
        int gr = pp.gamma[rand_letters[r]];
        int gs = pp.gamma[rand_letters[s]];
        bool rel_equal = ap.eta[s] == 1;
        bool zpos = z[1 + ap.pi.block_of[r]] >= 0.0;
        weight *= theta_TP(*spec, er, es, gr * gs * er * es, rel_equal, zpos);
      }
    }
    weight *= det_factor(pattern);
    return {weight, true};
  };

  auto res = integrate_pairings(k, act.size(), opts, eval);
  double det_bound = 1.0;
  for (std::size_t q = 0; q < det_letters.size(); ++q) {
    const Letter& l = letters[pp.letter_pos[det_letters[q]]];
    const auto& table =
        l.kind == LetterKind::DetToeplitz ? det_syms : det_gen_syms;
    auto it = table.find(l.copy);
    if (it != table.end())
      det_bound *= std::max(it->second.primary.total_abs(),
                            it->second.second().total_abs());
  }
  double block_bound = has_gen ? max_gen_magnitude(*spec, gen_weight)
                     : spec ? max_theta_magnitude(*spec)
                            : 1.0;
  assert_crude_bound(res, k, std::max(1e-12, block_bound),
                     std::max(1.0, det_bound));
  return res;
}

}  // namespace

// --- generalized entries ------------------------------------------------

LimitMomentResult limit_moment_Tgen(const MonomialWord& word,
                                    const CorrelationSpec& spec,
                                    const IntegOptions& opts,
                                    const GenPairWeightFn& weight) {
  for (const auto& l : word.letters)
    if (l.kind != LetterKind::RandGenToeplitz)
      throw Error(ErrorCode::InvalidFlavor,
                  "limit_moment_Tgen expects a pure generalized word");
  return engine_evaluate(word, &spec, {}, {}, opts, weight);
}

LimitMomentResult limit_moment_Hgen(const std::vector<Letter>& atoms,
                                    const CorrelationSpec& spec,
                                    const IntegOptions& opts,
                                    const GenPairWeightFn& weight) {
  MonomialWord w;
  for (const auto& a : atoms) {
    Letter tg = a;
    tg.kind = LetterKind::RandGenToeplitz;
    Letter p;
    p.kind = LetterKind::P;
    if (a.star) {  // (P Tg)^* = Tg^* P
      w.letters.push_back(tg);
      w.letters.push_back(p);
    } else {
      w.letters.push_back(p);
      w.letters.push_back(tg);
    }
  }
  return engine_evaluate(w, &spec, {}, {}, opts, weight);
}

// --- mixed words ------------------------------------------------------------

LimitMomentResult limit_moment_mixed(
    const MonomialWord& input, const CorrelationSpec* spec,
    const std::map<int, SymbolSpec>& det_symbols,
    const std::map<int, SymbolSpec>& det_gen_symbols,
    const IntegOptions& opts, const GenPairWeightFn& weight) {
  MonomialWord word = input.normalized();
  if (word.has_kind(LetterKind::RandToeplitz) &&
      word.has_kind(LetterKind::RandGenToeplitz))
    throw Error(ErrorCode::MixedModels,
                "word mixes plain and generalized random letters");
  bool gen_family = word.has_kind(LetterKind::RandGenToeplitz) ||
                    word.has_kind(LetterKind::DetGenToeplitz);
  if (gen_family)
    return engine_evaluate(word, spec, det_symbols, det_gen_symbols, opts,
                           weight);

  // Plain family: positional split into the deterministic and the random
  // sub-words, both keeping the P segment structure; the limit is their
  // product when both parity gates pass.
  if (word.count_p() % 2 == 1) return zero_result(opts);
  if (word.count_random() % 2 == 1) return zero_result(opts);

  MonomialWord dsub, tsub;
  for (const auto& l : word.letters) {
    if (l.kind == LetterKind::P) {
      dsub.letters.push_back(l);
      tsub.letters.push_back(l);
    } else if (l.is_deterministic()) {
      dsub.letters.push_back(l);
    } else {
      tsub.letters.push_back(l);
    }
  }
  LimitMomentResult dres = limit_moment_D(dsub, det_symbols, opts);
  LimitMomentResult tres;
  MonomialWord tn = tsub.normalized();
  if (tn.empty()) {
    tres = zero_result(opts);
    tres.value = 1.0;
  } else if (tn.count_random() == 0) {
    tres = zero_result(opts);  // a bare P word
    tres.value = 0.0;
  } else {
    if (spec == nullptr)
      throw Error(ErrorCode::MissingCopy, "random letters need a spec");
    tres = tn.count_p() > 0 ? limit_moment_TP(tn, *spec, opts)
                            : limit_moment_T(tn, *spec, opts);
  }

  LimitMomentResult res = tres;
  res.value = dres.value * tres.value;
  res.se = std::abs(dres.value) * tres.se;
  res.truncation = dres.truncation;
  res.tail_bound = dres.tail_bound;
  for (auto& c : res.contributions) c.weight *= dres.value;
  return res;
}

// --- router -----------------------------------------------------------------

LimitMomentResult limit_moment_auto(
    const MonomialWord& input, const CorrelationSpec* spec,
    const std::map<int, SymbolSpec>& det_symbols,
    const std::map<int, SymbolSpec>& det_gen_symbols,
    const IntegOptions& opts, const GenPairWeightFn& weight) {
  MonomialWord word = input.normalized();
  if (word.empty()) {
    auto r = zero_result(opts);
    r.value = 1.0;
    return r;
  }
  bool any_rand_t = word.has_kind(LetterKind::RandToeplitz);
  bool any_rand_g = word.has_kind(LetterKind::RandGenToeplitz);
  bool any_det_t = word.has_kind(LetterKind::DetToeplitz);
  bool any_det_g = word.has_kind(LetterKind::DetGenToeplitz);
  bool any_p = word.count_p() > 0;

  if (any_rand_t && any_rand_g)
    throw Error(ErrorCode::MixedModels,
                "word mixes plain and generalized random letters");

  if (!any_rand_t && !any_rand_g) {
    if (!any_det_t && !any_det_g) {
      auto r = zero_result(opts);
      r.value = word.empty() ? 1.0 : 0.0;  // a lone P has a vanishing state
      return r;
    }
    if (any_det_g) {
      std::map<int, SymbolSpec> merged = det_gen_symbols;
      MonomialWord promoted = word;
      for (auto& l : promoted.letters) {
        if (l.kind != LetterKind::DetToeplitz) continue;
        auto it = det_symbols.find(l.copy);
        if (it == det_symbols.end())
          throw Error(ErrorCode::MissingCopy,
                      "no symbol for D" + std::to_string(l.copy));
        int key = 1000000 + l.copy;  // keep clear of the Dg copy space
        merged[key] = SymbolSpec{it->second.primary, it->second.primary};
        l.kind = LetterKind::DetGenToeplitz;
        l.copy = key;
      }
      return limit_moment_Dgen(promoted, merged, opts);
    }
    return limit_moment_D(word, det_symbols, opts);
  }

  if (spec == nullptr)
    throw Error(ErrorCode::MissingCopy, "random letters need a spec");

  if (any_rand_g || any_det_g)
    return limit_moment_mixed(word, spec, det_symbols, det_gen_symbols, opts,
                              weight);
  if (any_det_t)
    return limit_moment_mixed(word, spec, det_symbols, {}, opts, weight);
  if (any_p) return limit_moment_TP(word, *spec, opts);
  return limit_moment_T(word, *spec, opts);
}

}  // namespace rmtlab
