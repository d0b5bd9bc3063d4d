#include "rmtlab/trace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "rmtlab/rng.hpp"

namespace rmtlab {

namespace {

constexpr std::size_t kIndexSumMaxN = 16;
constexpr std::size_t kIndexSumMaxLen = 5;

double word_scale(const MonomialWord& word, std::size_t n) {
  std::size_t r = word.count_random();
  return std::pow(double(n), -0.5 * double(r));
}

}  // namespace

const StructuredMatrix& Realization::get(const Letter& l) const {
  const std::map<int, StructuredMatrix>* m = nullptr;
  switch (l.kind) {
    case LetterKind::RandToeplitz: m = &rand_toe; break;
    case LetterKind::DetToeplitz: m = &det_toe; break;
    case LetterKind::RandGenToeplitz: m = &rand_gen; break;
    case LetterKind::DetGenToeplitz: m = &det_gen; break;
    case LetterKind::P:
      throw Error(ErrorCode::MissingCopy, "P has no realization entry");
  }
  auto it = m->find(l.copy);
  if (it == m->end())
    throw Error(ErrorCode::MissingCopy,
                "no realization for copy " + std::to_string(l.copy));
  return it->second;
}

Realization realize_word(const MonomialWord& word, const CorrelationSpec* spec,
                         const std::map<int, SymbolSpec>& det_symbols,
                         const std::map<int, SymbolSpec>& det_gen_symbols,
                         std::size_t n, std::uint64_t seed,
                         std::uint64_t replicate) {
  bool has_plain_rand = word.has_kind(LetterKind::RandToeplitz);
  bool has_gen_rand = word.has_kind(LetterKind::RandGenToeplitz);
  if (has_plain_rand && has_gen_rand)
    throw Error(ErrorCode::MixedModels,
                "word mixes plain and generalized random letters");
  if ((has_plain_rand || has_gen_rand) && spec == nullptr)
    throw Error(ErrorCode::MissingCopy, "random letters need a spec");
  if (has_plain_rand && spec->flavor == Flavor::Generalized)
    throw Error(ErrorCode::InvalidFlavor,
                "plain random letters need a non-generalized flavor");
  if (has_gen_rand && spec->flavor != Flavor::Generalized)
    throw Error(ErrorCode::InvalidFlavor,
                "generalized random letters need the generalized flavor");

  Realization re;
  re.n = n;
  for (const auto& l : word.letters) {
    switch (l.kind) {
      case LetterKind::P:
        break;
      case LetterKind::RandToeplitz:
        if (!re.rand_toe.count(l.copy))
          re.rand_toe.emplace(l.copy,
                              StructuredMatrix::toeplitz(sample_pair_reflected(
                                  *spec, n, seed, replicate, l.copy)));
        break;
      case LetterKind::RandGenToeplitz:
        if (!re.rand_gen.count(l.copy)) {
          auto g = sample_generalized(*spec, n, seed, replicate, l.copy);
          re.rand_gen.emplace(l.copy, StructuredMatrix::gen_toeplitz(
                                          std::move(g.a), std::move(g.b)));
        }
        break;
      case LetterKind::DetToeplitz: {
        if (re.det_toe.count(l.copy)) break;
        auto it = det_symbols.find(l.copy);
        if (it == det_symbols.end())
          throw Error(ErrorCode::MissingCopy,
                      "no symbol for D" + std::to_string(l.copy));
        re.det_toe.emplace(
            l.copy, StructuredMatrix::det_toeplitz(it->second.primary, n));
        break;
      }
      case LetterKind::DetGenToeplitz: {
        if (re.det_gen.count(l.copy)) break;
        auto it = det_gen_symbols.find(l.copy);
        if (it == det_gen_symbols.end())
          throw Error(ErrorCode::MissingCopy,
                      "no symbol for Dg" + std::to_string(l.copy));
        SymbolSeq sa, sb;
        sa.n = sb.n = n;
        sa.coef = it->second.primary.realize(n);
        sb.coef = it->second.second().realize(n);
        re.det_gen.emplace(l.copy, StructuredMatrix::gen_toeplitz(
                                       std::move(sa), std::move(sb)));
        break;
      }
    }
  }
  return re;
}

// --- propagation -------------------------------------------------------

namespace {

struct PreparedLetter {
  const Letter* letter;
  const StructuredMatrix* mat = nullptr;  // null for P
  std::shared_ptr<ToeplitzApplier> toe;
  std::shared_ptr<GenToeplitzApplier> gen;
};

struct PreparedWord {
  std::size_t n = 0;
  std::vector<PreparedLetter> letters;
  bool use_appliers = false;

  void apply_letter(const PreparedLetter& pl, std::vector<cplx>& v,
                    std::vector<cplx>& tmp) const {
    if (pl.letter->kind == LetterKind::P) {
      std::reverse(v.begin(), v.end());
      return;
    }
    if (use_appliers && pl.toe) {
      pl.toe->apply(v, tmp, pl.letter->star);
      v.swap(tmp);
    } else if (use_appliers && pl.gen) {
      pl.gen->apply(v, tmp, pl.letter->star);
      v.swap(tmp);
    } else {
      tmp = pl.mat->matvec_direct(v, pl.letter->star);
      v.swap(tmp);
    }
  }
};

PreparedWord prepare(const MonomialWord& word, const Realization& re) {
  PreparedWord pw;
  pw.n = re.n;
  pw.use_appliers = re.n > 64;
  std::map<std::pair<int, int>, std::shared_ptr<ToeplitzApplier>> toe_cache;
  std::map<std::pair<int, int>, std::shared_ptr<GenToeplitzApplier>> gen_cache;
  for (const auto& l : word.letters) {
    PreparedLetter pl;
    pl.letter = &l;
    if (l.kind != LetterKind::P) {
      pl.mat = &re.get(l);
      if (pw.use_appliers) {
        std::pair<int, int> key{int(l.kind), l.copy};
        if (pl.mat->kind == MatrixKind::GenToeplitz) {
          auto& slot = gen_cache[key];
          if (!slot)
            slot = std::make_shared<GenToeplitzApplier>(pl.mat->a, pl.mat->b);
          pl.gen = slot;
        } else {
          auto& slot = toe_cache[key];
          if (!slot) slot = std::make_shared<ToeplitzApplier>(pl.mat->a);
          pl.toe = slot;
        }
      }
    }
    pw.letters.push_back(pl);
  }
  return pw;
}

cplx trace_propagate(const MonomialWord& word, const Realization& re) {
  const std::size_t n = re.n;
  PreparedWord pw = prepare(word, re);
  cplx acc = 0.0;
  std::vector<cplx> v(n), tmp(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(v.begin(), v.end(), cplx{});
    v[j] = 1.0;
    for (auto it = pw.letters.rbegin(); it != pw.letters.rend(); ++it)
      pw.apply_letter(*it, v, tmp);
    acc += v[j];
  }
  return acc;
}

cplx trace_dense(const MonomialWord& word, const Realization& re) {
  const std::size_t n = re.n;
  if (n > 2048)
    throw Error(ErrorCode::TooLarge, "dense trace beyond n = 2048");
  if (word.empty()) return cplx(double(n), 0.0);
  Mat acc = Mat::identity(n);
  for (const auto& l : word.letters) {
    Mat m;
    if (l.kind == LetterKind::P) {
      m = StructuredMatrix::backward_identity(n).to_dense(n);
    } else {
      m = re.get(l).to_dense(n);
      if (l.star) m = m.adjoint();
    }
    acc = acc * m;
  }
  return acc.trace();
}

// --- displacement fast path ---------------------------------------------
//
// A word of plain letters reduces, by pushing every P rightward through
// P T P = Toeplitz(reflected symbol), to F_1 ... F_L or F_1 ... F_L * P.
// For the pure product W, S W - W S has rank <= 2L with explicit rank-one
// generators, and consecutive diagonal entries satisfy
// W(j+1, j+1) = W(j, j) - (S W - W S)(j+1, j), so the trace follows from
// W e_1 plus O(L^2) structured matvecs.

struct FoldedWord {
  std::size_t n = 0;
  std::vector<SymbolSeq> symbols;
  bool trailing_p = false;
};

std::optional<FoldedWord> fold_plain(const MonomialWord& word,
                                     const Realization& re) {
  FoldedWord f;
  f.n = re.n;
  int parity = 0;
  for (const auto& l : word.letters) {
    if (l.kind == LetterKind::P) {
      parity ^= 1;
      continue;
    }
    if (l.kind != LetterKind::RandToeplitz && l.kind != LetterKind::DetToeplitz)
      return std::nullopt;
    const SymbolSeq& a = re.get(l).a;
    SymbolSeq s;
    s.n = a.n;
    s.coef.resize(a.coef.size());
    const long long nn = (long long)(a.n);
    for (long long k = -(nn - 1); k <= nn - 1; ++k) {
      bool reflect = (parity == 1) != l.star;  // net index reversal
      cplx val = a.at(reflect ? -k : k);
      s.at(k) = l.star ? std::conj(val) : val;
    }
    f.symbols.push_back(std::move(s));
  }
  f.trailing_p = parity == 1;
  return f;
}

cplx anti_trace_symbol(const SymbolSeq& s) {
  cplx acc = 0.0;
  const long long n = (long long)(s.n);
  for (long long j = 1; j <= n; ++j) acc += s.at(n + 1 - 2 * j);
  return acc;
}

std::optional<cplx> trace_displacement(const FoldedWord& f) {
  const std::size_t n = f.n;
  const std::size_t L = f.symbols.size();
  if (f.trailing_p) {
    if (L == 0) return cplx(n % 2 == 1 ? 1.0 : 0.0, 0.0);
    if (L == 1) return anti_trace_symbol(f.symbols[0]);
    return std::nullopt;  // anti-diagonal sums of longer products: propagate
  }
  if (L == 0) return cplx(double(n), 0.0);

  std::vector<ToeplitzApplier> ap;
  ap.reserve(L);
  for (const auto& s : f.symbols) ap.emplace_back(s);

  auto apply = [&](std::size_t l, const std::vector<cplx>& x) {
    std::vector<cplx> out;
    ap[l].apply(x, out, false);
    return out;
  };
  auto apply_transpose = [&](std::size_t l, std::vector<cplx> x) {
    for (auto& c : x) c = std::conj(c);
    std::vector<cplx> out;
    ap[l].apply(x, out, true);
    for (auto& c : out) c = std::conj(c);
    return out;
  };

  // W e_1 gives the first diagonal entry.
  std::vector<cplx> col(n, cplx{});
  col[0] = 1.0;
  for (std::size_t l = L; l-- > 0;) col = apply(l, col);

  // Generator pairs of S W - W S: for each factor l,
  //   (-Pre_l e_1) (Suf_l^T u_l)^T  +  (Pre_l v_l) (Suf_l^T e_n)^T,
  // u_l[j] = f_{-(j+1)} (j < n-1), v_l[i] = f_{i-n} (i >= 1).
  std::vector<std::vector<cplx>> g, h;
  for (std::size_t l = 0; l < L; ++l) {
    const SymbolSeq& s = f.symbols[l];
    std::vector<cplx> u(n, cplx{}), v(n, cplx{});
    for (std::size_t j = 0; j + 1 < n; ++j) u[j] = s.at(-((long long)(j) + 1));
    for (std::size_t i = 1; i < n; ++i) v[i] = s.at((long long)(i) - (long long)(n));

    std::vector<cplx> pe(n, cplx{});
    pe[0] = 1.0;
    std::vector<cplx> pv = v;
    for (std::size_t t = l; t-- > 0;) {
      pe = apply(t, pe);
      pv = apply(t, pv);
    }
    std::vector<cplx> su = u;
    std::vector<cplx> sn(n, cplx{});
    sn[n - 1] = 1.0;
    for (std::size_t t = l + 1; t < L; ++t) {
      su = apply_transpose(t, std::move(su));
      sn = apply_transpose(t, std::move(sn));
    }
    for (auto& c : pe) c = -c;
    g.push_back(std::move(pe));
    h.push_back(std::move(su));
    g.push_back(std::move(pv));
    h.push_back(std::move(sn));
  }

  cplx diag = col[0], acc = col[0];
  for (std::size_t j = 0; j + 1 < n; ++j) {
    cplx gsub = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) gsub += g[k][j + 1] * h[k][j];
    diag -= gsub;
    acc += diag;
  }
  return acc;
}

}  // namespace

std::vector<cplx> apply_word(const MonomialWord& word, const Realization& re,
                             std::vector<cplx> v) {
  PreparedWord pw = prepare(word, re);
  std::vector<cplx> tmp(re.n);
  for (auto it = pw.letters.rbegin(); it != pw.letters.rend(); ++it)
    pw.apply_letter(*it, v, tmp);
  const double scale = word_scale(word, re.n);
  for (auto& c : v) c *= scale;
  return v;
}

TraceResult trace_word(const MonomialWord& word, const Realization& re,
                       TraceMethod method) {
  const std::size_t n = re.n;
  const double scale = word_scale(word, n);
  TraceResult r;
  r.n = n;

  if (method == TraceMethod::Auto || method == TraceMethod::StructuredDisplacement) {
    bool gen = word.has_kind(LetterKind::RandGenToeplitz) ||
               word.has_kind(LetterKind::DetGenToeplitz);
    if (!gen) {
      auto folded = fold_plain(word, re);
      if (folded) {
        auto v = trace_displacement(*folded);
        if (v) {
          r.value = *v * scale;
          r.method = TraceMethod::StructuredDisplacement;
          return r;
        }
      }
    }
    if (method == TraceMethod::StructuredDisplacement)
      throw Error(ErrorCode::InvalidFlavor,
                  "displacement trace does not cover this word");
    method = TraceMethod::StructuredPropagation;
  }

  switch (method) {
    case TraceMethod::StructuredPropagation:
      r.value = trace_propagate(word, re) * scale;
      r.method = TraceMethod::StructuredPropagation;
      return r;
    case TraceMethod::DensePropagation:
      r.value = trace_dense(word, re) * scale;
      r.method = TraceMethod::DensePropagation;
      return r;
    default:
      throw Error(ErrorCode::ConfigError, "unsupported trace method");
  }
}

TraceResult trace_hutchinson(const MonomialWord& word, const Realization& re,
                             int probes, std::uint64_t seed) {
  const std::size_t n = re.n;
  const double scale = word_scale(word, n);
  PreparedWord pw = prepare(word, re);
  std::vector<cplx> vals;
  vals.reserve(probes);
  std::vector<cplx> v(n), u(n), tmp(n);
  for (int p = 0; p < probes; ++p) {
    StreamRng rng(seed, std::uint64_t(p), 0xabcdULL);
    for (std::size_t j = 0; j < n; ++j) u[j] = cplx(rng.next_rademacher(), 0.0);
    v = u;
    for (auto it = pw.letters.rbegin(); it != pw.letters.rend(); ++it)
      pw.apply_letter(*it, v, tmp);
    cplx z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::conj(u[j]) * v[j];
    vals.push_back(z * scale);
  }
  cplx mean = 0.0;
  for (auto z : vals) mean += z;
  mean /= double(probes);
  double var = 0.0;
  for (auto z : vals) var += std::norm(z - mean);
  TraceResult r;
  r.n = n;
  r.method = TraceMethod::Hutchinson;
  r.probes = probes;
  r.value = mean;
  r.se = probes > 1 ? std::sqrt(var / double(probes - 1) / double(probes)) : 0.0;
  return r;
}

// --- index-sum oracles ----------------------------------------------------

namespace {

void check_caps(std::size_t n, std::size_t len) {
  if (n > kIndexSumMaxN)
    throw Error(ErrorCode::TooLarge, "index-sum formula capped at n <= 16");
  if (len > kIndexSumMaxLen)
    throw Error(ErrorCode::TooLarge,
                "index-sum formula capped at 5 non-P letters");
}

const SymbolSeq& plain_symbol(const Realization& re, const Letter& l) {
  return re.get(l).a;
}

cplx letter_value(const SymbolSeq& s, long long i, bool star) {
  cplx v = s.at(i);
  return star ? std::conj(v) : v;
}

// Odometer over (len-1) free indices in [-(n-1), n-1]; the last index is
// solved from the linear constraint.
template <typename Fn>
void enumerate_constrained(std::size_t m, long long bound,
                           const std::vector<int>& sigma, long long target,
                           Fn&& per_tuple) {
  if (m == 0) {
    if (target == 0) {
      std::vector<long long> empty;
      per_tuple(empty);
    }
    return;
  }
  std::vector<long long> idx(m, -bound);
  for (;;) {
    long long partial = 0;
    for (std::size_t t = 0; t + 1 < m; ++t) partial += sigma[t] * idx[t];
    long long last = (target - partial) * sigma[m - 1];
    if (std::llabs(last) <= bound) {
      idx[m - 1] = last;
      per_tuple(idx);
    }
    std::size_t t = m - 1;  // advance the first m-1 slots
    for (;;) {
      if (t == 0) return;
      --t;
      if (++idx[t] <= bound) break;
      idx[t] = -bound;
    }
  }
}

}  // namespace

cplx trace_formula_toeplitz(const MonomialWord& word, const Realization& re) {
  const std::size_t n = re.n;
  const std::size_t k = word.size();
  check_caps(n, k);
  std::vector<const SymbolSeq*> syms;
  std::vector<int> eps;
  for (const auto& l : word.letters) {
    if (l.kind != LetterKind::RandToeplitz && l.kind != LetterKind::DetToeplitz)
      throw Error(ErrorCode::InvalidFlavor,
                  "pure-Toeplitz formula: plain T/D letters only");
    syms.push_back(&plain_symbol(re, l));
    eps.push_back(l.eps_prime());
  }
  const long long bound = (long long)(n) - 1;
  cplx total = 0.0;
  enumerate_constrained(k, bound, eps, 0, [&](const std::vector<long long>& i) {
    cplx coeff = 1.0;
    for (std::size_t t = 0; t < k; ++t)
      coeff *= letter_value(*syms[t], i[t], word.letters[t].star);
    if (coeff == cplx{}) return;
    // suffix sums give the indicator arguments
    std::vector<long long> suff(k + 1, 0);
    for (std::size_t t = k; t-- > 0;) suff[t] = suff[t + 1] + eps[t] * i[t];
    long long cnt = 0;
    for (long long j = 1; j <= (long long)(n); ++j) {
      bool ok = true;
      for (std::size_t l = 0; l < k && ok; ++l) {
        long long arg = j + suff[l];
        ok = arg >= 1 && arg <= (long long)(n);
      }
      if (ok) ++cnt;
    }
    total += coeff * double(cnt);
  });
  return total;
}

cplx trace_formula_with_P(const MonomialWord& word, const Realization& re) {
  const std::size_t n = re.n;
  SegmentedWord seg = segment_word(word);
  const std::size_t m = seg.flat.size();
  check_caps(n, m);
  const std::size_t p = seg.p;
  std::vector<const SymbolSeq*> syms;
  std::vector<int> eps, sigma;
  for (std::size_t t = 0; t < m; ++t) {
    const Letter& l = seg.flat[t];
    if (l.kind != LetterKind::RandToeplitz && l.kind != LetterKind::DetToeplitz)
      throw Error(ErrorCode::InvalidFlavor,
                  "P-mixed formula: plain T/D letters only");
    syms.push_back(&plain_symbol(re, l));
    eps.push_back(l.eps_prime());
    int c = int(seg.segment_of[t]);
    int sign = ((int(p) - c) % 2 == 0) ? 1 : -1;  // (-1)^{p-c}
    sigma.push_back(sign * eps.back());
  }
  const long long bound = (long long)(n) - 1;
  const bool p_odd = (p % 2 == 1);

  cplx total = 0.0;
  for (long long j = 1; j <= (long long)(n); ++j) {
    long long target = p_odd ? ((long long)(n) + 1 - 2 * j) : 0;
    enumerate_constrained(
        m, bound, sigma, target, [&](const std::vector<long long>& i) {
          cplx coeff = 1.0;
          for (std::size_t t = 0; t < m; ++t)
            coeff *= letter_value(*syms[t], i[t], seg.flat[t].star);
          if (coeff == cplx{}) return;
          // segment sums and their alternating tails
          std::vector<long long> ssum(p + 2, 0), tail(p + 2, 0);
          for (std::size_t t = 0; t < m; ++t)
            ssum[seg.segment_of[t]] += eps[t] * i[t];
          for (std::size_t c = p; c >= 1; --c) {
            int sign = ((int(p) - int(c)) % 2 == 0) ? 1 : -1;
            tail[c] = tail[c + 1] + sign * ssum[c];
          }
          bool ok = true;
          std::size_t t0 = 0;
          for (std::size_t e = 1; e <= p && ok; ++e) {
            int sign_e = ((int(p) - int(e)) % 2 == 0) ? 1 : -1;
            const auto& letters_e = seg.segments[e - 1];
            long long inner = 0;
            // arguments for l = k_e down to k_{e-1}+1
            std::vector<long long> inner_at(letters_e.size());
            for (std::size_t q = letters_e.size(); q-- > 0;) {
              inner += eps[t0 + q] * i[t0 + q];
              inner_at[q] = inner;
            }
            for (std::size_t q = 0; q < letters_e.size() && ok; ++q) {
              long long arg = j + sign_e * inner_at[q] + tail[e + 1];
              ok = arg >= 1 && arg <= (long long)(n);
            }
            t0 += letters_e.size();
          }
          if (ok) total += coeff;
        });
  }
  return total;
}

cplx trace_formula_generalized(const MonomialWord& word,
                               const Realization& re) {
  const std::size_t n = re.n;
  const bool has_p = word.count_p() > 0;
  MonomialWord rot = word;
  std::vector<std::size_t> segment_of;
  std::size_t p = 0;
  if (has_p) {
    SegmentedWord seg = segment_word(word);
    rot = word.rotated(seg.rotation);
    segment_of = seg.segment_of;
    p = seg.p;
  }
  std::vector<Letter> flat;
  for (const auto& l : rot.letters)
    if (l.kind != LetterKind::P) flat.push_back(l);
  const std::size_t m = flat.size();
  check_caps(n, m);
  for (const auto& l : flat)
    if (!l.is_generalized())
      throw Error(ErrorCode::InvalidFlavor,
                  "generalized formula: Tg/Dg letters only");

  std::vector<int> sigma(m);
  for (std::size_t t = 0; t < m; ++t) {
    int c = has_p ? int(segment_of[t]) : int(p);
    int sign = ((int(p) - c) % 2 == 0) ? 1 : -1;
    sigma[t] = sign * flat[t].eps_prime();
  }
  const long long bound = (long long)(n) - 1;
  const bool p_odd = (p % 2 == 1);

  cplx total = 0.0;
  for (long long j = 1; j <= (long long)(n); ++j) {
    long long target = p_odd ? ((long long)(n) + 1 - 2 * j) : 0;
    enumerate_constrained(
        m, bound, sigma, target, [&](const std::vector<long long>& i) {
          // walk the rotated word right-to-left at the actual index
          long long x = j;
          cplx coeff = 1.0;
          std::size_t t = m;
          for (auto it = rot.letters.rbegin(); it != rot.letters.rend(); ++it) {
            if (it->kind == LetterKind::P) {
              x = (long long)(n) + 1 - x;
              continue;
            }
            --t;
            long long landing = x + it->eps_prime() * i[t];
            if (landing < 1 || landing > (long long)(n)) {
              coeff = 0.0;
              break;
            }
            const StructuredMatrix& mat = re.get(*it);
            const SymbolSeq& s = (x + landing <= (long long)(n)) ? mat.a : mat.b;
            coeff *= letter_value(s, i[t], it->star);
            if (coeff == cplx{}) break;
            x = landing;
          }
          total += coeff;
        });
  }
  return total;
}

// --- Monte Carlo ------------------------------------------------------------

int worker_count() {
  if (const char* env = std::getenv("RMTLAB_WORKERS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc >= 1 ? int(hc) : 1;
}

void run_replicates(int count, const std::function<void(int)>& body) {
  int nw = std::min(worker_count(), count);
  if (nw <= 1) {
    for (int r = 0; r < count; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int r = next.fetch_add(1);
        if (r >= count) return;
        body(r);
      }
    });
  }
  for (auto& th : pool) th.join();
}

EmpiricalPhi empirical_phi(const MonomialWord& word,
                           const CorrelationSpec& spec,
                           const std::map<int, SymbolSpec>& det_symbols,
                           const std::map<int, SymbolSpec>& det_gen_symbols,
                           std::size_t n, const EmpiricalOptions& opt) {
  if (opt.replicates < 1)
    throw Error(ErrorCode::ConfigError, "need at least one replicate");
  CorrelationSpec sp = spec;
  if (opt.base_override) sp.base = *opt.base_override;

  std::vector<cplx> vals(opt.replicates);
  run_replicates(opt.replicates, [&](int r) {
    Realization re = realize_word(word, &sp, det_symbols, det_gen_symbols, n,
                                  opt.seed, std::uint64_t(r));
    vals[r] = trace_word(word, re, opt.method).value / double(n);
  });

  EmpiricalPhi out;
  cplx mean = 0.0;
  for (auto z : vals) mean += z;
  mean /= double(opt.replicates);
  out.mean = mean;
  if (opt.replicates > 1) {
    double vr = 0.0, vi = 0.0;
    for (auto z : vals) {
      vr += (z.real() - mean.real()) * (z.real() - mean.real());
      vi += (z.imag() - mean.imag()) * (z.imag() - mean.imag());
    }
    double dn = double(opt.replicates - 1) * double(opt.replicates);
    out.se_re = std::sqrt(vr / dn);
    out.se_im = std::sqrt(vi / dn);
  }
  if (opt.keep_samples) out.samples = std::move(vals);
  return out;
}

// --- word polynomials -------------------------------------------------------

WordPolynomial WordPolynomial::parse(const std::string& text) {
  WordPolynomial q;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.empty()) continue;
    PolyTerm term;
    if (tok.size() == 1) {
      term.coeff = 1.0;
      term.word = MonomialWord::parse(tok[0]);
    } else if (tok.size() == 2) {
      term.coeff = std::stod(tok[0]);
      term.word = MonomialWord::parse(tok[1]);
    } else if (tok.size() == 3) {
      term.coeff = cplx(std::stod(tok[0]), std::stod(tok[1]));
      term.word = MonomialWord::parse(tok[2]);
    } else {
      throw Error(ErrorCode::ParseError,
                  "polynomial line must be 'word', 'coeff word' or "
                  "'re im word'");
    }
    q.terms.push_back(std::move(term));
  }
  if (q.terms.empty())
    throw Error(ErrorCode::ParseError, "empty polynomial");
  return q;
}

std::string WordPolynomial::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) os << " + ";
    os << "(" << terms[i].coeff.real() << (terms[i].coeff.imag() < 0 ? "" : "+")
       << terms[i].coeff.imag() << "i)*" << terms[i].word.to_string();
  }
  return os.str();
}

WordPolynomial WordPolynomial::power(int k) const {
  WordPolynomial out;
  out.terms.push_back({cplx(1.0, 0.0), MonomialWord{}});
  for (int i = 0; i < k; ++i) {
    WordPolynomial next;
    for (const auto& acc : out.terms) {
      for (const auto& t : terms) {
        PolyTerm nt;
        nt.coeff = acc.coeff * t.coeff;
        nt.word = acc.word;
        nt.word.letters.insert(nt.word.letters.end(), t.word.letters.begin(),
                               t.word.letters.end());
        next.terms.push_back(std::move(nt));
      }
    }
    out = std::move(next);
  }
  return out;
}

WordPolynomial WordPolynomial::adjoint() const {
  WordPolynomial out;
  for (const auto& t : terms)
    out.terms.push_back({std::conj(t.coeff), t.word.adjoint()});
  return out;
}

namespace {

std::vector<std::pair<std::string, cplx>> canonical_terms(
    const WordPolynomial& q, Flavor flavor) {
  bool t_self_adjoint =
      flavor == Flavor::Hermitian || flavor == Flavor::RealSymmetric;
  std::map<std::string, cplx> acc;
  for (const auto& t : q.terms) {
    MonomialWord w = t.word.normalized();
    if (t_self_adjoint)
      for (auto& l : w.letters)
        if (l.kind == LetterKind::RandToeplitz) l.star = false;
    acc[w.to_string()] += t.coeff;
  }
  std::vector<std::pair<std::string, cplx>> out(acc.begin(), acc.end());
  return out;
}

}  // namespace

bool WordPolynomial::is_formally_self_adjoint(Flavor flavor) const {
  auto a = canonical_terms(*this, flavor);
  auto b = canonical_terms(adjoint(), flavor);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first) return false;
    if (std::abs(a[i].second - b[i].second) > 1e-12) return false;
  }
  return true;
}

ConcentrationResult concentration_probe(
    const WordPolynomial& q, int k, const CorrelationSpec& spec,
    const std::map<int, SymbolSpec>& det_symbols,
    const std::map<int, SymbolSpec>& det_gen_symbols, std::size_t n,
    int replicates, std::uint64_t seed) {
  if (!q.is_formally_self_adjoint(spec.flavor))
    throw Error(ErrorCode::NotSelfAdjoint,
                "concentration probe needs a self-adjoint polynomial");
  WordPolynomial qk = q.power(k);
  // One union word so every copy realizes once per replicate.
  MonomialWord all;
  for (const auto& t : qk.terms)
    all.letters.insert(all.letters.end(), t.word.letters.begin(),
                       t.word.letters.end());

  std::vector<double> vals(replicates);
  run_replicates(replicates, [&](int r) {
    Realization re = realize_word(all, &spec, det_symbols, det_gen_symbols, n,
                                  seed, std::uint64_t(r));
    cplx v = 0.0;
    for (const auto& t : qk.terms)
      v += t.coeff * trace_word(t.word, re).value;
    vals[r] = (v / double(n)).real();
  });

  const int R = replicates;
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= R;
  double m4 = 0.0;
  for (double v : vals) m4 += std::pow(v - mean, 4.0);
  m4 /= R;

  ConcentrationResult out;
  out.mean = mean;
  out.fourth_central = m4;
  out.replicates = R;
  out.se_unreliable = R < 8;
  if (R >= 2) {
    // jackknife over replicates via power sums
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (double v : vals) {
      s1 += v;
      s2 += v * v;
      s3 += v * v * v;
      s4 += v * v * v * v;
    }
    std::vector<double> theta(R);
    double tbar = 0.0;
    for (int i = 0; i < R; ++i) {
      double v = vals[i];
      double c = R - 1;
      double m1 = (s1 - v) / c;
      double M2 = (s2 - v * v) / c;
      double M3 = (s3 - v * v * v) / c;
      double M4 = (s4 - v * v * v * v) / c;
      theta[i] = M4 - 4 * M3 * m1 + 6 * M2 * m1 * m1 - 3 * m1 * m1 * m1 * m1;
      tbar += theta[i];
    }
    tbar /= R;
    double ss = 0.0;
    for (double th : theta) ss += (th - tbar) * (th - tbar);
    out.jackknife_se = std::sqrt(ss * double(R - 1) / double(R));
  }
  return out;
}

}  // namespace rmtlab
