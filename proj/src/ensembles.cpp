#include "rmtlab/ensembles.hpp"

#include <cmath>

#include "rmtlab/fft.hpp"
#include "rmtlab/rng.hpp"

namespace rmtlab {

namespace {

constexpr std::uint64_t kLaneStride = 1ULL << 40;  // copy index above, j below

void draw_base(StreamRng& rng, BaseLaw base, double* u, int count) {
  for (int i = 0; i < count; ++i)
    u[i] = (base == BaseLaw::GaussianMix) ? rng.next_normal()
                                          : rng.next_rademacher();
}

// Cholesky of [[v1, c], [c, v2]]; rank-deficient cases fall back to the
// degenerate factor.
struct Chol2 {
  double l11 = 0, l21 = 0, l22 = 0;
  Chol2(double v1, double c, double v2) {
    if (v1 > 1e-14) {
      l11 = std::sqrt(v1);
      l21 = c / l11;
      double rem = v2 - l21 * l21;
      l22 = rem > 1e-14 ? std::sqrt(rem) : 0.0;
    } else {
      l11 = 0.0;
      l21 = 0.0;
      l22 = v2 > 1e-14 ? std::sqrt(v2) : 0.0;
    }
  }
  std::pair<double, double> apply(double u1, double u2) const {
    return {l11 * u1, l21 * u1 + l22 * u2};
  }
};

}  // namespace

SymbolSeq sample_pair_reflected(const CorrelationSpec& spec, std::size_t n,
                                std::uint64_t seed, std::uint64_t replicate,
                                std::uint64_t copy) {
  if (spec.flavor == Flavor::Generalized)
    throw Error(ErrorCode::InvalidFlavor,
                "sample_pair_reflected: spec flavor is generalized");
  Cov4 cov = validate_spec(spec);
  const Chol2 pair01(spec.sigma_x2, spec.rho1(), spec.sigma_y2);
  const Chol2 pair22(spec.sigma_x2, spec.rho2(), spec.sigma_x2);

  SymbolSeq seq;
  seq.n = n;
  seq.coef.assign(2 * n - 1, cplx{});

  for (std::size_t j = 0; j < n; ++j) {
    StreamRng rng(seed, replicate, copy * kLaneStride + j);
    double u[4];
    draw_base(rng, spec.base, u, 4);  // fixed stream consumption per lane
    if (j == 0) {
      // single diagonal entry: only the (x_0, y_0) pair exists
      switch (spec.flavor) {
        case Flavor::PairReflected: {
          auto [x, y] = pair01.apply(u[0], u[1]);
          seq.at(0) = cplx(x, y);
          break;
        }
        case Flavor::Hermitian:
        case Flavor::RealSymmetric:
        case Flavor::RealAsymmetric:
          seq.at(0) = cplx(std::sqrt(spec.sigma_x2) * u[0], 0.0);
          break;
        default: break;
      }
      continue;
    }
    const long long jj = static_cast<long long>(j);
    switch (spec.flavor) {
      case Flavor::PairReflected: {
        auto q = cov.sample_from(u);
        seq.at(jj) = cplx(q[0], q[1]);
        seq.at(-jj) = cplx(q[2], q[3]);
        break;
      }
      case Flavor::Hermitian: {
        auto [x, y] = pair01.apply(u[0], u[1]);
        seq.at(jj) = cplx(x, y);
        seq.at(-jj) = std::conj(seq.at(jj));
        break;
      }
      case Flavor::RealSymmetric: {
        double x = std::sqrt(spec.sigma_x2) * u[0];
        seq.at(jj) = seq.at(-jj) = cplx(x, 0.0);
        break;
      }
      case Flavor::RealAsymmetric: {
        auto [xp, xm] = pair22.apply(u[0], u[1]);
        seq.at(jj) = cplx(xp, 0.0);
        seq.at(-jj) = cplx(xm, 0.0);
        break;
      }
      default: break;
    }
  }
  return seq;
}

GenSymbolSeq sample_generalized(const CorrelationSpec& spec, std::size_t n,
                                std::uint64_t seed, std::uint64_t replicate,
                                std::uint64_t copy) {
  if (spec.flavor != Flavor::Generalized)
    throw Error(ErrorCode::InvalidFlavor,
                "sample_generalized: spec flavor is not generalized");
  Cov4 cov = validate_spec(spec);

  GenSymbolSeq out;
  out.a.n = out.b.n = n;
  out.a.coef.assign(2 * n - 1, cplx{});
  out.b.coef.assign(2 * n - 1, cplx{});

  for (long long j = -((long long)(n) - 1); j <= (long long)(n) - 1; ++j) {
    std::uint64_t lane = std::uint64_t(j + (long long)(n) - 1);
    StreamRng rng(seed, replicate, copy * kLaneStride + lane);
    double u[4];
    draw_base(rng, spec.base, u, 4);
    auto q = cov.sample_from(u);
    out.a.at(j) = cplx(q[0], q[1]);
    out.b.at(j) = cplx(q[2], q[3]);
  }
  return out;
}

// ---------------------------------------------------------------------------

StructuredMatrix StructuredMatrix::toeplitz(SymbolSeq seq) {
  StructuredMatrix m;
  m.kind = MatrixKind::Toeplitz;
  m.n = seq.n;
  m.a = std::move(seq);
  return m;
}

StructuredMatrix StructuredMatrix::gen_toeplitz(SymbolSeq a, SymbolSeq b) {
  if (a.n != b.n)
    throw Error(ErrorCode::DimensionMismatch,
                "gen_toeplitz: sequence lengths differ");
  StructuredMatrix m;
  m.kind = MatrixKind::GenToeplitz;
  m.n = a.n;
  m.a = std::move(a);
  m.b = std::move(b);
  return m;
}

StructuredMatrix StructuredMatrix::det_toeplitz(const DeterministicSymbol& sym,
                                                std::size_t n) {
  StructuredMatrix m;
  m.kind = MatrixKind::DetToeplitz;
  m.n = n;
  m.a.n = n;
  m.a.coef = sym.realize(n);
  return m;
}

StructuredMatrix StructuredMatrix::backward_identity(std::size_t n) {
  StructuredMatrix m;
  m.kind = MatrixKind::BackwardIdentity;
  m.n = n;
  return m;
}

cplx StructuredMatrix::entry(std::size_t i, std::size_t j) const {
  const long long d = (long long)(i) - (long long)(j);
  switch (kind) {
    case MatrixKind::Toeplitz:
    case MatrixKind::DetToeplitz:
      return a.at(d);
    case MatrixKind::GenToeplitz:
      // 1-based rule: a if (i+1)+(j+1) <= n, b if >= n+1
      return (i + j + 2 <= n) ? a.at(d) : b.at(d);
    case MatrixKind::BackwardIdentity:
      return (i + j == n - 1) ? cplx(1.0, 0.0) : cplx{};
  }
  return {};
}

Mat StructuredMatrix::to_dense(std::size_t cap) const {
  if (n > cap)
    throw Error(ErrorCode::TooLarge,
                "to_dense: n exceeds the dense cap (" + std::to_string(cap) +
                    ")");
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = entry(i, j);
  return m;
}

std::size_t StructuredMatrix::direct_cutoff() { return 256; }

std::vector<cplx> StructuredMatrix::matvec_direct(const std::vector<cplx>& v,
                                                  bool adjointed) const {
  if (v.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "matvec: length mismatch");
  std::vector<cplx> out(n);
  if (kind == MatrixKind::BackwardIdentity) {
    for (std::size_t i = 0; i < n; ++i) out[i] = v[n - 1 - i];
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      cplx e = adjointed ? std::conj(entry(j, i)) : entry(i, j);
      s += e * v[j];
    }
    out[i] = s;
  }
  return out;
}

std::vector<cplx> StructuredMatrix::matvec(const std::vector<cplx>& v,
                                           bool adjointed) const {
  if (v.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "matvec: length mismatch");
  if (kind == MatrixKind::BackwardIdentity || n <= direct_cutoff())
    return matvec_direct(v, adjointed);
  std::vector<cplx> out;
  if (kind == MatrixKind::GenToeplitz) {
    GenToeplitzApplier ap(a, b);
    ap.apply(v, out, adjointed);
  } else {
    ToeplitzApplier ap(a);
    ap.apply(v, out, adjointed);
  }
  return out;
}

ToeplitzApplier::ToeplitzApplier(const SymbolSeq& seq) : n(seq.n) {
  m = fft::next_pow2(2 * n - 1);
  std::vector<cplx> col(m), col_adj(m);
  col[0] = seq.at(0);
  col_adj[0] = std::conj(seq.at(0));
  for (std::size_t k = 1; k < n; ++k) {
    col[k] = seq.at((long long)(k));
    col[m - k] = seq.at(-(long long)(k));
    col_adj[k] = std::conj(seq.at(-(long long)(k)));
    col_adj[m - k] = std::conj(seq.at((long long)(k)));
  }
  fft::transform(col, false);
  fft::transform(col_adj, false);
  spectrum = std::move(col);
  spectrum_adj = std::move(col_adj);
}

void ToeplitzApplier::apply(const std::vector<cplx>& v, std::vector<cplx>& out,
                            bool adjointed) const {
  std::vector<cplx> buf(m, cplx{});
  std::copy(v.begin(), v.end(), buf.begin());
  fft::transform(buf, false);
  const auto& spec = adjointed ? spectrum_adj : spectrum;
  for (std::size_t i = 0; i < m; ++i) buf[i] *= spec[i];
  fft::transform(buf, true);
  out.assign(buf.begin(), buf.begin() + n);
}

namespace {

// out[i] += sum_{s <= i} ker(i + s - (n-1)) w[s], i in [0, n).
// Divide and conquer: the diagonal blocks recurse, the off-diagonal row
// block is a full Hankel slab evaluated as a correlation.
void tri_hankel_accumulate(const SymbolSeq& ker, const std::vector<cplx>& w,
                           std::vector<cplx>& out, std::size_t lo,
                           std::size_t hi) {
  const std::size_t len = hi - lo;
  const long long shift = (long long)(ker.n) - 1;
  if (len == 0) return;
  if (len <= 96) {
    for (std::size_t i = lo; i < hi; ++i) {
      cplx s = 0.0;
      for (std::size_t t = lo; t <= i; ++t)
        s += ker.at((long long)(i + t) - shift) * w[t];
      out[i] += s;
    }
    return;
  }
  const std::size_t mid = lo + len / 2;
  tri_hankel_accumulate(ker, w, out, lo, mid);
  tri_hankel_accumulate(ker, w, out, mid, hi);

  const std::size_t nc = mid - lo, nr = hi - mid;
  const long long base = (long long)(mid + lo) - shift;
  const std::size_t seg_len = nr + nc - 1;
  const std::size_t m = fft::next_pow2(seg_len + nc - 1);
  std::vector<cplx> seg(m, cplx{}), rev(m, cplx{});
  for (std::size_t t = 0; t < seg_len; ++t) seg[t] = ker.at(base + (long long)(t));
  for (std::size_t t = 0; t < nc; ++t) rev[t] = w[lo + nc - 1 - t];
  auto conv = fft::cyclic_convolve(std::move(seg), std::move(rev));
  for (std::size_t r = 0; r < nr; ++r) out[mid + r] += conv[nc - 1 + r];
}

SymbolSeq adjoint_symbol(const SymbolSeq& s) {
  SymbolSeq t;
  t.n = s.n;
  t.coef.resize(s.coef.size());
  const long long nn = (long long)(s.n);
  for (long long k = -(nn - 1); k <= nn - 1; ++k)
    t.at(k) = std::conj(s.at(-k));
  return t;
}

SymbolSeq diff_symbol(const SymbolSeq& b, const SymbolSeq& a) {
  SymbolSeq t;
  t.n = a.n;
  t.coef.resize(a.coef.size());
  for (std::size_t i = 0; i < t.coef.size(); ++i)
    t.coef[i] = b.coef[i] - a.coef[i];
  return t;
}

}  // namespace

GenToeplitzApplier::GenToeplitzApplier(const SymbolSeq& a, const SymbolSeq& b)
    : n(a.n),
      base(a),
      base_adj(adjoint_symbol(a)),
      corr(diff_symbol(b, a)),
      corr_adj(diff_symbol(adjoint_symbol(b), adjoint_symbol(a))) {}

void GenToeplitzApplier::apply(const std::vector<cplx>& v,
                               std::vector<cplx>& out, bool adjointed) const {
  const ToeplitzApplier& t = adjointed ? base_adj : base;
  t.apply(v, out, false);
  std::vector<cplx> w(v.rbegin(), v.rend());
  tri_hankel_accumulate(adjointed ? corr_adj : corr, w, out, 0, n);
}

}  // namespace rmtlab
