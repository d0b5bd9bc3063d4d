#include "rmtlab/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "rmtlab/rng.hpp"

namespace rmtlab {

Mat realize_polynomial(const WordPolynomial& q, const Realization& re,
                       Flavor flavor) {
  if (!q.is_formally_self_adjoint(flavor))
    throw Error(ErrorCode::NotSelfAdjoint,
                "polynomial is not formally self-adjoint");
  const std::size_t n = re.n;
  Mat out(n, n);
  std::vector<cplx> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), cplx{});
    col[j] = 1.0;
    std::vector<cplx> acc(n, cplx{});
    for (const auto& term : q.terms) {
      auto v = apply_word(term.word, re, col);
      for (std::size_t i = 0; i < n; ++i) acc[i] += term.coeff * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) out(i, j) = acc[i];
  }
  double scale = out.max_abs();
  double herm_defect = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      herm_defect = std::max(herm_defect,
                             std::abs(out(i, j) - std::conj(out(j, i))));
  if (herm_defect > 1e-10 * std::max(scale, 1.0))
    throw Error(ErrorCode::NotSelfAdjoint,
                "realized polynomial is not hermitian within tolerance");
  // symmetrize away the roundoff skew
  for (std::size_t i = 0; i < n; ++i) {
    out(i, i) = cplx(out(i, i).real(), 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      cplx m = 0.5 * (out(i, j) + std::conj(out(j, i)));
      out(i, j) = m;
      out(j, i) = std::conj(m);
    }
  }
  return out;
}

namespace {

double off_diagonal_frobenius(const Mat& a) {
  const std::size_t n = a.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace

std::vector<double> eigenvalues_hermitian(const Mat& input,
                                          const JacobiOptions& opts) {
  const std::size_t n = input.rows();
  if (n != input.cols())
    throw Error(ErrorCode::DimensionMismatch,
                "eigensolver needs a square matrix");
  Mat a = input;
  const double fro = std::max(a.frob_norm(), 1e-300);

  Mat v;
  if (opts.residual_check) v = Mat::identity(n);

  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double off = off_diagonal_frobenius(a);
    if (off <= opts.tol * fro) break;
    // skip rotations far below the current off-diagonal scale
    double thresh = (sweep < 4) ? 0.2 * off / double(n) : 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        cplx apq = a(p, q);
        double mag = std::abs(apq);
        if (mag <= thresh || mag == 0.0) continue;
        double app = a(p, p).real();
        double aqq = a(q, q).real();
        cplx phase = apq / mag;
        double tau = (aqq - app) / (2.0 * mag);
        double t = (tau >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        cplx sp = s * phase;

        for (std::size_t k = 0; k < n; ++k) {
          cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - std::conj(sp) * akq;
          a(k, q) = sp * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sp * aqk;
          a(q, k) = std::conj(sp) * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = cplx(a(p, p).real(), 0.0);
        a(q, q) = cplx(a(q, q).real(), 0.0);
        if (opts.residual_check) {
          for (std::size_t k = 0; k < n; ++k) {
            cplx vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - std::conj(sp) * vkq;
            v(k, q) = sp * vkp + c * vkq;
          }
        }
      }
    }
  }
  if (sweep >= opts.max_sweeps)
    throw Error(ErrorCode::NoConvergence,
                "Jacobi sweep cap exceeded before the off-diagonal target");

  std::vector<double> lam(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    lam[i] = a(i, i).real();
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return lam[x] < lam[y]; });

  if (opts.residual_check) {
    std::size_t step = std::max<std::size_t>(1, n / 10);
    for (std::size_t idx = 0; idx < n; idx += step) {
      std::size_t col = order[idx];
      std::vector<cplx> vec(n);
      for (std::size_t k = 0; k < n; ++k) vec[k] = v(k, col);
      auto av = input.apply(vec);
      double resid = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        resid += std::norm(av[k] - lam[col] * vec[k]);
      if (std::sqrt(resid) > 1e-8 * fro)
        throw Error(ErrorCode::NoConvergence,
                    "eigenpair residual above the acceptance threshold");
    }
  }

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lam[order[i]];
  return out;
}

namespace {

std::size_t fd_bins(std::vector<double> pooled) {
  if (pooled.size() < 4) return 8;
  std::sort(pooled.begin(), pooled.end());
  auto quantile = [&](double qq) {
    double pos = qq * double(pooled.size() - 1);
    std::size_t lo = std::size_t(pos);
    double frac = pos - double(lo);
    return pooled[lo] * (1 - frac) +
           pooled[std::min(lo + 1, pooled.size() - 1)] * frac;
  };
  double iqr = quantile(0.75) - quantile(0.25);
  double width = 2.0 * iqr / std::cbrt(double(pooled.size()));
  double span = pooled.back() - pooled.front();
  if (width <= 0 || span <= 0) return 8;
  return std::clamp<std::size_t>(std::size_t(span / width) + 1, 4, 512);
}

}  // namespace

EsdReport esd_study(const WordPolynomial& q, const CorrelationSpec& spec,
                    const std::map<int, SymbolSpec>& det_symbols,
                    const std::map<int, SymbolSpec>& det_gen_symbols,
                    std::size_t n, const EsdOptions& opts) {
  if (!q.is_formally_self_adjoint(spec.flavor))
    throw Error(ErrorCode::NotSelfAdjoint,
                "esd study needs a self-adjoint polynomial");
  EsdReport rep;
  rep.n = n;
  rep.seed = opts.seed;
  rep.replicates = opts.replicates;
  rep.polynomial = q.to_string();
  rep.eigenvalues.resize(opts.replicates);

  MonomialWord all;
  for (const auto& t : q.terms)
    all.letters.insert(all.letters.end(), t.word.letters.begin(),
                       t.word.letters.end());

  run_replicates(opts.replicates, [&](int r) {
    Realization re = realize_word(all, &spec, det_symbols, det_gen_symbols, n,
                                  opts.seed, std::uint64_t(r));
    Mat m = realize_polynomial(q, re, spec.flavor);
    rep.eigenvalues[r] = eigenvalues_hermitian(m);
  });

  const int twok = opts.max_moment;
  rep.moments.assign(twok, 0.0);
  rep.moment_se.assign(twok, 0.0);
  std::vector<std::vector<double>> per_rep(
      twok, std::vector<double>(opts.replicates));
  for (int r = 0; r < opts.replicates; ++r) {
    for (int k = 1; k <= twok; ++k) {
      double s = 0.0;
      for (double lam : rep.eigenvalues[r]) s += std::pow(lam, double(k));
      per_rep[k - 1][r] = s / double(n);
    }
  }
  for (int k = 0; k < twok; ++k) {
    double mean = 0.0;
    for (double vv : per_rep[k]) mean += vv;
    mean /= double(opts.replicates);
    rep.moments[k] = mean;
    if (opts.replicates > 1) {
      double var = 0.0;
      for (double vv : per_rep[k]) var += (vv - mean) * (vv - mean);
      rep.moment_se[k] = std::sqrt(var / double(opts.replicates - 1) /
                                   double(opts.replicates));
    }
  }

  rep.limit_moments.assign(twok, 0.0);
  for (int k = 1; k <= twok; ++k) {
    WordPolynomial qk = q.power(k);
    cplx lim = 0.0;
    for (const auto& term : qk.terms)
      lim += term.coeff * limit_moment_auto(term.word, &spec, det_symbols,
                                            det_gen_symbols, opts.integ)
                              .value;
    rep.limit_moments[k - 1] = lim.real();
  }
  double sigma2 = rep.limit_moments.size() >= 2 ? rep.limit_moments[1] : 0.0;
  rep.gaussian_bound_ok.assign(twok, true);
  for (int k = 2; k <= twok; k += 2) {
    double bound =
        double_factorial_odd(std::size_t(k / 2)) * std::pow(sigma2, k / 2.0);
    rep.gaussian_bound_ok[k - 1] = rep.limit_moments[k - 1] <= bound + 1e-6;
  }

  std::vector<double> pooled;
  for (const auto& ev : rep.eigenvalues)
    pooled.insert(pooled.end(), ev.begin(), ev.end());
  std::size_t bins =
      opts.histogram_bins ? opts.histogram_bins : fd_bins(pooled);
  double lo = *std::min_element(pooled.begin(), pooled.end());
  double hi = *std::max_element(pooled.begin(), pooled.end());
  if (hi <= lo) hi = lo + 1.0;
  rep.bin_edges.resize(bins + 1);
  rep.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b)
    rep.bin_edges[b] = lo + (hi - lo) * double(b) / double(bins);
  for (double x : pooled) {
    std::size_t b = std::min<std::size_t>(
        bins - 1, std::size_t((x - lo) / (hi - lo) * double(bins)));
    ++rep.counts[b];
  }
  return rep;
}

}  // namespace rmtlab
