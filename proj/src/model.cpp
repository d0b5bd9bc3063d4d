#include "rmtlab/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace rmtlab {

const char* flavor_name(Flavor f) {
  switch (f) {
    case Flavor::PairReflected: return "pair_reflected";
    case Flavor::Generalized: return "generalized";
    case Flavor::Hermitian: return "hermitian";
    case Flavor::RealSymmetric: return "real_symmetric";
    case Flavor::RealAsymmetric: return "real_asymmetric";
  }
  return "?";
}

const char* base_law_name(BaseLaw b) {
  return b == BaseLaw::GaussianMix ? "gaussian" : "rademacher";
}

Flavor flavor_from_string(const std::string& s) {
  if (s == "pair_reflected") return Flavor::PairReflected;
  if (s == "generalized") return Flavor::Generalized;
  if (s == "hermitian") return Flavor::Hermitian;
  if (s == "real_symmetric") return Flavor::RealSymmetric;
  if (s == "real_asymmetric") return Flavor::RealAsymmetric;
  throw Error(ErrorCode::ParseError, "unknown flavor: " + s);
}

BaseLaw base_law_from_string(const std::string& s) {
  if (s == "gaussian") return BaseLaw::GaussianMix;
  if (s == "rademacher") return BaseLaw::RademacherMix;
  throw Error(ErrorCode::ParseError, "unknown base law: " + s);
}

std::array<double, 4> Cov4::sample_from(const double* u) const {
  std::array<double, 4> y{};  // y = L u in permuted coordinates
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int k = 0; k < rank; ++k) s += chol[i][k] * u[k];
    y[i] = s;
  }
  std::array<double, 4> x{};
  for (int i = 0; i < 4; ++i) x[perm[i]] = y[i];
  return x;
}

namespace {

// Pivoted Cholesky of a symmetric 4x4; fails if a pivot goes below -tol.
void pivoted_cholesky(Cov4& cov, double tol) {
  std::array<std::array<double, 4>, 4> a = cov.c;
  std::array<int, 4> perm{0, 1, 2, 3};
  std::array<std::array<double, 4>, 4> l{};

  int r = 0;
  for (int k = 0; k < 4; ++k) {
    int piv = k;
    for (int i = k + 1; i < 4; ++i)
      if (a[i][i] > a[piv][piv]) piv = i;
    if (piv != k) {
      std::swap(perm[k], perm[piv]);
      for (int j = 0; j < 4; ++j) std::swap(a[k][j], a[piv][j]);
      for (int i = 0; i < 4; ++i) std::swap(a[i][k], a[i][piv]);
      for (int j = 0; j < 4; ++j) std::swap(l[k][j], l[piv][j]);
    }
    double d = a[k][k];
    if (d < -tol)
      throw Error(ErrorCode::NotPSD, "covariance is not positive semidefinite");
    if (d <= tol) continue;  // exhausted numerical rank; keep scanning pivots
    double rt = std::sqrt(d);
    l[k][r] = rt;
    for (int i = k + 1; i < 4; ++i) l[i][r] = a[i][k] / rt;
    for (int i = k + 1; i < 4; ++i)
      for (int j = k + 1; j < 4; ++j) a[i][j] -= l[i][r] * l[j][r];
    for (int i = k + 1; i < 4; ++i) a[i][k] = a[k][i] = 0.0;
    ++r;
  }
  // Residual check: P C P^T - L L^T must be ~0 or the matrix was indefinite.
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = cov.c[perm[i]][perm[j]];
      for (int k = 0; k < r; ++k) s -= l[i][k] * l[j][k];
      if (std::abs(s) > 1e-9)
        throw Error(ErrorCode::NotPSD,
                    "covariance is not positive semidefinite");
    }
  }
  cov.chol = l;
  cov.perm = perm;
  cov.rank = r;
}

void require_close(double got, double want, const std::string& what) {
  if (std::abs(got - want) > 1e-12)
    throw Error(ErrorCode::FlavorConflict,
                what + " must equal " + std::to_string(want) + ", got " +
                    std::to_string(got));
}

}  // namespace

Cov4 validate_spec(const CorrelationSpec& spec,
                   std::vector<std::string>* warnings) {
  if (spec.sigma_x2 < 0 || spec.sigma_y2 < 0)
    throw Error(ErrorCode::FlavorConflict, "variances must be nonnegative");
  for (int i = 0; i < 6; ++i) {
    if (std::abs(spec.rho[i]) > 1.0 + 1e-12)
      throw Error(ErrorCode::NotPSD,
                  "|rho" + std::to_string(i + 1) + "| exceeds 1");
    if (spec.rho[i] < 0 && warnings)
      warnings->push_back("rho" + std::to_string(i + 1) +
                          " is negative; allowed (PSD is the binding "
                          "constraint) but outside the stated range");
  }

  switch (spec.flavor) {
    case Flavor::PairReflected:
      break;
    case Flavor::Generalized:
      require_close(spec.sigma_x2 + spec.sigma_y2, 1.0,
                    "generalized flavor: sigma_x2 + sigma_y2");
      break;
    case Flavor::Hermitian:
      require_close(spec.rho2(), spec.sigma_x2, "hermitian flavor: rho2");
      require_close(spec.rho3(), -spec.rho4(), "hermitian flavor: rho3+rho4");
      require_close(spec.rho5(), -spec.sigma_y2, "hermitian flavor: rho5");
      break;
    case Flavor::RealSymmetric:
      require_close(spec.sigma_y2, 0.0, "real symmetric flavor: sigma_y2");
      require_close(spec.rho2(), spec.sigma_x2, "real symmetric flavor: rho2");
      break;
    case Flavor::RealAsymmetric:
      require_close(spec.sigma_y2, 0.0, "real asymmetric flavor: sigma_y2");
      break;
  }

  Cov4 cov;
  const double sx = spec.sigma_x2, sy = spec.sigma_y2;
  const auto& r = spec.rho;
  if (spec.flavor == Flavor::Generalized) {
    // (x, y, x', y'): rho1=E[xy], rho2=E[xx'], rho3=E[xy'],
    // rho4=E[x'y], rho5=E[x'y'], rho6=E[yy']
    cov.c = {{{sx, r[0], r[1], r[2]},
              {r[0], sy, r[3], r[5]},
              {r[1], r[3], sx, r[4]},
              {r[2], r[5], r[4], sy}}};
  } else {
    // (x_j, y_j, x_{-j}, y_{-j}): rho1=E[x_j y_j], rho2=E[x_j x_{-j}],
    // rho3=E[x_j y_{-j}], rho4=E[x_{-j} y_j], rho5=E[y_j y_{-j}],
    // rho6=E[x_{-j} y_{-j}]
    cov.c = {{{sx, r[0], r[1], r[2]},
              {r[0], sy, r[3], r[4]},
              {r[1], r[3], sx, r[5]},
              {r[2], r[4], r[5], sy}}};
  }
  pivoted_cholesky(cov, 1e-12);
  return cov;
}

std::string CorrelationSpec::canonical_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "flavor=" << flavor_name(flavor) << ";base=" << base_law_name(base)
     << ";sx2=" << sigma_x2 << ";sy2=" << sigma_y2;
  for (int i = 0; i < 6; ++i) os << ";rho" << (i + 1) << "=" << rho[i];
  return os.str();
}

// ---------------------------------------------------------------------------

DeterministicSymbol DeterministicSymbol::finite(
    std::vector<std::pair<int, cplx>> s) {
  DeterministicSymbol d;
  d.family = Family::FiniteSupport;
  d.support = std::move(s);
  std::sort(d.support.begin(), d.support.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return d;
}

DeterministicSymbol DeterministicSymbol::geometric(cplx ratio, cplx scale) {
  if (std::abs(ratio) >= 1.0)
    throw Error(ErrorCode::ConfigError, "geometric symbol needs |ratio| < 1");
  DeterministicSymbol d;
  d.family = Family::Geometric;
  d.ratio = ratio;
  d.scale = scale;
  return d;
}

DeterministicSymbol DeterministicSymbol::poly_decay(double exponent,
                                                    cplx scale) {
  if (exponent <= 1.0)
    throw Error(ErrorCode::ConfigError, "poly decay symbol needs exponent > 1");
  DeterministicSymbol d;
  d.family = Family::PolyDecay;
  d.exponent = exponent;
  d.scale = scale;
  return d;
}

cplx DeterministicSymbol::value(long long k) const {
  switch (family) {
    case Family::FiniteSupport: {
      for (const auto& [i, v] : support)
        if (i == k) return v;
      return 0.0;
    }
    case Family::Geometric:
      return scale * std::pow(ratio, cplx(double(std::llabs(k)), 0.0));
    case Family::PolyDecay:
      return scale / std::pow(1.0 + double(std::llabs(k)), exponent);
  }
  return 0.0;
}

double DeterministicSymbol::total_abs() const {
  switch (family) {
    case Family::FiniteSupport: {
      double s = 0.0;
      for (const auto& [i, v] : support) s += std::abs(v);
      return s;
    }
    case Family::Geometric: {
      double q = std::abs(ratio);
      return std::abs(scale) * (1.0 + 2.0 * q / (1.0 - q));
    }
    case Family::PolyDecay: {
      // exact head + integral bound for the tail, accurate to ~1e-12
      double s = std::abs(scale);
      const long long head = 100000;
      for (long long k = 1; k <= head; ++k)
        s += 2.0 * std::abs(scale) / std::pow(1.0 + double(k), exponent);
      s += 2.0 * std::abs(scale) * std::pow(1.0 + double(head), 1.0 - exponent) /
           (exponent - 1.0);
      return s;
    }
  }
  return 0.0;
}

double DeterministicSymbol::tail_abs(long long K) const {
  switch (family) {
    case Family::FiniteSupport: {
      double s = 0.0;
      for (const auto& [i, v] : support)
        if (std::llabs(i) > K) s += std::abs(v);
      return s;
    }
    case Family::Geometric: {
      double q = std::abs(ratio);
      return 2.0 * std::abs(scale) * std::pow(q, double(K + 1)) / (1.0 - q);
    }
    case Family::PolyDecay:
      return 2.0 * std::abs(scale) * std::pow(1.0 + double(K), 1.0 - exponent) /
             (exponent - 1.0);
  }
  return 0.0;
}

std::optional<long long> DeterministicSymbol::truncation_for(
    double tol, long long max_k) const {
  long long lo = 0;
  while (lo <= max_k) {
    if (tail_abs(lo) <= tol) return lo;
    lo = lo == 0 ? 1 : lo * 2;
  }
  return std::nullopt;
}

std::vector<cplx> DeterministicSymbol::realize(std::size_t n) const {
  std::vector<cplx> d(2 * n - 1);
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = value(static_cast<long long>(i) - static_cast<long long>(n - 1));
  return d;
}

std::string DeterministicSymbol::canonical_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (family) {
    case Family::FiniteSupport:
      os << "finite";
      for (const auto& [i, v] : support)
        os << ";" << i << ":" << v.real() << "," << v.imag();
      break;
    case Family::Geometric:
      os << "geometric;r=" << ratio.real() << "," << ratio.imag()
         << ";scale=" << scale.real() << "," << scale.imag();
      break;
    case Family::PolyDecay:
      os << "polydecay;p=" << exponent << ";scale=" << scale.real() << ","
         << scale.imag();
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

MonomialWord MonomialWord::parse(const std::string& text) {
  MonomialWord w;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
  };
  skip_ws();
  if (i == text.size()) return w;  // empty word = identity
  while (i < text.size()) {
    Letter l;
    if (text[i] == 'P' || text[i] == 'p') {
      l.kind = LetterKind::P;
      ++i;
      if (i < text.size() && text[i] == '*') ++i;  // P* == P
    } else {
      bool det = false;
      if (text[i] == 'T' || text[i] == 't')
        det = false;
      else if (text[i] == 'D' || text[i] == 'd')
        det = true;
      else
        throw Error(ErrorCode::ParseError,
                    "bad letter at position " + std::to_string(i) + " in '" +
                        text + "'");
      ++i;
      bool gen = false;
      if (i < text.size() && (text[i] == 'g' || text[i] == 'G')) {
        gen = true;
        ++i;
      }
      l.kind = det ? (gen ? LetterKind::DetGenToeplitz : LetterKind::DetToeplitz)
                   : (gen ? LetterKind::RandGenToeplitz
                          : LetterKind::RandToeplitz);
      std::size_t start = i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
        ++i;
      l.copy = (i > start) ? std::stoi(text.substr(start, i - start)) : 1;
      if (l.copy < 1)
        throw Error(ErrorCode::ParseError, "copy index must be >= 1");
      if (i < text.size() && text[i] == '*') {
        l.star = true;
        ++i;
      }
    }
    w.letters.push_back(l);
    skip_ws();
    if (i == text.size()) break;
    if (text[i] != '.')
      throw Error(ErrorCode::ParseError,
                  "expected '.' at position " + std::to_string(i) + " in '" +
                      text + "'");
    ++i;
    skip_ws();
    if (i == text.size())
      throw Error(ErrorCode::ParseError, "trailing '.' in '" + text + "'");
  }
  return w;
}

std::string MonomialWord::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i) s += '.';
    const Letter& l = letters[i];
    switch (l.kind) {
      case LetterKind::P: s += 'P'; break;
      case LetterKind::RandToeplitz: s += 'T'; break;
      case LetterKind::DetToeplitz: s += 'D'; break;
      case LetterKind::RandGenToeplitz: s += "Tg"; break;
      case LetterKind::DetGenToeplitz: s += "Dg"; break;
    }
    if (l.kind != LetterKind::P) {
      s += std::to_string(l.copy);
      if (l.star) s += '*';
    }
  }
  return s;
}

std::size_t MonomialWord::count_p() const {
  std::size_t c = 0;
  for (const auto& l : letters)
    if (l.kind == LetterKind::P) ++c;
  return c;
}

std::size_t MonomialWord::count_random() const {
  std::size_t c = 0;
  for (const auto& l : letters)
    if (l.is_random()) ++c;
  return c;
}

bool MonomialWord::has_kind(LetterKind k) const {
  return std::any_of(letters.begin(), letters.end(),
                     [&](const Letter& l) { return l.kind == k; });
}

MonomialWord MonomialWord::normalized() const {
  MonomialWord out;
  for (const auto& l : letters) {
    if (l.kind == LetterKind::P && !out.letters.empty() &&
        out.letters.back().kind == LetterKind::P) {
      out.letters.pop_back();  // P P = I
    } else {
      out.letters.push_back(l);
    }
  }
  return out;
}

MonomialWord MonomialWord::rotated(std::size_t by) const {
  MonomialWord out;
  const std::size_t n = letters.size();
  out.letters.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.letters.push_back(letters[(i + by) % n]);
  return out;
}

MonomialWord MonomialWord::adjoint() const {
  MonomialWord out;
  out.letters.reserve(letters.size());
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
    Letter l = *it;
    if (l.kind != LetterKind::P) l.star = !l.star;
    out.letters.push_back(l);
  }
  return out;
}

SegmentedWord segment_word(const MonomialWord& word) {
  const auto& ls = word.letters;
  std::size_t first_p = ls.size();
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (ls[i].kind == LetterKind::P) {
      first_p = i;
      break;
    }
  }
  if (first_p == ls.size())
    throw Error(ErrorCode::NoP, "segment_word: word contains no P letter");

  SegmentedWord seg;
  seg.rotation = first_p;
  MonomialWord rot = word.rotated(first_p);

  for (const auto& l : rot.letters) {
    if (l.kind == LetterKind::P) {
      seg.segments.emplace_back();
      ++seg.p;
    } else {
      seg.segments.back().push_back(l);
      seg.segment_of.push_back(seg.p);  // 1-based segment index
      seg.flat.push_back(l);
    }
  }
  seg.cumulative.resize(seg.p);
  std::size_t cum = 0;
  for (std::size_t e = 0; e < seg.p; ++e) {
    cum += seg.segments[e].size();
    seg.cumulative[e] = cum;
  }
  return seg;
}

}  // namespace rmtlab
