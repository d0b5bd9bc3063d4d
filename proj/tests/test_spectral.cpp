#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "regression_constants.hpp"
#include "rmtlab/rng.hpp"
#include "rmtlab/spectral.hpp"

using namespace rmtlab;

namespace {

CorrelationSpec hermitian_spec() {
  CorrelationSpec s;
  s.flavor = Flavor::Hermitian;
  s.sigma_x2 = 0.5;
  s.sigma_y2 = 0.5;
  s.rho = {0.0, 0.5, 0.0, 0.0, -0.5, 0.0};
  return s;
}

CorrelationSpec real_sym() {
  CorrelationSpec s;
  s.flavor = Flavor::RealSymmetric;
  s.sigma_x2 = 1.0;
  s.sigma_y2 = 0.0;
  s.rho = {0, 1.0, 0, 0, 0, 0};
  return s;
}

Mat random_hermitian(std::size_t n, std::uint64_t seed) {
  StreamRng rng(seed, 0, 0);
  Mat a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = cplx(rng.next_normal(), 0.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      cplx v(rng.next_normal(), rng.next_normal());
      a(i, j) = v;
      a(j, i) = std::conj(v);
    }
  }
  return a;
}

}  // namespace

TEST_CASE("two-by-two analytic eigenvalues") {
  Mat a(2, 2);
  a(0, 0) = 2.0;
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  a(1, 1) = 2.0;
  auto lam = eigenvalues_hermitian(a);
  CHECK(lam[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lam[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("backward identity spectrum is plus-minus one") {
  for (std::size_t n : {5u, 6u}) {
    auto pd = StructuredMatrix::backward_identity(n).to_dense();
    auto lam = eigenvalues_hermitian(pd);
    std::size_t minus = 0, plus = 0;
    for (double l : lam) {
      if (std::abs(l + 1.0) < 1e-10) ++minus;
      if (std::abs(l - 1.0) < 1e-10) ++plus;
    }
    CHECK(plus == (n + 1) / 2);
    CHECK(minus == n / 2);
  }
}

TEST_CASE("trace and frobenius identities on random hermitian input") {
  for (int c = 0; c < 20; ++c) {
    Mat a = random_hermitian(64, 100 + c);
    auto lam = eigenvalues_hermitian(a);
    double sum = 0.0, sq = 0.0;
    for (double l : lam) {
      sum += l;
      sq += l * l;
    }
    CHECK(sum == doctest::Approx(a.trace().real()).epsilon(1e-9));
    double fro2 = a.frob_norm() * a.frob_norm();
    CHECK(sq == doctest::Approx(fro2).epsilon(1e-9));
  }
}

TEST_CASE("complex rotations handle complex hermitian input") {
  Mat a(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = -0.5;
  a(2, 2) = 0.25;
  a(0, 1) = cplx(0.3, 0.7);
  a(1, 0) = std::conj(a(0, 1));
  a(0, 2) = cplx(-0.2, 0.1);
  a(2, 0) = std::conj(a(0, 2));
  a(1, 2) = cplx(0.0, -0.6);
  a(2, 1) = std::conj(a(1, 2));
  auto lam = eigenvalues_hermitian(a);
  double sum = lam[0] + lam[1] + lam[2];
  CHECK(sum == doctest::Approx(0.75).epsilon(1e-10));
  // characteristic polynomial check: det(A - lam I) = 0
  for (double l : lam) {
    Mat b = a;
    for (int i = 0; i < 3; ++i) b(i, i) -= l;
    // 3x3 determinant
    cplx det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
               b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
               b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    CHECK(std::abs(det) < 1e-8);
  }
}

TEST_CASE("polynomial realization guards and hermiticity") {
  auto spec = hermitian_spec();
  auto q = WordPolynomial::parse("T1\n");
  auto w = MonomialWord::parse("T1");
  Realization re = realize_word(w, &spec, {}, {}, 48, 3, 0);
  Mat m = realize_polynomial(q, re, spec.flavor);
  for (std::size_t i = 0; i < 48; ++i)
    for (std::size_t j = 0; j < 48; ++j)
      CHECK(std::abs(m(i, j) - std::conj(m(j, i))) < 1e-12);

  // general complex flavor: T alone fails the formal check
  CorrelationSpec pr;
  pr.sigma_x2 = 0.5;
  pr.sigma_y2 = 0.5;
  Realization re2 = realize_word(w, &pr, {}, {}, 16, 3, 0);
  CHECK_THROWS_AS(realize_polynomial(q, re2, pr.flavor), Error);

  // (T + T*)/2 is hermitian for every flavor
  auto qs = WordPolynomial::parse("0.5 T1\n0.5 T1*\n");
  Mat ms = realize_polynomial(qs, re2, pr.flavor);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      CHECK(std::abs(ms(i, j) - std::conj(ms(j, i))) < 1e-12);
}

TEST_CASE("esd moments converge to the limit values") {
  auto spec = real_sym();
  auto q = WordPolynomial::parse("T1\n");
  EsdOptions opts;
  opts.replicates = 3;
  opts.seed = 11;
  opts.max_moment = 4;
  opts.integ.samples = 60000;
  opts.integ.qmc_replicates = 8;
  auto rep = esd_study(q, spec, {}, {}, 256, opts);
  CHECK(rep.limit_moments[1] == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(rep.limit_moments[3] == doctest::Approx(8.0 / 3.0).epsilon(3e-3));
  CHECK(std::abs(rep.moments[1] - 1.0) < 3.0 * rep.moment_se[1] + 0.08);
  CHECK(std::abs(rep.moments[3] - 8.0 / 3.0) < 3.0 * rep.moment_se[3] + 0.3);
  // odd moments near zero
  CHECK(std::abs(rep.moments[0]) < 0.05);
  // gaussian bound: 8/3 <= 3 * 1
  CHECK(rep.gaussian_bound_ok[3]);
  // histogram accounts for every eigenvalue
  std::size_t total = 0;
  for (auto c : rep.counts) total += c;
  CHECK(total == 256 * 3);
  // moments recompute from the eigenvalues
  double m2 = 0.0;
  for (const auto& ev : rep.eigenvalues)
    for (double l : ev) m2 += l * l;
  m2 /= double(256 * 3);
  CHECK(m2 == doctest::Approx(rep.moments[1]).epsilon(1e-12));
}

TEST_CASE("deterministic polynomial has a two-atom spectrum") {
  // Q = P: eigenvalues are +-1
  CorrelationSpec spec = real_sym();
  auto q = WordPolynomial::parse("P\n");
  EsdOptions opts;
  opts.replicates = 1;
  opts.max_moment = 2;
  opts.integ.samples = 1000;
  opts.integ.qmc_replicates = 2;
  auto rep = esd_study(q, spec, {}, {}, 33, opts);
  CHECK(rep.moments[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.moments[0] == doctest::Approx(1.0 / 33.0).epsilon(1e-9));
}
