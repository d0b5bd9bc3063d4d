#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rmtlab/model.hpp"

using namespace rmtlab;

TEST_CASE("real symmetric covariance is the rank-one x-block") {
  CorrelationSpec s;
  s.flavor = Flavor::RealSymmetric;
  s.sigma_x2 = 1.0;
  s.sigma_y2 = 0.0;
  s.rho = {0, 1.0, 0, 0, 0, 0};
  Cov4 c = validate_spec(s);
  double want[4][4] = {{1, 0, 1, 0}, {0, 0, 0, 0}, {1, 0, 1, 0}, {0, 0, 0, 0}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(c.c[i][j] == doctest::Approx(want[i][j]));
  CHECK(c.rank == 1);
}

TEST_CASE("uncorrelated complex case gives the diagonal covariance") {
  CorrelationSpec s;
  s.sigma_x2 = 0.5;
  s.sigma_y2 = 0.5;
  Cov4 c = validate_spec(s);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(c.c[i][j] == doctest::Approx(i == j ? 0.5 : 0.0));
  CHECK(c.rank == 4);
}

TEST_CASE("correlation above the variance is rejected") {
  CorrelationSpec s;
  s.flavor = Flavor::RealAsymmetric;
  s.sigma_x2 = 1.0;
  s.sigma_y2 = 0.0;
  s.rho = {0, 1.5, 0, 0, 0, 0};
  CHECK_THROWS_AS(validate_spec(s), Error);
  try {
    validate_spec(s);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPSD);
  }
}

TEST_CASE("hermitian flavor forces its correlation identities") {
  CorrelationSpec s;
  s.flavor = Flavor::Hermitian;
  s.sigma_x2 = 0.5;
  s.sigma_y2 = 0.5;
  s.rho = {0.1, 0.5, -0.1, 0.1, -0.5, -0.1};
  CHECK_NOTHROW(validate_spec(s));
  s.rho[1] = 0.4;  // rho2 != sigma_x2
  try {
    validate_spec(s);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FlavorConflict);
  }
}

TEST_CASE("generalized flavor forces unit entry variance") {
  CorrelationSpec s;
  s.flavor = Flavor::Generalized;
  s.sigma_x2 = 0.6;
  s.sigma_y2 = 0.5;
  CHECK_THROWS_AS(validate_spec(s), Error);
  s.sigma_y2 = 0.4;
  CHECK_NOTHROW(validate_spec(s));
}

TEST_CASE("negative rho warns but passes when PSD") {
  CorrelationSpec s;
  s.sigma_x2 = 0.5;
  s.sigma_y2 = 0.5;
  s.rho = {0, -0.3, 0, 0, 0, 0};
  std::vector<std::string> warnings;
  CHECK_NOTHROW(validate_spec(s, &warnings));
  CHECK(warnings.size() == 1);
}

TEST_CASE("word parsing round-trips and normalizes") {
  auto w = MonomialWord::parse("P.T1.T2*.Dg3.Tg1*");
  CHECK(w.to_string() == "P.T1.T2*.Dg3.Tg1*");
  CHECK(w.size() == 5);
  CHECK(w.letters[0].kind == LetterKind::P);
  CHECK(w.letters[2].star);
  CHECK(w.letters[3].kind == LetterKind::DetGenToeplitz);

  CHECK(MonomialWord::parse("P.P").normalized().empty());
  CHECK(MonomialWord::parse("P.P.T1").normalized().to_string() == "T1");
  CHECK(MonomialWord::parse("P.T1.P.P.T2*").normalized().to_string() ==
        "P.T1.T2*");
  // idempotent
  auto nw = MonomialWord::parse("P.P.P.T1").normalized();
  CHECK(nw.normalized() == nw);
}

TEST_CASE("word parse errors carry the parse code") {
  CHECK_THROWS_AS(MonomialWord::parse("T1..T2"), Error);
  CHECK_THROWS_AS(MonomialWord::parse("X1"), Error);
  CHECK_THROWS_AS(MonomialWord::parse("T1."), Error);
}

TEST_CASE("adjoint reverses and flips stars") {
  auto w = MonomialWord::parse("P.T1.T2*");
  CHECK(w.adjoint().to_string() == "T2.T1*.P");
}

TEST_CASE("segment_word recovers the cumulative profile") {
  auto seg = segment_word(MonomialWord::parse("P.T1.T1.P.T1"));
  CHECK(seg.p == 2);
  REQUIRE(seg.segments.size() == 2);
  CHECK(seg.segments[0].size() == 2);
  CHECK(seg.segments[1].size() == 1);
  CHECK(seg.cumulative == std::vector<std::size_t>{2, 3});

  // rotation: trace-invariant reassembly
  auto seg2 = segment_word(MonomialWord::parse("T1.P.T1"));
  CHECK(seg2.p == 1);
  CHECK(seg2.cumulative == std::vector<std::size_t>{2});

  auto seg3 = segment_word(MonomialWord::parse("P"));
  CHECK(seg3.p == 1);
  CHECK(seg3.cumulative == std::vector<std::size_t>{0});

  CHECK_THROWS_AS(segment_word(MonomialWord::parse("T1.T1")), Error);
}

TEST_CASE("deterministic symbol tails are honest") {
  auto geo = DeterministicSymbol::geometric(0.5);
  CHECK(geo.value(0) == cplx(1.0, 0.0));
  CHECK(geo.value(-2) == cplx(0.25, 0.0));
  CHECK(geo.total_abs() == doctest::Approx(3.0));
  // sum_{|k|>2} 2^-|k| = 2 * (1/8 + 1/16 + ...) = 1/2
  CHECK(geo.tail_abs(2) == doctest::Approx(0.5));
  auto k = geo.truncation_for(1e-12, 1 << 20);
  REQUIRE(k.has_value());
  CHECK(geo.tail_abs(*k) <= 1e-12);

  auto fin = DeterministicSymbol::finite({{0, {1, 0}}, {3, {0, 2}}});
  CHECK(fin.total_abs() == doctest::Approx(3.0));
  CHECK(fin.tail_abs(2) == doctest::Approx(2.0));
  CHECK(fin.tail_abs(3) == doctest::Approx(0.0));

  auto poly = DeterministicSymbol::poly_decay(2.0);
  double direct = 1.0;
  for (long long kk = 1; kk <= 2000000; ++kk)
    direct += 2.0 / std::pow(1.0 + double(kk), 2.0);
  CHECK(poly.total_abs() == doctest::Approx(direct).epsilon(1e-6));
  CHECK(poly.tail_abs(10) >= 0.0);
}
