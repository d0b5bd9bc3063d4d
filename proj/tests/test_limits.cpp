#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "regression_constants.hpp"
#include "rmtlab/limits.hpp"
#include "rmtlab/trace.hpp"

using namespace rmtlab;

namespace {

IntegOptions quick() {
  IntegOptions o;
  o.samples = 120000;
  o.qmc_replicates = 8;
  return o;
}

CorrelationSpec unit_complex() {
  CorrelationSpec s;
  s.sigma_x2 = 0.5;
  s.sigma_y2 = 0.5;
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

CorrelationSpec gen_spec() {
  CorrelationSpec s;
  s.flavor = Flavor::Generalized;
  s.sigma_x2 = 0.5;
  s.sigma_y2 = 0.5;
  return s;
}

std::vector<Letter> hankel_atoms(std::initializer_list<bool> stars) {
  std::vector<Letter> v;
  for (bool st : stars) {
    Letter l;
    l.kind = LetterKind::RandToeplitz;
    l.copy = 1;
    l.star = st;
    v.push_back(l);
  }
  return v;
}

}  // namespace

TEST_CASE("theta_plain branch values") {
  CorrelationSpec s = unit_complex();
  CHECK(theta_plain(s, 1, -1) == cplx(1.0, 0.0));  // sigma_x^2 + sigma_y^2
  CorrelationSpec s2 = unit_complex();
  s2.rho = {0, 0.4, 0, 0, 0.1, 0};
  CHECK(theta_plain(s2, 1, 1).real() == doctest::Approx(0.3));
  CHECK(theta_plain(s2, 1, 1).imag() == doctest::Approx(0.0));
  // hermitian identities force sigma_x^2 + sigma_y^2 in both branches
  CorrelationSpec h;
  h.flavor = Flavor::Hermitian;
  h.sigma_x2 = 0.5;
  h.sigma_y2 = 0.5;
  h.rho = {0.1, 0.5, -0.1, 0.1, -0.5, -0.1};
  CHECK(theta_plain(h, 1, 1) == cplx(1.0, 0.0));
  CHECK(theta_plain(h, -1, -1) == cplx(1.0, 0.0));
  CHECK(theta_plain(h, 1, -1) == cplx(1.0, 0.0));
}

TEST_CASE("theta_H and theta_TP branch tables") {
  CorrelationSpec s = unit_complex();
  s.rho[0] = 0.2;  // rho1
  // eps distinct, z_r = z_s > 0 -> sigma_x^2 + sigma_y^2
  CHECK(theta_H(s, 1, -1, true, true) == cplx(1.0, 0.0));
  // eps equal, z_r = z_s > 0 -> sigma_x^2 - sigma_y^2 + 2 i rho1
  CHECK(theta_H(s, 1, 1, true, true) == cplx(0.0, 0.4));

  CorrelationSpec t = unit_complex();
  t.rho = {0, 0.5, 0, 0, 0.1, 0};
  // nu equal, eps equal, z_r = -z_s > 0 -> rho2 - rho5
  CHECK(theta_TP(t, 1, 1, 1, false, true) == cplx(0.4, 0.0));
  // inconsistent selector combinations vanish
  CHECK(theta_TP(t, 1, 1, 1, true, true) == cplx(0.0, 0.0));
}

TEST_CASE("second moments: volumes and weights") {
  auto r = limit_moment_T(MonomialWord::parse("T1.T1*"), unit_complex(), quick());
  CHECK(r.value.real() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(r.value.imag()) < 1e-6);
  CHECK(r.se < 1e-3);
  REQUIRE(r.contributions.size() == 1);
  CHECK(r.contributions[0].volume == doctest::Approx(1.0).epsilon(1e-3));

  // distinct copies never pair
  auto r2 =
      limit_moment_T(MonomialWord::parse("T1.T2*"), unit_complex(), quick());
  CHECK(r2.value == cplx(0.0, 0.0));
  CHECK(r2.contributions.empty());

  CorrelationSpec c3 = unit_complex();
  c3.rho = {0, 0.4, 0.15, 0.15, 0.1, 0};
  auto r3 = limit_moment_T(MonomialWord::parse("T1.T1"), c3, quick());
  CHECK(r3.value.real() == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(r3.value.imag() == doctest::Approx(0.3).epsilon(1e-3));
}

TEST_CASE("odd words vanish exactly across the operations") {
  auto o = quick();
  CHECK(limit_moment_T(MonomialWord::parse("T1.T1.T1"), real_sym(), o).value ==
        cplx{});
  CHECK(limit_moment_TP(MonomialWord::parse("P.T1"), real_sym(), o).value ==
        cplx{});
  CHECK(limit_moment_TP(MonomialWord::parse("P.T1.T1"), real_sym(), o).value ==
        cplx{});
  CHECK(limit_moment_Hsym(hankel_atoms({false, false, false}), real_sym(), o)
            .value == cplx{});
  CHECK(limit_moment_Tgen(MonomialWord::parse("Tg1.Tg1.Tg1"), gen_spec(), o)
            .value == cplx{});
  std::map<int, SymbolSpec> ds;
  ds[1] = SymbolSpec{DeterministicSymbol::geometric(0.5), std::nullopt};
  CHECK(limit_moment_D(MonomialWord::parse("P.D1"), ds, o).value == cplx{});
  CorrelationSpec uc = unit_complex();
  CHECK(limit_moment_mixed(MonomialWord::parse("D1.T1"), &uc, ds, {}, o)
            .value == cplx{});
}

TEST_CASE("toeplitz fourth moment reproduces 8/3 with its pairing volumes") {
  auto r = limit_moment_T(MonomialWord::parse("T1.T1.T1.T1"), real_sym(),
                          quick());
  CHECK(r.value.real() == doctest::Approx(8.0 / 3.0).epsilon(2e-3));
  REQUIRE(r.contributions.size() == 3);
  double vols[3];
  for (int i = 0; i < 3; ++i) {
    vols[i] = r.contributions[i].volume;
    CHECK(vols[i] >= 0.0);
    CHECK(vols[i] <= 1.0);
    CHECK(r.contributions[i].weight.real() == doctest::Approx(1.0));
  }
  // canonical order: (12)(34), (13)(24) crossing, (14)(23)
  CHECK(vols[0] == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(vols[1] ==
        doctest::Approx(frozen::kToeplitzCrossVolume).epsilon(3e-3));
  CHECK(vols[2] == doctest::Approx(1.0).epsilon(2e-3));

  // grid oracle agrees
  IntegOptions g;
  g.method = IntegMethod::GridRiemann;
  g.grid_res = 120;
  auto rg = limit_moment_T(MonomialWord::parse("T1.T1.T1.T1"), real_sym(), g);
  CHECK(rg.value.real() == doctest::Approx(8.0 / 3.0).epsilon(5e-3));
}

TEST_CASE("value equals the contribution sum") {
  auto r = limit_moment_T(MonomialWord::parse("T1.T1*.T1.T1*"), unit_complex(),
                          quick());
  cplx sum = 0.0;
  for (const auto& c : r.contributions) sum += c.weight * c.volume;
  CHECK(std::abs(sum - r.value) < 1e-12);
}

TEST_CASE("hermitian reduction: every pairing weight is the total variance") {
  CorrelationSpec h;
  h.flavor = Flavor::Hermitian;
  h.sigma_x2 = 0.3;
  h.sigma_y2 = 0.7;
  h.rho = {0.0, 0.3, 0.0, 0.0, -0.7, 0.0};
  auto r = limit_moment_T(MonomialWord::parse("T1.T1*.T1.T1"), h, quick());
  for (const auto& c : r.contributions)
    CHECK(std::abs(c.weight - cplx(1.0, 0.0)) < 1e-9);
}

TEST_CASE("P-segmented limits") {
  auto o = quick();
  auto r = limit_moment_TP(MonomialWord::parse("P.T1.P.T1"), real_sym(), o);
  CHECK(r.value.real() == doctest::Approx(1.0).epsilon(2e-3));
  // rotation invariance of the routed word
  auto r2 = limit_moment_TP(MonomialWord::parse("T1.P.T1.P"), real_sym(), o);
  CHECK(r2.value.real() == doctest::Approx(r.value.real()).epsilon(1e-6));
}

TEST_CASE("symmetric hankel moments against the frozen constants") {
  auto o = quick();
  auto r2 = limit_moment_Hsym(hankel_atoms({false, false}), real_sym(), o);
  CHECK(r2.value.real() == doctest::Approx(1.0).epsilon(2e-3));
  auto r4 =
      limit_moment_Hsym(hankel_atoms({false, false, false, false}), real_sym(), o);
  CHECK(r4.value.real() ==
        doctest::Approx(frozen::kHankelFourthSym).epsilon(3e-3));

  CorrelationSpec iid;
  iid.flavor = Flavor::RealAsymmetric;
  iid.sigma_x2 = 1.0;
  iid.sigma_y2 = 0.0;
  auto r4i =
      limit_moment_Hsym(hankel_atoms({false, false, false, false}), iid, o);
  CHECK(r4i.value.real() ==
        doctest::Approx(frozen::kHankelFourthIid).epsilon(3e-3));
}

TEST_CASE("hankel weight branches: the direct form equals the P,T route") {
  // rho5 distinguishes the reflected-pair branches; rho6 does not enter
  CorrelationSpec s = unit_complex();
  s.rho = {0, 0, 0, 0, -0.4, 0.0};
  auto o = quick();
  auto direct =
      limit_moment_Hsym(hankel_atoms({false, false, false, false}), s, o);
  auto via_tp =
      limit_moment_TP(MonomialWord::parse("P.T1.P.T1.P.T1.P.T1"), s, o);
  CHECK(direct.value.real() ==
        doctest::Approx(via_tp.value.real()).epsilon(3e-3));
  // the crossing pairing carries (rho2 - rho5)^2 * (2/3)
  CHECK(direct.value.real() ==
        doctest::Approx(0.16 * 2.0 / 3.0).epsilon(5e-3));
  // simulation agrees (the branch with rho6 instead would give zero)
  EmpiricalOptions eo;
  eo.replicates = 150;
  eo.seed = 12;
  auto emp = empirical_phi(MonomialWord::parse("P.T1.P.T1.P.T1.P.T1"), s, {},
                           {}, 256, eo);
  CHECK(std::abs(emp.mean.real() - direct.value.real()) <
        3.0 * emp.se_re + 0.03);
}

TEST_CASE("deterministic sums are exact") {
  std::map<int, SymbolSpec> ds;
  ds[1] = SymbolSpec{DeterministicSymbol::geometric(0.5), std::nullopt};
  auto o = quick();
  auto r = limit_moment_D(MonomialWord::parse("D1.D1"), ds, o);
  CHECK(r.value.real() == doctest::Approx(5.0 / 3.0).epsilon(1e-9));
  CHECK(r.se == 0.0);
  CHECK(r.method == IntegMethod::ExactSum);
  CHECK(r.tail_bound <= 1e-10);

  // single diagonal symbol: every word evaluates to 1
  std::map<int, SymbolSpec> d0;
  d0[1] = SymbolSpec{DeterministicSymbol::finite({{0, {1, 0}}}), std::nullopt};
  for (const char* w : {"D1", "D1.D1", "D1.D1*.D1"})
    CHECK(limit_moment_D(MonomialWord::parse(w), d0, o).value ==
          cplx(1.0, 0.0));

  // unreachable tolerance surfaces as the tail error
  std::map<int, SymbolSpec> slow;
  slow[1] = SymbolSpec{DeterministicSymbol::poly_decay(1.2), std::nullopt};
  IntegOptions tight = o;
  tight.tail_tol = 1e-12;
  tight.max_truncation = 1 << 16;
  CHECK_THROWS_AS(
      limit_moment_D(MonomialWord::parse("D1.D1"), slow, tight), Error);
}

TEST_CASE("generalized deterministic sums mix the two laws by half") {
  std::map<int, SymbolSpec> dg;
  double c = 0.3;
  dg[1] = SymbolSpec{DeterministicSymbol::finite({{0, {1, 0}}}),
                     DeterministicSymbol::finite({{0, {c, 0}}})};
  auto o = quick();
  auto r = limit_moment_Dgen(MonomialWord::parse("Dg1.Dg1"), dg, o);
  CHECK(r.value.real() == doctest::Approx((1 + c * c) / 2).epsilon(1e-12));
  auto rp = limit_moment_Dgen(MonomialWord::parse("P.Dg1.P.Dg1"), dg, o);
  CHECK(rp.value.real() == doctest::Approx(c).epsilon(1e-12));
  // both match a single deterministic realization at even n exactly
  EmpiricalOptions eo;
  eo.replicates = 1;
  auto gs = gen_spec();
  auto e1 = empirical_phi(MonomialWord::parse("Dg1.Dg1"), gs, {}, dg, 600, eo);
  auto e2 =
      empirical_phi(MonomialWord::parse("P.Dg1.P.Dg1"), gs, {}, dg, 600, eo);
  CHECK(e1.mean.real() == doctest::Approx(r.value.real()).epsilon(1e-12));
  CHECK(e2.mean.real() == doctest::Approx(rp.value.real()).epsilon(1e-12));

  // equal laws reduce to the plain sum
  std::map<int, SymbolSpec> same;
  same[1] = SymbolSpec{DeterministicSymbol::geometric(0.5),
                       DeterministicSymbol::geometric(0.5)};
  std::map<int, SymbolSpec> plain;
  plain[1] = SymbolSpec{DeterministicSymbol::geometric(0.5), std::nullopt};
  auto a = limit_moment_Dgen(MonomialWord::parse("Dg1.Dg1"), same, o);
  auto b = limit_moment_D(MonomialWord::parse("D1.D1"), plain, o);
  CHECK(std::abs(a.value - b.value) < 1e-12);

  // opposite diagonal laws: the mixture keeps the sum at 1
  std::map<int, SymbolSpec> opp;
  opp[1] = SymbolSpec{DeterministicSymbol::finite({{0, {1, 0}}}),
                      DeterministicSymbol::finite({{0, {-1, 0}}})};
  auto ro = limit_moment_Dgen(MonomialWord::parse("Dg1.Dg1"), opp, o);
  CHECK(ro.value.real() == doctest::Approx(1.0).epsilon(1e-12));
  auto eo2 = empirical_phi(MonomialWord::parse("Dg1.Dg1"), gs, {}, opp, 600,
                           eo);
  CHECK(eo2.mean.real() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generalized toeplitz limits") {
  auto o = quick();
  auto r1 = limit_moment_Tgen(MonomialWord::parse("Tg1.Tg1*"), gen_spec(), o);
  CHECK(r1.value.real() == doctest::Approx(1.0).epsilon(2e-3));
  auto r2 = limit_moment_Tgen(MonomialWord::parse("Tg1.Tg1"), gen_spec(), o);
  CHECK(r2.value == cplx{});  // same-star blocks die
  auto r4 = limit_moment_Tgen(MonomialWord::parse("Tg1.Tg1*.Tg1.Tg1*"),
                              gen_spec(), o);
  CHECK(r4.value.real() ==
        doctest::Approx(frozen::kToeplitzGenFourth).epsilon(3e-3));
  auto rh = limit_moment_Hgen(hankel_atoms({false, true, false, true}),
                              gen_spec(), o);
  CHECK(rh.value.real() ==
        doctest::Approx(frozen::kHankelGenFourth).epsilon(3e-3));
}

TEST_CASE("gen audit weights integrate to the engine values") {
  // [Tg1, Tg1*]: integrate the printed weight over the k=1 cell by grid
  auto spec = gen_spec();
  std::vector<int> eps{1, -1};
  auto pairings = enumerate_pairings(2);
  const int res = 600;
  double total = 0.0;
  for (int i0 = 0; i0 < res; ++i0) {
    double z0 = (i0 + 0.5) / res;
    for (int i1 = 0; i1 < res; ++i1) {
      std::vector<double> zv{2.0 * (i1 + 0.5) / res - 1.0};
      total += gen_weight_T(spec, eps, pairings[0], 0, z0, zv).real();
    }
  }
  total *= 2.0 / double(res) / double(res);
  CHECK(total == doctest::Approx(1.0).epsilon(2e-3));

  // [Hg1, Hg1*]: same exercise with the hankel accumulators
  double th = 0.0;
  for (int i0 = 0; i0 < res; ++i0) {
    double z0 = (i0 + 0.5) / res;
    for (int i1 = 0; i1 < res; ++i1) {
      std::vector<double> zv{2.0 * (i1 + 0.5) / res - 1.0};
      th += gen_weight_H(spec, eps, pairings[0], 0, z0, zv).real();
    }
  }
  th *= 2.0 / double(res) / double(res);
  auto rh = limit_moment_Hgen(hankel_atoms({false, true}), gen_spec(), quick());
  CHECK(th == doctest::Approx(rh.value.real()).epsilon(5e-3));
}

TEST_CASE("gen weight guards") {
  auto spec = gen_spec();
  auto pairings = enumerate_pairings(2);
  // same star: the leading factor kills it
  std::vector<double> zv{0.4};
  CHECK(gen_weight_T(spec, {1, 1}, pairings[0], 0, 0.3, zv) == cplx{});
  // the closing letter's source misses both intervals
  std::vector<double> far{0.9};
  CHECK(gen_weight_T(spec, {1, -1}, pairings[0], 0, 0.5, far) == cplx{});
}

TEST_CASE("mixed factorization against both factors and simulation") {
  std::map<int, SymbolSpec> ds;
  ds[1] = SymbolSpec{DeterministicSymbol::geometric(0.5), std::nullopt};
  auto spec = unit_complex();
  auto o = quick();
  auto whole =
      limit_moment_mixed(MonomialWord::parse("D1.T1.T1*"), &spec, ds, {}, o);
  auto dpart = limit_moment_D(MonomialWord::parse("D1"), ds, o);
  auto tpart = limit_moment_T(MonomialWord::parse("T1.T1*"), spec, o);
  CHECK(std::abs(whole.value - dpart.value * tpart.value) < 1e-12);
  CHECK(whole.value.real() == doctest::Approx(1.0).epsilon(2e-3));

  // P-interleaved split
  auto w2 = limit_moment_mixed(MonomialWord::parse("P.D1.P.T1.T1*"), &spec, ds,
                               {}, o);
  EmpiricalOptions eo;
  eo.replicates = 150;
  eo.seed = 7;
  auto emp = empirical_phi(MonomialWord::parse("P.D1.P.T1.T1*"), spec, ds, {},
                           256, eo);
  CHECK(std::abs(emp.mean.real() - w2.value.real()) < 3.0 * emp.se_re + 0.05);
  CHECK(std::abs(w2.value.imag()) < 3.0 * (w2.se + 1e-4));
}

TEST_CASE("router dispatches by alphabet") {
  auto o = quick();
  auto spec = unit_complex();
  std::map<int, SymbolSpec> ds;
  ds[1] = SymbolSpec{DeterministicSymbol::geometric(0.5), std::nullopt};
  CHECK(limit_moment_auto(MonomialWord::parse("P.P"), &spec, {}, {}, o).value ==
        cplx(1.0, 0.0));
  CHECK(limit_moment_auto(MonomialWord::parse("P"), &spec, {}, {}, o).value ==
        cplx{});
  CHECK(limit_moment_auto(MonomialWord::parse("T1.T1*"), &spec, {}, {}, o)
            .value.real() == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(limit_moment_auto(MonomialWord::parse("D1.D1"), nullptr, ds, {}, o)
            .value.real() == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(limit_moment_auto(MonomialWord::parse("T1.Tg1"), &spec, {},
                                    {}, o),
                  Error);
}

TEST_CASE("self-adjoint words keep their imaginary part within noise") {
  CorrelationSpec s = unit_complex();
  s.rho = {0.2, 0.3, 0.1, -0.1, 0.1, 0.05};
  auto o = quick();
  auto r = limit_moment_T(MonomialWord::parse("T1.T1*.T1.T1*"), s, o);
  CHECK(std::abs(r.value.imag()) <= 3.0 * r.se + 1e-9);
}

TEST_CASE("oracle agreement on a small battery at n=512") {
  auto o = quick();
  EmpiricalOptions eo;
  eo.replicates = 120;
  eo.seed = 99;
  struct Case {
    const char* word;
    CorrelationSpec spec;
  };
  CorrelationSpec cplx_rho = unit_complex();
  cplx_rho.rho = {0.1, 0.3, 0.1, -0.1, 0.1, 0.05};
  std::vector<Case> battery = {
      {"T1.T1*", unit_complex()},
      {"T1.T1", cplx_rho},
      {"T1.T1.T1.T1", real_sym()},
      {"P.T1.P.T1", real_sym()},
      {"T1.T1*.T1.T1*", cplx_rho},
  };
  for (const auto& c : battery) {
    auto lim = limit_moment_auto(MonomialWord::parse(c.word), &c.spec, {}, {}, o);
    auto emp = empirical_phi(MonomialWord::parse(c.word), c.spec, {}, {}, 512, eo);
    double tol_re = 3.0 * (emp.se_re + lim.se) + 0.05;
    double tol_im = 3.0 * (emp.se_im + lim.se) + 0.05;
    CHECK(std::abs(emp.mean.real() - lim.value.real()) < tol_re);
    CHECK(std::abs(emp.mean.imag() - lim.value.imag()) < tol_im);
  }
}

TEST_CASE("generalized oracle agreement at n=384") {
  auto o = quick();
  EmpiricalOptions eo;
  eo.replicates = 100;
  eo.seed = 4;
  CorrelationSpec gs = gen_spec();
  gs.rho = {0.0, 0.3, 0.0, 0.0, 0.0, 0.2};
  for (const char* w : {"Tg1.Tg1*", "P.Tg1.P.Tg1", "Tg1.Tg1*.Tg1.Tg1*"}) {
    auto lim = limit_moment_auto(MonomialWord::parse(w), &gs, {}, {}, o);
    auto emp = empirical_phi(MonomialWord::parse(w), gs, {}, {}, 384, eo);
    CHECK(std::abs(emp.mean.real() - lim.value.real()) <
          3.0 * (emp.se_re + lim.se) + 0.06);
    CHECK(std::abs(emp.mean.imag() - lim.value.imag()) <
          3.0 * (emp.se_im + lim.se) + 0.06);
  }
}

TEST_CASE("generalized mixed words couple the z0 integral") {
  // a Dg letter between open blocks reads its branch at the shifted
  // position, not at z0
  auto o = quick();
  auto gs = gen_spec();
  std::map<int, SymbolSpec> dg;
  dg[1] = SymbolSpec{DeterministicSymbol::finite({{0, {1, 0}}}),
                     DeterministicSymbol::finite({{0, {0.0, 0}}})};
  auto lim = limit_moment_mixed(MonomialWord::parse("Tg1.Dg1.Tg1*"), &gs, {},
                                dg, o);
  EmpiricalOptions eo;
  eo.replicates = 120;
  eo.seed = 31;
  auto emp = empirical_phi(MonomialWord::parse("Tg1.Dg1.Tg1*"), gs, {}, dg,
                           384, eo);
  CHECK(std::abs(emp.mean.real() - lim.value.real()) <
        3.0 * (emp.se_re + lim.se) + 0.05);
}
