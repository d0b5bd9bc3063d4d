#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rmtlab/pairings.hpp"

using namespace rmtlab;

TEST_CASE("pairing counts follow the double factorial") {
  CHECK(enumerate_pairings(0).size() == 1);
  CHECK(enumerate_pairings(2).size() == 1);
  CHECK(enumerate_pairings(4).size() == 3);
  CHECK(enumerate_pairings(8).size() == 105);
  for (std::size_t k = 1; k <= 7; ++k)
    CHECK(double(enumerate_pairings(2 * k).size()) ==
          doctest::Approx(double_factorial_odd(k)));
  CHECK_THROWS_AS(enumerate_pairings(3), Error);
}

TEST_CASE("blocks are ordered and partition the ground set") {
  for (std::size_t m : {4u, 6u, 8u}) {
    for (const auto& pp : enumerate_pairings(m)) {
      CHECK(pp.blocks.size() == m / 2);
      std::vector<bool> seen(m, false);
      std::size_t prev_r = 0;
      bool first = true;
      for (const auto& [r, s] : pp.blocks) {
        CHECK(r < s);
        if (!first) CHECK(prev_r < r);
        first = false;
        prev_r = r;
        CHECK(!seen[r]);
        CHECK(!seen[s]);
        seen[r] = seen[s] = true;
      }
      for (bool b : seen) CHECK(b);
    }
  }
}

TEST_CASE("enumeration for 2k=4 is the canonical order") {
  auto ps = enumerate_pairings(4);
  REQUIRE(ps.size() == 3);
  CHECK(ps[0].blocks[0] == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(ps[0].blocks[1] == std::pair<std::size_t, std::size_t>{2, 3});
  CHECK(ps[1].blocks[0] == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(ps[2].blocks[0] == std::pair<std::size_t, std::size_t>{0, 3});
}

TEST_CASE("sign maps match their defining cases") {
  auto ps = enumerate_pairings(2);
  // eps = (1, *): xi = (1, 1)
  auto m = sign_maps(ps[0], {1, -1}, {});
  CHECK(m.eps_prime == std::vector<int>{1, -1});
  CHECK(m.xi_pi == std::vector<int>{1, 1});
  CHECK(m.eps_pi == std::vector<int>{-1, 1});
  // eps = (1, 1): xi(r) = -1
  auto m2 = sign_maps(ps[0], {1, 1}, {});
  CHECK(m2.xi_pi[0] == -1);
  CHECK(m2.xi_pi[1] == 1);
}

TEST_CASE("nu follows the segment parity") {
  // segments (k_1, k_2) = (2, 4): letters 1-2 in segment 1, 3-4 in segment 2
  auto ps = enumerate_pairings(4);
  std::vector<std::size_t> segs{1, 1, 2, 2};
  auto m = sign_maps(ps[0], {1, 1, 1, 1}, segs);
  CHECK(m.nu == std::vector<int>{-1, -1, 1, 1});
}

TEST_CASE("eta variants react to nu and eps agreement") {
  auto ps = enumerate_pairings(4);
  std::vector<std::size_t> segs{1, 2, 3, 4};  // one letter per segment
  // pairing (0,1)(2,3): nu = (-1, +1, -1, +1), all blocks nu-opposite
  auto m = sign_maps(ps[0], {1, 1, 1, 1}, segs);
  CHECK(m.eta_h[1] == 1);
  CHECK(m.eta_h[3] == 1);
  // pairing (0,2)(1,3): nu-equal blocks
  auto m2 = sign_maps(ps[1], {1, 1, 1, 1}, segs);
  CHECK(m2.eta_h[2] == -1);
  CHECK(m2.eta_h[3] == -1);
  // eps' equal and nu product +1 -> eta_tp closer = -1
  CHECK(m2.eta_tp[2] == -1);
  // eps' opposite flips it
  auto m3 = sign_maps(ps[1], {1, -1, -1, 1}, segs);
  CHECK(m3.eta_tp[2] == 1);
}

TEST_CASE("eps_pi sums to zero over every pairing") {
  for (const auto& pp : enumerate_pairings(6)) {
    auto m = sign_maps(pp, std::vector<int>(6, 1), {});
    int sum = 0;
    for (int v : m.eps_pi) sum += v;
    CHECK(sum == 0);
  }
}
