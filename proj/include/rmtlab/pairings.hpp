#pragma once

#include <cstddef>
#include <vector>

#include "rmtlab/errors.hpp"

namespace rmtlab {

// Pair partition of [2k], blocks (r_t, s_t) with r_t < s_t and r_1 < r_2 < ...
// Positions are 0-based internally.
struct PairPartition {
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  std::vector<std::size_t> block_of;  // position -> block index

  std::size_t k() const { return blocks.size(); }
  std::size_t partner(std::size_t i) const {
    const auto& b = blocks[block_of[i]];
    return b.first == i ? b.second : b.first;
  }
  bool is_opener(std::size_t i) const { return blocks[block_of[i]].first == i; }
};

// All (2k-1)!! pair partitions of {0..2k-1} in match-smallest-unmatched
// order; m = 0 yields the single empty pairing.
std::vector<PairPartition> enumerate_pairings(std::size_t m);

double double_factorial_odd(std::size_t k);  // (2k-1)!!

// The sign maps attached to a pairing: eps' from the star pattern, eps_pi
// (-1 on openers, +1 on closers), xi_pi, the segment parity signs nu, and
// the two eta variants (symmetric-Hankel and the segmented T/P one).
struct SignMaps {
  std::vector<int> eps_prime;  // +1 / -1 per position
  std::vector<int> eps_pi;     // -1 opener, +1 closer
  std::vector<int> xi_pi;      // xi(r) = (-1)^{delta_{eps'_r, eps'_s}}, xi(s)=1
  std::vector<int> nu;         // +1 if the position's segment index is even
  std::vector<int> eta_h;      // eta(r)=1, eta(s)=(-1)^{delta_{nu_r,nu_s}}
  std::vector<int> eta_tp;     // eta(s)=(-1)^{delta_{eps'eps', nu nu}}
};

// segment_of: 1-based segment index per position; pass all-ones (or empty)
// for a word with no P structure.
SignMaps sign_maps(const PairPartition& pi, const std::vector<int>& eps_prime,
                   const std::vector<std::size_t>& segment_of);

}  // namespace rmtlab
