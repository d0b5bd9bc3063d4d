#include "rmtlab/pairings.hpp"

namespace rmtlab {

std::vector<PairPartition> enumerate_pairings(std::size_t m) {
  if (m % 2 != 0)
    throw Error(ErrorCode::OddSize, "enumerate_pairings: size must be even");
  std::vector<PairPartition> out;
  if (m == 0) {
    out.emplace_back();
    return out;
  }

  // Iterative depth-first matching: at each level, pair the smallest
  // unmatched element with every larger unmatched candidate. Keeping the
  // candidate loop ordered makes the enumeration canonical.
  struct Frame {
    std::size_t a;            // smallest unmatched at this level
    std::size_t next_choice;  // scan position for its partner
  };
  std::vector<std::size_t> partner(m, SIZE_MAX);
  std::vector<Frame> stack;

  auto smallest_unmatched = [&]() {
    for (std::size_t i = 0; i < m; ++i)
      if (partner[i] == SIZE_MAX) return i;
    return m;
  };

  stack.push_back({0, 1});
  while (!stack.empty()) {
    Frame& f = stack.back();
    // undo any pairing made at this level
    if (partner[f.a] != SIZE_MAX) {
      partner[partner[f.a]] = SIZE_MAX;
      partner[f.a] = SIZE_MAX;
    }
    std::size_t b = f.next_choice;
    while (b < m && partner[b] != SIZE_MAX) ++b;
    if (b >= m) {
      stack.pop_back();
      continue;
    }
    f.next_choice = b + 1;
    partner[f.a] = b;
    partner[b] = f.a;

    std::size_t a2 = smallest_unmatched();
    if (a2 == m) {
      PairPartition pp;
      pp.block_of.assign(m, 0);
      for (std::size_t i = 0; i < m; ++i) {
        if (partner[i] > i) {
          pp.block_of[i] = pp.block_of[partner[i]] = pp.blocks.size();
          pp.blocks.emplace_back(i, partner[i]);
        }
      }
      out.push_back(std::move(pp));
      // stay at this level; the next loop iteration advances the choice
    } else {
      stack.push_back({a2, a2 + 1});
    }
  }
  return out;
}

double double_factorial_odd(std::size_t k) {
  double v = 1.0;
  for (std::size_t i = 1; i <= k; ++i) v *= double(2 * i - 1);
  return v;
}

SignMaps sign_maps(const PairPartition& pi, const std::vector<int>& eps_prime,
                   const std::vector<std::size_t>& segment_of) {
  const std::size_t m = eps_prime.size();
  if (pi.block_of.size() != m)
    throw Error(ErrorCode::ShapeMismatch,
                "sign_maps: pairing and star vector sizes differ");
  if (!segment_of.empty() && segment_of.size() != m)
    throw Error(ErrorCode::ShapeMismatch,
                "sign_maps: segment structure size mismatch");

  SignMaps s;
  s.eps_prime = eps_prime;
  s.eps_pi.assign(m, 0);
  s.xi_pi.assign(m, 0);
  s.nu.assign(m, 0);
  s.eta_h.assign(m, 0);
  s.eta_tp.assign(m, 0);

  for (std::size_t i = 0; i < m; ++i) {
    std::size_t seg = segment_of.empty() ? 1 : segment_of[i];
    s.nu[i] = (seg % 2 == 0) ? 1 : -1;
  }
  for (const auto& [r, t] : pi.blocks) {
    s.eps_pi[r] = -1;
    s.eps_pi[t] = 1;
    s.xi_pi[r] = (eps_prime[r] == eps_prime[t]) ? -1 : 1;
    s.xi_pi[t] = 1;
    s.eta_h[r] = 1;
    s.eta_h[t] = (s.nu[r] == s.nu[t]) ? -1 : 1;
    s.eta_tp[r] = 1;
    s.eta_tp[t] =
        (eps_prime[r] * eps_prime[t] == s.nu[r] * s.nu[t]) ? -1 : 1;
  }
  return s;
}

}  // namespace rmtlab
