#pragma once

#include <cstdint>

namespace rmtlab {

// Counter-based generator: every (seed, replicate, lane) triple opens an
// independent stream, so sampling is reproducible no matter how work is
// scheduled across workers.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t lane);

  std::uint64_t next_u64();
  double next_uniform();        // (0,1)
  double next_normal();         // N(0,1), Box-Muller
  double next_rademacher();     // +1 or -1

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rmtlab
