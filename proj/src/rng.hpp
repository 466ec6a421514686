// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace score {

// Counter-based random stream (Philox4x32-10). A stream is fully identified
// by (seed, stream_id): the seed keys the generator, the stream id occupies
// the high half of the 128-bit counter, so distinct ids yield disjoint
// counter ranges and therefore independent sequences. Draw order is the only
// state; copies replay identically.
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}
    RngStream(uint64_t seed, uint64_t stream_id);

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_id_; }

    uint32_t next_u32();
    uint64_t next_u64();

    // Uniform on [0,1) with 53-bit resolution.
    double next_double();

    // Standard normal via the trigonometric Box-Muller transform; consumes
    // two uniforms per pair and caches the second variate.
    double next_normal();

    // Unbiased integer on [0, bound) by rejection. bound must be > 0.
    uint64_t next_below(uint64_t bound);

    // Poisson(lambda); exact inversion for small lambda, Hormann's PTRS
    // transformed rejection for lambda >= 10.
    long long next_poisson(double lambda);

    // Derived independent stream: same seed, child id mixed from this
    // stream's id and `child`. Used to fan out per-image / per-stage noise.
    RngStream substream(uint64_t child) const;

  private:
    void refill();

    uint64_t seed_ = 0;
    uint64_t stream_id_ = 0;
    uint32_t key_[2];
    uint32_t ctr_[4];
    uint32_t block_[4];
    int idx_ = 4;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

// SplitMix64 finalizer; used for stream-id derivation and file digests.
uint64_t mix64(uint64_t x);

}  // namespace score
