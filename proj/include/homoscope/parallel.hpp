#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace homoscope {

// Worker count used by every parallel section. Defaults to HOMOSCOPE_THREADS
// when set, else 1. Results never depend on this value.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Calls fn(i) for every i in [0, n). Iterations must write only to
// index-owned storage; reductions happen afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// SplitMix64 finalizer, used to derive independent RNG streams from
// (seed, stream index) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace homoscope
