#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sfrf {

// SplitMix64 finalizer. Cheap, full-avalanche; used to spread seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for an independent child stream (one per tree, permutation,
// repetition, ...). Mixing both inputs keeps nearby stream ids and nearby
// master seeds from producing related streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream));
}

// Draws k distinct indices from [0, n) into out (partial Fisher-Yates).
// scratch is reused across calls to avoid reallocation; any permutation of
// 0..n-1 is a valid starting state and it remains one afterwards.
inline void sample_subset(int n, int k, std::mt19937_64& rng,
                          std::vector<int>& scratch, std::vector<int>& out) {
    if (static_cast<int>(scratch.size()) != n) {
        scratch.resize(n);
        for (int i = 0; i < n; ++i) scratch[i] = i;
    }
    out.resize(k);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(scratch[i], scratch[pick(rng)]);
        out[i] = scratch[i];
    }
}

}  // namespace sfrf
