#pragma once

#include <cstdint>
#include <string_view>

#include "crumbs/tensor.hpp"

namespace crumbs {

// 64-bit FNV-1a. Stable across runs and platforms; used for checkpoint
// fingerprints and for deriving sub-seeds from (seed, purpose) pairs.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

// Hash of a checkpoint's structure and tensor content (names, shapes, raw
// float bits). Metadata is excluded so provenance notes do not change identity.
uint64_t checkpoint_fingerprint(const Checkpoint& ckpt);

// Deterministic sub-seed derivation: one user-facing seed, many independent
// streams keyed by purpose strings.
inline uint64_t derive_seed(uint64_t seed, std::string_view purpose) {
    uint64_t h = fnv1a64(&seed, sizeof(seed));
    return fnv1a64(purpose, h);
}

} // namespace crumbs
